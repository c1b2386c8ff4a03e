"""Symbolic interpretation of traces over the memory-item model.

interpret() walks one trace: assignments append memory items, decisions
append resolved guards to the path constraint, external calls become stub
variables, and reaching the exit instantiates the post/testcase obligations
with __rtt_return bound to the returned expression and __rtt_initial
resolved from the entry snapshot table.

Reads and writes implement the aliasing-aware history semantics described
in memory.py; all side conditions produced while evaluating an expression
(dereference bounds, divisor != 0, shift ranges, pointer-subtraction base
equality) attach to the next branch entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import constraints as con
from .config import Config
from .errors import UnsupportedOperation
from .frontend.annotations import AnnotationSet
from .frontend.csyntax import (
    AnnotationKind,
    Assign,
    Bin,
    Call,
    CastExpr,
    CharLit,
    Cond,
    Expr,
    FloatLit,
    FunctionDef,
    Index,
    InitialRef,
    IntLit,
    Member,
    Name,
    ReturnRef,
    SizeofType,
    SourceUnit,
    StrLit,
    Un,
)
from .imr import Cfg, CfgEdge, IAssign, ICall, IMarker, IReturn
from .memory import (
    ApproxFlags,
    MemoryItem,
    NULL_BASE,
    Place,
    Region,
    RegionTable,
    base_eq_cond,
    offsets_overlap_cond,
    reinterpret,
)
from .stct import Trace
from .symexpr import (
    BinOp,
    Const,
    FALSE,
    Ptr,
    Role,
    Sym,
    SymExpr,
    TRUE,
    is_false,
    is_true,
    mk_binop,
    mk_cast,
    mk_ite,
    mk_range,
    mk_unop,
    negate,
    to_bool,
)
from .typesys import (
    BOOL,
    INT,
    UINT,
    ArrayType,
    CType,
    FloatType,
    IntType,
    PointerType,
    StructType,
    VoidType,
    usual_arith,
)

_ORDERING = ("<", "<=", ">", ">=")
_CMP = _ORDERING + ("==", "!=")


@dataclass
class StubPolicy:
    signature: FunctionDef
    permitted_globals: list[str]
    posts: list[Expr]


@dataclass
class Layout:
    """Per-function address space, input symbols and stub policies."""

    unit: SourceUnit
    fn: FunctionDef
    cfg: Cfg
    anns: AnnotationSet
    config: Config
    regions: RegionTable = field(init=False)
    stub_policies: dict[str, StubPolicy] = field(init=False)

    def __post_init__(self) -> None:
        self.regions = RegionTable(self.config.ptr_array_size)
        for g in self.unit.globals:
            self.regions.new_region(g.name, g.ctype, "global", True)
            if isinstance(g.ctype, PointerType):
                self.regions.pointer_input(g.name, g.ctype)
        for p in self.fn.params:
            self.regions.new_region(p.name, p.ctype, "param", True)
            if isinstance(p.ctype, PointerType):
                self.regions.pointer_input(p.name, p.ctype)
        for name, ctype in self.fn.locals_types.items():
            self.regions.new_region(name, ctype, "local", False)
        for name, ctype in self.cfg.inline_locals.items():
            self.regions.new_region(name, ctype, "local", False)
        for name, ctype in self.cfg.temps.items():
            self.regions.new_region(name, ctype, "temp", False)
        for name, ctype in self.anns.aux.items():
            self.regions.new_region(name, ctype, "aux", False)
        self.stub_policies = self._stub_policies()

    def _stub_policies(self) -> dict[str, StubPolicy]:
        out: dict[str, StubPolicy] = {}
        uut_modifies = list(self.anns.modifies or [])
        for fn in self.unit.functions:
            defined = fn.body is not None and not fn.annotation_only
            if defined or fn.name == self.fn.name:
                continue
            permitted: list[str] = []
            posts: list[Expr] = []
            if fn.annotation_only and fn.body is not None:
                from .frontend.annotations import extract_annotations

                callee_anns = extract_annotations(fn)
                if callee_anns.modifies is not None:
                    permitted.extend(callee_anns.modifies)
                posts = [p for p, _ in callee_anns.posts]
            for g in self.config.stub_globals.get(fn.name, []):
                if g not in permitted:
                    permitted.append(g)
            # globals the unit itself declares writable are fair game for
            # its stubs; this is what makes the annotated examples work
            # without extra configuration
            for g in uut_modifies:
                if g not in permitted:
                    permitted.append(g)
            out[fn.name] = StubPolicy(fn, permitted, posts)
        return out


@dataclass
class BranchEntry:
    edge: CfgEdge
    guard: SymExpr
    sides: list[SymExpr]
    folded: bool | None  # True: constant-true guard, no solver needed


@dataclass
class Obligation:
    kind: str  # post, assert, testcase, modifies
    expr: SymExpr | None  # symbolic instantiation (None for modifies)
    source: Expr | None  # annotation payload for driver rendering
    tags: list[str]
    line: int
    tc_index: int | None = None


@dataclass
class StubCallEvent:
    callee: str
    k: int
    ret: Sym | None
    outs: list[tuple[int, Sym, SymExpr]]  # (arg index, symbol, target pointer)
    globals_written: list[tuple[str, Sym]]
    line: int


@dataclass
class WriteEvent:
    base: SymExpr
    offset: SymExpr
    length: int
    line: int
    from_stub: bool = False


@dataclass
class PathState:
    layout: Layout
    step: int = 0
    items: list[MemoryItem] = field(default_factory=list)
    assumptions: list[SymExpr] = field(default_factory=list)
    branches: list[BranchEntry] = field(default_factory=list)
    tail_sides: list[SymExpr] = field(default_factory=list)
    obligations: list[Obligation] = field(default_factory=list)
    stub_counts: dict[str, int] = field(default_factory=dict)
    stub_calls: list[StubCallEvent] = field(default_factory=list)
    snapshots: dict[str, SymExpr] = field(default_factory=dict)
    writes: list[WriteEvent] = field(default_factory=list)
    testcase_pres: list[SymExpr] = field(default_factory=list)
    return_value: SymExpr | None = None
    infeasible_branch: int | None = None
    uninitialized_reads: list[str] = field(default_factory=list)
    flags: ApproxFlags = field(default_factory=ApproxFlags)
    complete: bool = False
    _pending: list[SymExpr] = field(default_factory=list)

    def add_side(self, cond: SymExpr) -> None:
        if not is_true(cond):
            self._pending.append(cond)

    def take_pending(self) -> list[SymExpr]:
        out = self._pending
        self._pending = []
        return out


class _Interp:
    """Evaluation engine bound to one PathState."""

    def __init__(self, state: PathState):
        self.state = state
        self.layout = state.layout
        self.regions = state.layout.regions
        self.config = state.layout.config
        self.overrides: dict[str, SymExpr] = {}
        self.obligation_mode = False
        self.return_override: SymExpr | None = None

    # ---- places -----------------------------------------------------------

    def resolve_place(self, e: Expr) -> Place:
        if isinstance(e, Name):
            region = self.regions.region_of(e.name)
            if isinstance(region.elem_type, StructType) and region.dim == 1:
                raise UnsupportedOperation(
                    f"whole-aggregate access to {e.name} (line {e.line})")
            if region.dim != 1:
                raise UnsupportedOperation(
                    f"whole-array access to {e.name} (line {e.line})")
            return Place(Const(region.base_id, UINT), Const(0, UINT),
                         region.elem_size, region.elem_type,
                         hint=e.name, elem_offset=Const(0, UINT))
        if isinstance(e, Index):
            base_v = self.eval(e.base)
            idx = self.as_uint(self.eval(e.index))
            return self._deref_place(base_v, idx, e.line, hint=_hint(e))
        if isinstance(e, Un) and e.op == "*":
            base_v = self.eval(e.operand)
            return self._deref_place(base_v, Const(0, UINT), e.line, hint=_hint(e))
        if isinstance(e, Member):
            return self._member_place(e)
        raise UnsupportedOperation(f"lvalue {type(e).__name__} (line {getattr(e, 'line', 0)})")

    def _deref_place(self, base_v: SymExpr, idx: SymExpr, line: int, hint: str) -> Place:
        if not isinstance(base_v, Ptr):
            raise UnsupportedOperation(f"dereference of a non-pointer value (line {line})")
        elem_t = base_v.ctype.pointee if isinstance(base_v.ctype, PointerType) else INT
        elem_off = mk_binop("+", base_v.offset, idx, UINT) \
            if not _is_zero(idx) else base_v.offset
        dim = self.regions.dim_for_base(base_v.base)
        if not self.obligation_mode:
            # out-of-bounds access is not an error: the bound becomes part
            # of the path constraint
            self.state.add_side(mk_range(elem_off, 0, dim))
        byte_off = _scale(elem_off, elem_t.size)
        return Place(base_v.base, byte_off, elem_t.size, elem_t,
                     hint=hint, elem_offset=elem_off)

    def _member_place(self, e: Member) -> Place:
        if e.arrow:
            base_v = self.eval(e.base)
            if not isinstance(base_v, Ptr):
                raise UnsupportedOperation(f"-> on a non-pointer (line {e.line})")
            st = base_v.ctype.pointee
            base = base_v.base
            start = _scale(base_v.offset, st.size)
            if not self.obligation_mode:
                self.state.add_side(
                    mk_range(base_v.offset, 0, self.regions.dim_for_base(base)))
        else:
            inner = self.resolve_struct_base(e.base)
            base, start, st = inner
        if not isinstance(st, StructType):
            raise UnsupportedOperation(f"member access on {st} (line {e.line})")
        f = st.field(e.field_name)
        bit = (f.bit_offset, f.bit_width) if f.bit_width is not None else None
        off = mk_binop("+", start, Const(f.byte_offset, UINT), UINT) \
            if f.byte_offset else start
        return Place(base, off, f.ctype.size, f.ctype, bit=bit, hint=_hint(e))

    def resolve_struct_base(self, e: Expr) -> tuple[SymExpr, SymExpr, CType]:
        if isinstance(e, Name):
            region = self.regions.region_of(e.name)
            return Const(region.base_id, UINT), Const(0, UINT), region.elem_type
        if isinstance(e, Index):
            base_v = self.eval(e.base)
            if not isinstance(base_v, Ptr):
                raise UnsupportedOperation(f"index on non-pointer (line {e.line})")
            st = base_v.ctype.pointee
            idx = self.as_uint(self.eval(e.index))
            elem_off = mk_binop("+", base_v.offset, idx, UINT)
            return base_v.base, _scale(elem_off, st.size), st
        if isinstance(e, Un) and e.op == "*":
            base_v = self.eval(e.operand)
            if not isinstance(base_v, Ptr):
                raise UnsupportedOperation(f"deref of non-pointer (line {e.line})")
            st = base_v.ctype.pointee
            return base_v.base, _scale(base_v.offset, st.size), st
        raise UnsupportedOperation(f"struct base {type(e).__name__}")

    # ---- reads ------------------------------------------------------------

    def read(self, place: Place) -> SymExpr:
        candidates: list[tuple[SymExpr, SymExpr | None]] = []  # (condition, value)
        for item in reversed(self.state.items):
            b = base_eq_cond(item.base, place.base)
            if is_false(b):
                continue
            o = offsets_overlap_cond(item, place)
            if o is not None and is_false(o):
                continue
            if o is None:
                cond: SymExpr = b  # partial overlap: imprecise value
                value: SymExpr | None = None
            else:
                cond = mk_binop("&&", b, o)
                value = item.value
            if is_true(cond) and value is not None and not candidates:
                return reinterpret(value, place.elem_type, self.state.flags)
            candidates.append((cond, value))
            if is_true(cond):
                break  # older items are fully shadowed
        terminated = bool(candidates) and is_true(candidates[-1][0]) \
            and candidates[-1][1] is not None
        if not candidates:
            return self._base_content(place)
        if len(candidates) > self.config.max_alias_candidates:
            self.state.flags.mark(
                f"alias case split over {len(candidates)} items at {place.hint}")
            return self._fresh_read(place)
        fresh = self._fresh_read(place)
        remaining: SymExpr = TRUE
        for cond, value in candidates:
            if value is None:
                self.state.flags.mark(f"partial overlap at {place.hint}")
                value = self.state.flags.fresh(place.elem_type)
            hit = mk_binop("&&", remaining, cond)
            adapted = reinterpret(value, place.elem_type, self.state.flags)
            self.state.add_side(
                mk_binop("||", negate(hit), _value_eq(fresh, adapted)))
            remaining = mk_binop("&&", remaining, negate(cond))
        if not terminated:
            self._constrain_base_content(fresh, place, remaining)
        return fresh

    def _fresh_read(self, place: Place) -> SymExpr:
        name = f"{place.hint or 'mem'}@read@{self.state.step}"
        if isinstance(place.elem_type, PointerType):
            ps = self.regions.pointer_input(name, place.elem_type)
            return Ptr(ps.base, ps.offset, place.elem_type)
        return Sym(name, place.elem_type, Role.FRESH_READ)

    def _base_content(self, place: Place) -> SymExpr:
        """Value of an untouched location: a test input or an uninitialized slot."""
        if isinstance(place.base, Const):
            region = self.regions.by_id.get(int(place.base.value))
            if region is None:
                raise UnsupportedOperation("access to an unknown region")
            if isinstance(place.offset, Const):
                if region.is_input:
                    return self._input_cell(region, int(place.offset.value), place)
                self.state.uninitialized_reads.append(place.hint)
                return self._fresh_read(place)
            fresh = self._fresh_read(place)
            self._constrain_base_content(fresh, place, TRUE)
            return fresh
        # dereference through a pointer whose base is still symbolic
        fresh = self._fresh_read(place)
        self._constrain_base_content(fresh, place, TRUE)
        return fresh

    def _input_cell(self, region: Region, byte_off: int, place: Place) -> SymExpr:
        if isinstance(place.elem_type, PointerType):
            sym = self.regions.cell_symbol(region, byte_off, place.bit)
            ps = self.regions.pointer_input(sym.name, place.elem_type)
            return Ptr(ps.base, ps.offset, place.elem_type)
        sym = self.regions.cell_symbol(region, byte_off, place.bit)
        return reinterpret(sym, place.elem_type, self.state.flags)

    def _constrain_base_content(self, fresh: SymExpr, place: Place,
                                remaining: SymExpr) -> None:
        """Tie a fresh read to the input cells it may land on."""
        if is_false(remaining):
            return
        if isinstance(place.base, Const):
            region = self.regions.by_id.get(int(place.base.value))
            if region is None or not region.is_input:
                if region is not None:
                    self.state.uninitialized_reads.append(place.hint)
                return
            pairs = [(place.base, region)]
        else:
            name = place.base.name.removesuffix("@baseAddress") \
                if isinstance(place.base, Sym) else ""
            ps = self.regions.pointer_inputs.get(name)
            if ps is None:
                self.state.flags.mark(f"unresolvable base for {place.hint}")
                return
            pairs = []
            for rid in self.regions.base_candidates(ps):
                if rid == NULL_BASE:
                    continue
                region = self.regions.by_id[rid]
                if region.is_input:
                    pairs.append((Const(rid, UINT), region))
        conds = 0
        for base_c, region in pairs:
            elem_size = max(region.elem_size, 1)
            for i in range(region.dim):
                if conds >= 64:
                    self.state.flags.mark(f"cell split overflow at {place.hint}")
                    return
                cell_off = i * elem_size
                cond = mk_binop("&&", remaining, mk_binop(
                    "&&",
                    base_eq_cond(place.base, base_c),
                    mk_binop("==", place.offset, Const(cell_off, UINT)),
                ))
                if is_false(cond):
                    continue
                cell = self._input_cell(
                    region, cell_off,
                    Place(base_c, Const(cell_off, UINT), place.length,
                          place.elem_type, place.bit, place.hint))
                self.state.add_side(
                    mk_binop("||", negate(cond), _value_eq(fresh, cell)))
                conds += 1

    # ---- writes -----------------------------------------------------------

    def write(self, place: Place, value: SymExpr, line: int,
              from_stub: bool = False) -> None:
        value = self.value_as(value, place.elem_type, line)
        if place.bit is not None and isinstance(place.elem_type, IntType):
            # bit fields store only their low bits; reads widen back
            narrow = IntType(place.bit[1], place.elem_type.signed,
                             f"{place.elem_type.name}:{place.bit[1]}")
            value = self.value_as(value, narrow, line)
        if isinstance(place.base, Const) and isinstance(place.offset, Const):
            for item in self.state.items:
                if not item.open:
                    continue
                if not (isinstance(item.base, Const)
                        and item.base.value == place.base.value):
                    continue
                if isinstance(item.offset, Const) and item.bit == place.bit:
                    a, b = int(item.offset.value), int(place.offset.value)
                    if not (a + item.length <= b or b + place.length <= a):
                        item.valid_to = self.state.step
        self.state.items.append(MemoryItem(
            place.base, place.offset, place.length, value,
            self.state.step, None, place.bit, line))
        self.state.writes.append(WriteEvent(
            place.base, place.offset, place.length, line, from_stub))

    # ---- expression evaluation ---------------------------------------------

    def eval(self, e: Expr) -> SymExpr:
        if isinstance(e, IntLit):
            return Const(e.value, e.ctype or INT)
        if isinstance(e, CharLit):
            return Const(e.value, INT)
        if isinstance(e, FloatLit):
            return Const(e.value, e.ctype or _float_default(e))
        if isinstance(e, StrLit):
            raise UnsupportedOperation(f"string literal (line {e.line})")
        if isinstance(e, SizeofType):
            return Const(e.target.size, UINT)
        if isinstance(e, Name):
            return self._eval_name(e)
        if isinstance(e, ReturnRef):
            if self.return_override is not None:
                return self.return_override
            if self.state.return_value is None:
                raise UnsupportedOperation("__rtt_return before any return")
            return self.state.return_value
        if isinstance(e, InitialRef):
            name = e.var.name
            if name not in self.state.snapshots:
                raise UnsupportedOperation(f"missing entry snapshot for {name}")
            return self.state.snapshots[name]
        if isinstance(e, Bin):
            return self._eval_bin(e)
        if isinstance(e, Un):
            return self._eval_un(e)
        if isinstance(e, Index):
            return self.read(self.resolve_place(e))
        if isinstance(e, Member):
            return self.read(self.resolve_place(e))
        if isinstance(e, CastExpr):
            return self._eval_cast(e)
        if isinstance(e, Cond):
            cond = to_bool(self.eval(e.cond))
            return mk_ite(cond, self.eval(e.then), self.eval(e.other), e.ctype)
        if isinstance(e, Call):
            raise UnsupportedOperation(
                f"function call inside an annotation expression (line {e.line})")
        if isinstance(e, Assign):
            raise UnsupportedOperation(
                f"assignment inside an annotation expression (line {e.line})")
        raise UnsupportedOperation(f"expression {type(e).__name__}")

    def _eval_name(self, e: Name) -> SymExpr:
        if e.name in self.overrides:
            return self.overrides[e.name]
        if e.binding is not None and e.binding.kind == "enum":
            return Const(e.binding.enum_value, INT)
        region = self.regions.by_name.get(e.name)
        if region is None:
            raise UnsupportedOperation(f"no storage for {e.name}")
        if region.dim != 1 or isinstance(e.ctype, ArrayType):
            # array designator decays to a pointer to its first element
            return Ptr(Const(region.base_id, UINT), Const(0, UINT),
                       PointerType(region.elem_type))
        return self.read(self.resolve_place(e))

    def _eval_bin(self, e: Bin) -> SymExpr:
        if e.op in ("&&", "||"):
            lhs = to_bool(self.eval(e.lhs))
            rhs = to_bool(self.eval(e.rhs))
            return mk_binop(e.op, lhs, rhs)
        lhs = self.eval(e.lhs)
        rhs = self.eval(e.rhs)
        if e.op in _CMP:
            return self._compare(e.op, lhs, rhs, e.line)
        if isinstance(lhs, Ptr) or isinstance(rhs, Ptr):
            return self._ptr_arith(e.op, lhs, rhs, e.line)
        common = e.ctype if e.ctype is not None and not isinstance(e.ctype, BOOL.__class__) \
            else usual_arith(lhs.ctype, rhs.ctype)
        if e.op in ("/", "%"):
            rhs_v = self.value_as(rhs, common, e.line)
            if isinstance(rhs_v, Const) and rhs_v.value == 0:
                self.state.add_side(FALSE)  # division by zero: path dies
            elif not isinstance(rhs_v, Const) and not self.obligation_mode:
                self.state.add_side(
                    mk_binop("!=", rhs_v, Const(0, common)))
            return mk_binop(e.op, self.value_as(lhs, common, e.line), rhs_v, common)
        if e.op in ("<<", ">>"):
            assert isinstance(common, IntType)
            amt = self.value_as(rhs, INT, e.line)
            if isinstance(amt, Const):
                if not 0 <= int(amt.value) < common.width:
                    self.state.add_side(FALSE)
            elif not self.obligation_mode:
                self.state.add_side(mk_range(amt, 0, common.width))
            return mk_binop(e.op, self.value_as(lhs, common, e.line), amt, common)
        return mk_binop(e.op, self.value_as(lhs, common, e.line),
                        self.value_as(rhs, common, e.line), common)

    def _compare(self, op: str, lhs: SymExpr, rhs: SymExpr, line: int) -> SymExpr:
        lp, rp = isinstance(lhs, Ptr), isinstance(rhs, Ptr)
        if lp or rp:
            if lp and rp:
                p1 = con.ptr_info(lhs, self.regions)
                p2 = con.ptr_info(rhs, self.regions)
                if self.obligation_mode:
                    return con.pointer_compare_semantic(p1, p2, op)
                return _raw_conj(con.pointer_compare(p1, p2, op).conjuncts)
            ptr, other, flipped = (lhs, rhs, False) if lp else (rhs, lhs, True)
            if isinstance(other, Const) and other.value == 0:
                o = op if not flipped else _swap_cmp(op)
                return con.pointer_null_compare(
                    con.ptr_info(ptr, self.regions), o)
            raise UnsupportedOperation(
                f"pointer compared against a non-pointer (line {line})")
        common = usual_arith(lhs.ctype, rhs.ctype) \
            if _arith_pair(lhs.ctype, rhs.ctype) else None
        if common is not None:
            lhs = self.value_as(lhs, common, line)
            rhs = self.value_as(rhs, common, line)
        return mk_binop(op, lhs, rhs, BOOL)

    def _ptr_arith(self, op: str, lhs: SymExpr, rhs: SymExpr, line: int) -> SymExpr:
        if op == "-" and isinstance(lhs, Ptr) and isinstance(rhs, Ptr):
            if lhs.ctype != rhs.ctype:
                raise UnsupportedOperation(f"mixed pointer subtraction (line {line})")
            self.state.add_side(base_eq_cond(lhs.base, rhs.base))
            diff = mk_binop("-", lhs.offset, rhs.offset, UINT)
            return mk_cast(diff, INT)
        if op in ("+", "-") and isinstance(lhs, Ptr) and not isinstance(rhs, Ptr):
            step = self.as_uint(rhs)
            new_off = mk_binop(op, lhs.offset, step, UINT)
            return Ptr(lhs.base, new_off, lhs.ctype)
        if op == "+" and isinstance(rhs, Ptr):
            step = self.as_uint(lhs)
            return Ptr(rhs.base, mk_binop("+", rhs.offset, step, UINT), rhs.ctype)
        raise UnsupportedOperation(f"pointer operator {op} (line {line})")

    def _eval_un(self, e: Un) -> SymExpr:
        if e.op == "&":
            place = self.resolve_place(e.operand)
            if place.elem_offset is None or place.bit is not None:
                raise UnsupportedOperation(f"cannot take this address (line {e.line})")
            return Ptr(place.base, place.elem_offset, PointerType(place.elem_type))
        if e.op == "*":
            return self.read(self.resolve_place(e))
        v = self.eval(e.operand)
        if e.op == "!":
            return negate(to_bool(v))
        if isinstance(v, Ptr):
            raise UnsupportedOperation(f"unary {e.op} on a pointer (line {e.line})")
        return mk_unop(e.op, self.value_as(v, e.ctype, e.line) if e.ctype else v, e.ctype)

    def _eval_cast(self, e: CastExpr) -> SymExpr:
        v = self.eval(e.operand)
        t = e.target
        if isinstance(v, Ptr):
            if isinstance(t, PointerType):
                if t.pointee == v.ctype.pointee or isinstance(t.pointee, VoidType) \
                        or t.pointee.size == v.ctype.pointee.size:
                    return Ptr(v.base, v.offset, t)
                raise UnsupportedOperation(
                    f"pointer cast changing element size (line {e.line})")
            raise UnsupportedOperation(f"cast of pointer to {t} (line {e.line})")
        if isinstance(t, PointerType):
            if isinstance(v, Const) and v.value == 0:
                return Ptr(Const(NULL_BASE, UINT), Const(0, UINT), t)
            raise UnsupportedOperation(f"integer-to-pointer cast (line {e.line})")
        return self.value_as(v, t, e.line)

    # ---- conversions ---------------------------------------------------------

    def value_as(self, v: SymExpr, want: CType | None, line: int = 0) -> SymExpr:
        if want is None or v.ctype == want:
            return v
        if isinstance(want, PointerType):
            if isinstance(v, Ptr):
                return Ptr(v.base, v.offset, want) if v.ctype != want else v
            if isinstance(v, Const) and v.value == 0:
                return Ptr(Const(NULL_BASE, UINT), Const(0, UINT), want)
            if v.ctype is BOOL:
                raise UnsupportedOperation(f"boolean used as pointer (line {line})")
            raise UnsupportedOperation(f"integer used as pointer (line {line})")
        if isinstance(v, Ptr):
            raise UnsupportedOperation(f"pointer converted to {want} (line {line})")
        if v.ctype is BOOL and isinstance(want, (IntType, FloatType)):
            return mk_ite(v, Const(1, want), Const(0, want), want)
        return mk_cast(v, want)

    def as_uint(self, v: SymExpr) -> SymExpr:
        return self.value_as(v, UINT)


def _value_eq(a: SymExpr, b: SymExpr) -> SymExpr:
    if isinstance(a, Ptr) and isinstance(b, Ptr):
        return mk_binop("&&",
                        mk_binop("==", a.base, b.base),
                        mk_binop("==", a.offset, b.offset))
    if isinstance(a, Ptr) or isinstance(b, Ptr):
        p = a if isinstance(a, Ptr) else b
        o = b if isinstance(a, Ptr) else a
        return mk_binop("&&",
                        mk_binop("==", p.base, Const(NULL_BASE, UINT)),
                        mk_binop("==", o, Const(0, o.ctype)))
    common = usual_arith(a.ctype, b.ctype) if _arith_pair(a.ctype, b.ctype) else None
    if common is not None:
        return mk_binop("==", mk_cast(a, common), mk_cast(b, common))
    return mk_binop("==", a, b)


def _raw_conj(parts: list[SymExpr]) -> SymExpr:
    """Right-associated conjunction that keeps folded-true members."""
    if not parts:
        return TRUE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = BinOp("&&", p, out, BOOL)
    return out


def _swap_cmp(op: str) -> str:
    return {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "==", "!=": "!="}[op]


def _arith_pair(a: CType, b: CType) -> bool:
    return isinstance(a, (IntType, FloatType)) and isinstance(b, (IntType, FloatType))


def _is_zero(e: SymExpr) -> bool:
    return isinstance(e, Const) and e.value == 0


def _scale(elem_off: SymExpr, size: int) -> SymExpr:
    if size == 1:
        return elem_off
    return mk_binop("*", elem_off, Const(size, UINT), UINT)


def _float_default(e: FloatLit):
    from .typesys import DOUBLE, FLOAT

    return FLOAT if e.is_single else DOUBLE


def _hint(e: Expr) -> str:
    from .frontend.writer import expr_to_c

    try:
        return expr_to_c(e)
    except TypeError:
        return "mem"


# ---------------------------------------------------------------------------
# Trace interpretation


def interpret(trace: Trace, cfg: Cfg, anns: AnnotationSet, layout: Layout,
              active_testcase: int | None = None) -> PathState:
    """Symbolically execute one trace and return the resulting path state."""
    state = PathState(layout)
    interp = _Interp(state)
    _take_snapshots(state, interp, anns)
    _assume_preconditions(state, interp, anns, active_testcase)
    node_ids = [sn.node_id for sn in trace.nodes]
    for pos, nid in enumerate(node_ids):
        node = cfg.node(nid)
        for instr in node.instrs:
            state.step += 1
            _exec_instr(state, interp, instr)
        if pos + 1 < len(node_ids):
            edge = trace.edges[pos]
            if edge.conditional:
                _take_branch(state, interp, cfg, edge)
                if state.infeasible_branch is not None:
                    return state
    state.tail_sides.extend(state.take_pending())
    if trace.complete:
        state.complete = True
        _instantiate_obligations(state, interp, anns)
    return state


def eval_guard(state: PathState, cond_ast: Expr, polarity: bool
               ) -> tuple[SymExpr, list[SymExpr]]:
    """Resolve a branch condition; returns (guard, side conditions)."""
    interp = _Interp(state)
    saved = state._pending
    state._pending = []
    guard = _polarized_guard(interp, cond_ast, polarity)
    sides = state._pending
    state._pending = saved
    return guard, sides


_AST_FLIP = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}


def _polarized_guard(interp: _Interp, cond: Expr, polarity: bool) -> SymExpr:
    """Evaluate a decision condition under the edge's polarity.

    The negated side of a comparison flips the operator before pointer
    expansion: the false branch of p1 < p2 is the same-region comparison
    p1 >= p2, not the disjunctive negation of the in-bounds formula.
    """
    if not polarity and isinstance(cond, Bin) and cond.op in _AST_FLIP:
        flipped = Bin(_AST_FLIP[cond.op], cond.lhs, cond.rhs, cond.line)
        flipped.ctype = cond.ctype
        return to_bool(interp.eval(flipped))
    value = interp.eval(cond)
    guard = to_bool(value)
    if not polarity:
        guard = negate(guard)
    return guard


def _take_snapshots(state: PathState, interp: _Interp, anns: AnnotationSet) -> None:
    for name in anns.initial_vars:
        expr = Name(name)
        region = state.layout.regions.by_name.get(name)
        if region is None:
            raise UnsupportedOperation(f"__rtt_initial of unknown variable {name}")
        expr.ctype = region.elem_type if region.dim == 1 else \
            ArrayType(region.elem_type, region.dim)
        state.snapshots[name] = interp.eval(expr)
    state._pending = []  # entry reads carry no feasibility conditions


def _assume_preconditions(state: PathState, interp: _Interp, anns: AnnotationSet,
                          active_testcase: int | None) -> None:
    for pre in anns.pres:
        expr = to_bool(interp.eval(pre))
        state.assumptions.extend(state.take_pending())
        state.assumptions.append(expr)
    for i, tc in enumerate(anns.testcases):
        expr = to_bool(interp.eval(tc.pre))
        sides = state.take_pending()
        state.testcase_pres.append(expr)
        if active_testcase == i:
            state.assumptions.extend(sides)
            state.assumptions.append(expr)
    state.assumptions = [a for a in state.assumptions if not is_true(a)]


def _exec_instr(state: PathState, interp: _Interp, instr) -> None:
    if isinstance(instr, IAssign):
        value = interp.eval(instr.value)
        place = interp.resolve_place(instr.place)
        interp.write(place, value, instr.line)
        return
    if isinstance(instr, ICall):
        from .stubs import intercept_call

        intercept_call(state, interp, instr)
        return
    if isinstance(instr, IReturn):
        if instr.value is not None:
            value = interp.eval(instr.value)
            state.return_value = interp.value_as(
                value, state.layout.fn.return_type, instr.line)
        return
    if isinstance(instr, IMarker):
        _exec_marker(state, interp, instr)
        return
    raise UnsupportedOperation(f"instruction {type(instr).__name__}")


def _exec_marker(state: PathState, interp: _Interp, instr: IMarker) -> None:
    payload = instr.payload
    if instr.kind is AnnotationKind.ASSERT:
        interp.obligation_mode = True
        try:
            expr = to_bool(interp.eval(payload.exprs[0]))
        finally:
            interp.obligation_mode = False
        state.take_pending()
        state.obligations.append(Obligation(
            "assert", expr, payload.exprs[0], [], instr.line))
        return
    if instr.kind is AnnotationKind.ASSIGN:
        assign = payload.exprs[0]
        if not isinstance(assign, Assign) or assign.op != "=":
            raise UnsupportedOperation(
                f"__rtt_assign payload must be a plain assignment (line {instr.line})")
        value = interp.eval(assign.value)
        place = interp.resolve_place(assign.target)
        interp.write(place, value, instr.line)
        return
    raise UnsupportedOperation(f"marker {instr.kind.value}")


def _take_branch(state: PathState, interp: _Interp, cfg: Cfg, edge: CfgEdge) -> None:
    cond = cfg.node(edge.src).cond
    assert cond is not None and edge.polarity is not None
    guard = _polarized_guard(interp, cond, edge.polarity)
    sides = state.take_pending()
    folded: bool | None = None
    if is_true(guard):
        folded = True
    elif is_false(guard):
        folded = False
    state.branches.append(BranchEntry(edge, guard, sides, folded))
    if folded is False or any(is_false(s) for s in sides):
        state.infeasible_branch = len(state.branches) - 1


def _instantiate_obligations(state: PathState, interp: _Interp,
                             anns: AnnotationSet) -> None:
    interp.obligation_mode = True
    try:
        for post, line in anns.posts:
            expr = to_bool(interp.eval(post))
            state.take_pending()
            state.obligations.append(Obligation("post", expr, post, [], line))
        for i, tc in enumerate(anns.testcases):
            expr = to_bool(interp.eval(tc.post))
            state.take_pending()
            state.obligations.append(Obligation(
                "testcase", expr, tc.post, list(tc.tags), tc.line, tc_index=i))
    finally:
        interp.obligation_mode = False
