"""Concrete replay of a CFG under a solver model and stub schedule.

This is the oracle side of the pipeline: it interprets instructions with
plain concrete values (two's-complement ints, floats, (region, offset)
pointers), follows whichever edge each decision evaluates to, and reports
the executed edge sequence plus obligation outcomes. The harness compares
the edge sequence against the symbolic trace; any mismatch is a soundness
bug and the test case is rejected.

The implementation deliberately avoids the symbolic expression machinery;
it shares only the C arithmetic helpers from typesys.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .frontend.annotations import AnnotationSet
from .frontend.csyntax import (
    Assign,
    Bin,
    CastExpr,
    CharLit,
    Cond,
    Expr,
    FloatLit,
    Index,
    InitialRef,
    IntLit,
    Member,
    Name,
    ReturnRef,
    SizeofType,
    StrLit,
    Un,
)
from .frontend.csyntax import AnnotationKind
from .imr import Cfg, IAssign, ICall, IMarker, IReturn
from .symex import Layout
from .typesys import (
    ArrayType,
    CType,
    FloatType,
    IntType,
    PointerType,
    StructType,
    VoidType,
    c_div,
    c_rem,
    usual_arith,
    wrap_int,
)


class ReplayError(Exception):
    """The model drove the concrete interpreter somewhere impossible."""


@dataclass(frozen=True)
class CPtr:
    base: int  # region id; 0 is null
    offset: int  # elements


Value = int | float | CPtr


@dataclass
class ObligationOutcome:
    kind: str  # post, assert, testcase
    passed: bool
    tags: list[str]
    line: int
    tc_index: int | None = None


@dataclass
class ReplayResult:
    edges: list[int]
    returned: Value | None
    outcomes: list[ObligationOutcome]
    applicable_testcases: list[int]
    aux_final: dict[str, Value]
    steps: int


@dataclass
class StubScheduleEntry:
    ret: Value | None = None
    outs: dict[int, Value] = field(default_factory=dict)
    globals_set: dict[str, Value] = field(default_factory=dict)


class _Memory:
    """Concrete cells per region, keyed by byte offset and bit-field slot."""

    def __init__(self, layout: Layout):
        self.layout = layout
        self.cells: dict[tuple[int, int, tuple[int, int] | None], Value] = {}

    def read(self, base: int, byte_off: int, bit: tuple[int, int] | None,
             ctype: CType) -> Value:
        key = (base, byte_off, bit)
        if key in self.cells:
            return self.cells[key]
        if isinstance(ctype, PointerType):
            return CPtr(0, 0)
        return 0.0 if isinstance(ctype, FloatType) else 0

    def write(self, base: int, byte_off: int, bit: tuple[int, int] | None,
              ctype: CType, value: Value) -> None:
        self.cells[(base, byte_off, bit)] = _store_convert(value, ctype, bit)


def _store_convert(value: Value, ctype: CType, bit: tuple[int, int] | None) -> Value:
    if isinstance(ctype, PointerType):
        if isinstance(value, CPtr):
            return value
        if value == 0:
            return CPtr(0, 0)
        raise ReplayError("integer stored into a pointer slot")
    if isinstance(value, CPtr):
        raise ReplayError(f"pointer stored into a {ctype} slot")
    if isinstance(ctype, FloatType):
        from .symexpr import _round_float

        return _round_float(float(value), ctype)
    assert isinstance(ctype, IntType)
    v = wrap_int(int(value), ctype)
    if bit is not None:
        _, width = bit
        mask = (1 << width) - 1
        v &= mask
        if ctype.signed and v & (1 << (width - 1)):
            v -= 1 << width
    return v


class _Replayer:
    def __init__(self, cfg: Cfg, layout: Layout, anns: AnnotationSet,
                 model: dict[str, int | float],
                 schedule: dict[str, list[StubScheduleEntry]],
                 max_steps: int = 200000):
        self.cfg = cfg
        self.layout = layout
        self.anns = anns
        self.model = model
        self.schedule = schedule
        self.mem = _Memory(layout)
        self.stub_cursor: dict[str, int] = {}
        self.returned: Value | None = None
        self.outcomes: list[ObligationOutcome] = []
        self.snapshots: dict[str, Value] = {}
        self.max_steps = max_steps
        self.steps = 0
        self._init_inputs()

    # -- input initialization -------------------------------------------------

    def _init_inputs(self) -> None:
        regions = self.layout.regions
        for region in regions.declared_order:
            if region.kind not in ("param", "global") or region.dim != 1:
                continue
            if isinstance(region.elem_type, (PointerType, StructType)):
                continue
            if region.name in self.model:
                self.mem.write(region.base_id, 0, None, region.elem_type,
                               self.model[region.name])
        for key, sym in regions.cell_syms.items():
            base_id, byte_off, b0, b1 = key
            bit = None if (b0, b1) == (-1, -1) else (b0, b1)
            if isinstance(sym.ctype, PointerType):
                self.mem.write(base_id, byte_off, bit, sym.ctype,
                               self._pointer_value(sym.name, sym.ctype))
            elif sym.name in self.model:
                self.mem.write(base_id, byte_off, bit, sym.ctype,
                               self.model[sym.name])
        # pointer inputs may exist without a registered cell read
        for name, ps in regions.pointer_inputs.items():
            region = regions.by_name.get(name)
            if region is None or region.dim != 1:
                continue
            ptr_t = PointerType(ps.pointee)
            self.mem.write(region.base_id, 0, None, ptr_t,
                           self._pointer_value(name, ptr_t))

    def _pointer_value(self, name: str, ctype: PointerType) -> CPtr:
        ps = self.layout.regions.pointer_inputs.get(name)
        if ps is None:
            return CPtr(0, 0)
        base = int(self.model.get(ps.base.name, ps.fresh_region.base_id))
        offset = int(self.model.get(ps.offset.name, 0))
        if base == 0:
            return CPtr(0, 0)
        return CPtr(base, offset)

    # -- main loop ----------------------------------------------------------------

    def run(self) -> ReplayResult:
        self._take_snapshots()
        applicable = [
            i for i, tc in enumerate(self.anns.testcases)
            if _truthy(self.eval(tc.pre))
        ]
        edges: list[int] = []
        nid = self.cfg.entry
        while nid != self.cfg.exit:
            self.steps += 1
            if self.steps > self.max_steps:
                raise ReplayError("replay step limit exceeded")
            node = self.cfg.node(nid)
            for instr in node.instrs:
                self._exec(instr)
            outs = self.cfg.out_edges(nid)
            if not outs:
                raise ReplayError(f"node n{nid} has no successors")
            if node.is_decision:
                taken = _truthy(self.eval(node.cond))
                edge = outs[0] if taken else outs[1]
            else:
                edge = outs[0]
            edges.append(edge.eid)
            nid = edge.dst
        self._check_exit_obligations(applicable)
        aux_final = {
            name: self._read_var(name)
            for name in self.anns.aux
        }
        return ReplayResult(edges, self.returned, self.outcomes, applicable,
                            aux_final, self.steps)

    def _take_snapshots(self) -> None:
        for name in self.anns.initial_vars:
            self.snapshots[name] = self._read_var(name)

    def _read_var(self, name: str) -> Value:
        region = self.layout.regions.by_name[name]
        if region.dim != 1:
            return CPtr(region.base_id, 0)
        return self.mem.read(region.base_id, 0, None, region.elem_type)

    # -- instructions ---------------------------------------------------------------

    def _exec(self, instr) -> None:
        if isinstance(instr, IAssign):
            value = self.eval(instr.value)
            self._store(instr.place, value)
            return
        if isinstance(instr, ICall):
            self._stub_call(instr)
            return
        if isinstance(instr, IReturn):
            if instr.value is not None:
                value = self.eval(instr.value)
                self.returned = _store_convert(
                    value, self.layout.fn.return_type, None) \
                    if not isinstance(self.layout.fn.return_type, VoidType) else value
            return
        if isinstance(instr, IMarker):
            if instr.kind is AnnotationKind.ASSIGN:
                payload = instr.payload.exprs[0]
                assert isinstance(payload, Assign)
                self._store(payload.target, self.eval(payload.value))
            elif instr.kind is AnnotationKind.ASSERT:
                ok = _truthy(self.eval(instr.payload.exprs[0]))
                self.outcomes.append(
                    ObligationOutcome("assert", ok, [], instr.line))
            return
        raise ReplayError(f"instruction {type(instr).__name__}")

    def _stub_call(self, instr: ICall) -> None:
        callee = instr.callee
        k = self.stub_cursor.get(callee, 0)
        self.stub_cursor[callee] = k + 1
        entries = self.schedule.get(callee, [])
        entry = entries[k] if k < len(entries) else StubScheduleEntry()
        sig = self.layout.stub_policies[callee].signature
        for i, (param, arg) in enumerate(zip(sig.params, instr.args)):
            if not isinstance(param.ctype, PointerType) or param.ctype.const_pointee:
                continue
            if isinstance(param.ctype.pointee, (StructType, VoidType)):
                continue
            target = self.eval(arg)
            if isinstance(target, CPtr) and target.base != 0:
                value = entry.outs.get(i, 0)
                self._store_ptr(target, param.ctype.pointee, value)
        for gname, value in entry.globals_set.items():
            region = self.layout.regions.by_name.get(gname)
            if region is not None and region.dim == 1:
                self.mem.write(region.base_id, 0, None, region.elem_type, value)
        if instr.result is not None:
            ret = entry.ret if entry.ret is not None else 0
            self._store(instr.result, ret)

    def _check_exit_obligations(self, applicable: list[int]) -> None:
        for post, line in self.anns.posts:
            self.outcomes.append(ObligationOutcome(
                "post", _truthy(self.eval(post)), [], line))
        for i, tc in enumerate(self.anns.testcases):
            if i not in applicable:
                continue
            self.outcomes.append(ObligationOutcome(
                "testcase", _truthy(self.eval(tc.post)), list(tc.tags),
                tc.line, tc_index=i))

    # -- expression evaluation ----------------------------------------------------

    def eval(self, e: Expr) -> Value:
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, CharLit):
            return e.value
        if isinstance(e, FloatLit):
            return e.value
        if isinstance(e, StrLit):
            raise ReplayError("string literal")
        if isinstance(e, SizeofType):
            return e.target.size
        if isinstance(e, Name):
            return self._load_name(e)
        if isinstance(e, ReturnRef):
            if self.returned is None:
                raise ReplayError("__rtt_return before return")
            return self.returned
        if isinstance(e, InitialRef):
            return self.snapshots[e.var.name]
        if isinstance(e, Bin):
            return self._bin(e)
        if isinstance(e, Un):
            return self._un(e)
        if isinstance(e, Index):
            base = self.eval(e.base)
            idx = int(self.eval(e.index))  # type: ignore[arg-type]
            return self._load_ptr(base, idx, e.ctype)
        if isinstance(e, Member):
            return self._load_member(e)
        if isinstance(e, CastExpr):
            return self._cast(self.eval(e.operand), e.operand.ctype, e.target)
        if isinstance(e, Cond):
            return self.eval(e.then if _truthy(self.eval(e.cond)) else e.other)
        raise ReplayError(f"expression {type(e).__name__}")

    def _load_name(self, e: Name) -> Value:
        if e.binding is not None and e.binding.kind == "enum":
            return e.binding.enum_value
        region = self.layout.regions.by_name.get(e.name)
        if region is None:
            raise ReplayError(f"no storage for {e.name}")
        if region.dim != 1 or isinstance(e.ctype, ArrayType):
            return CPtr(region.base_id, 0)
        return self.mem.read(region.base_id, 0, None, region.elem_type)

    def _load_ptr(self, base: Value, idx: int, ctype: CType) -> Value:
        if not isinstance(base, CPtr):
            raise ReplayError("dereference of a non-pointer")
        if base.base == 0:
            raise ReplayError("null dereference")
        region = self.layout.regions.by_id.get(base.base)
        if region is None:
            raise ReplayError(f"dereference into unknown region {base.base}")
        off = base.offset + idx
        if not 0 <= off < region.dim:
            raise ReplayError(
                f"out-of-bounds access: offset {off} in {region.name} (dim {region.dim})")
        elem = ctype if ctype is not None else region.elem_type
        return self.mem.read(base.base, off * region.elem_size, None, elem)

    def _store_ptr(self, ptr: CPtr, elem: CType, value: Value) -> None:
        region = self.layout.regions.by_id.get(ptr.base)
        if region is None:
            raise ReplayError(f"write into unknown region {ptr.base}")
        if not 0 <= ptr.offset < region.dim:
            raise ReplayError("out-of-bounds stub output write")
        self.mem.write(ptr.base, ptr.offset * region.elem_size, None, elem, value)

    def _member_slot(self, e: Member) -> tuple[int, int, tuple[int, int] | None, CType]:
        if e.arrow:
            base = self.eval(e.base)
            if not isinstance(base, CPtr) or base.base == 0:
                raise ReplayError("-> through null or non-pointer")
            st = e.base.ctype.pointee if isinstance(e.base.ctype, PointerType) else None
            region = self.layout.regions.by_id.get(base.base)
            if region is None:
                raise ReplayError("-> into unknown region")
            st = st or region.elem_type
            start = base.offset * region.elem_size
            base_id = base.base
        elif isinstance(e.base, Name):
            region = self.layout.regions.by_name[e.base.name]
            st = region.elem_type
            start = 0
            base_id = region.base_id
        else:
            raise ReplayError("unsupported struct access")
        if not isinstance(st, StructType):
            raise ReplayError("member access on a non-struct")
        f = st.field(e.field_name)
        bit = (f.bit_offset, f.bit_width) if f.bit_width is not None else None
        return base_id, start + f.byte_offset, bit, f.ctype

    def _load_member(self, e: Member) -> Value:
        base_id, off, bit, ctype = self._member_slot(e)
        return self.mem.read(base_id, off, bit, ctype)

    def _store(self, place: Expr, value: Value) -> None:
        if isinstance(place, Name):
            region = self.layout.regions.by_name.get(place.name)
            if region is None:
                raise ReplayError(f"no storage for {place.name}")
            self.mem.write(region.base_id, 0, None, region.elem_type, value)
            return
        if isinstance(place, Index):
            base = self.eval(place.base)
            idx = int(self.eval(place.index))  # type: ignore[arg-type]
            if not isinstance(base, CPtr):
                raise ReplayError("indexed store through non-pointer")
            target = CPtr(base.base, base.offset + idx)
            region = self.layout.regions.by_id.get(target.base)
            if region is None or not 0 <= target.offset < region.dim:
                raise ReplayError("out-of-bounds store")
            self.mem.write(target.base, target.offset * region.elem_size, None,
                           place.ctype or region.elem_type, value)
            return
        if isinstance(place, Un) and place.op == "*":
            base = self.eval(place.operand)
            if not isinstance(base, CPtr) or base.base == 0:
                raise ReplayError("store through null or non-pointer")
            region = self.layout.regions.by_id.get(base.base)
            if region is None or not 0 <= base.offset < region.dim:
                raise ReplayError("out-of-bounds store")
            self.mem.write(base.base, base.offset * region.elem_size, None,
                           place.ctype or region.elem_type, value)
            return
        if isinstance(place, Member):
            base_id, off, bit, ctype = self._member_slot(place)
            self.mem.write(base_id, off, bit, ctype, value)
            return
        raise ReplayError(f"store target {type(place).__name__}")

    def _bin(self, e: Bin) -> Value:
        if e.op == "&&":
            return 1 if _truthy(self.eval(e.lhs)) and _truthy(self.eval(e.rhs)) else 0
        if e.op == "||":
            return 1 if _truthy(self.eval(e.lhs)) or _truthy(self.eval(e.rhs)) else 0
        a = self.eval(e.lhs)
        b = self.eval(e.rhs)
        if isinstance(a, CPtr) or isinstance(b, CPtr):
            return self._ptr_bin(e.op, a, b)
        if e.op in ("==", "!=", "<", "<=", ">", ">="):
            common = usual_arith(_decayed(e.lhs.ctype), _decayed(e.rhs.ctype))
            a2, b2 = _conv(a, common), _conv(b, common)
            res = {"==": a2 == b2, "!=": a2 != b2, "<": a2 < b2,
                   "<=": a2 <= b2, ">": a2 > b2, ">=": a2 >= b2}[e.op]
            return 1 if res else 0
        ctype = e.ctype
        if isinstance(ctype, FloatType):
            fa, fb = float(a), float(b)
            if e.op == "/" and fb == 0.0:
                raise ReplayError("float division by zero")
            res = {"+": fa + fb, "-": fa - fb, "*": fa * fb,
                   "/": fa / fb if fb else 0.0}[e.op]
            return _store_convert(res, ctype, None)
        assert isinstance(ctype, IntType), e
        ia = int(_conv(a, ctype))
        ib = int(_conv(b, ctype)) if e.op not in ("<<", ">>") else int(b)
        if e.op in ("/", "%"):
            if ib == 0:
                raise ReplayError("division by zero")
            return wrap_int(c_div(ia, ib) if e.op == "/" else c_rem(ia, ib), ctype)
        if e.op in ("<<", ">>"):
            if not 0 <= ib < ctype.width:
                raise ReplayError("shift out of range")
            if e.op == "<<":
                return wrap_int(ia << ib, ctype)
            if ctype.signed:
                return wrap_int(ia >> ib, ctype)
            return wrap_int((ia & ((1 << ctype.width) - 1)) >> ib, ctype)
        res = {"+": ia + ib, "-": ia - ib, "*": ia * ib,
               "&": ia & ib, "|": ia | ib, "^": ia ^ ib}[e.op]
        return wrap_int(res, ctype)

    def _ptr_bin(self, op: str, a: Value, b: Value) -> Value:
        if op in ("==", "!="):
            pa = a if isinstance(a, CPtr) else CPtr(0, 0) if a == 0 else None
            pb = b if isinstance(b, CPtr) else CPtr(0, 0) if b == 0 else None
            if pa is None or pb is None:
                raise ReplayError("pointer compared with integer")
            same = (pa.base == pb.base and pa.offset == pb.offset) or \
                (pa.base == 0 and pb.base == 0)
            return (1 if same else 0) if op == "==" else (0 if same else 1)
        if op in ("<", "<=", ">", ">="):
            if not (isinstance(a, CPtr) and isinstance(b, CPtr)):
                raise ReplayError("ordered pointer comparison with integer")
            if a.base != b.base:
                raise ReplayError("ordered comparison across regions")
            res = {"<": a.offset < b.offset, "<=": a.offset <= b.offset,
                   ">": a.offset > b.offset, ">=": a.offset >= b.offset}[op]
            return 1 if res else 0
        if op == "-" and isinstance(a, CPtr) and isinstance(b, CPtr):
            if a.base != b.base:
                raise ReplayError("pointer subtraction across regions")
            return wrap_int(a.offset - b.offset, IntType(32, True, "int"))
        if op in ("+", "-") and isinstance(a, CPtr):
            step = int(b)  # type: ignore[arg-type]
            return CPtr(a.base, a.offset + step if op == "+" else a.offset - step)
        if op == "+" and isinstance(b, CPtr):
            return CPtr(b.base, b.offset + int(a))  # type: ignore[arg-type]
        raise ReplayError(f"pointer operator {op}")

    def _un(self, e: Un) -> Value:
        if e.op == "*":
            return self._load_ptr(self.eval(e.operand), 0, e.ctype)
        if e.op == "&":
            return self._address_of(e.operand)
        v = self.eval(e.operand)
        if e.op == "!":
            return 0 if _truthy(v) else 1
        if isinstance(v, CPtr):
            raise ReplayError(f"unary {e.op} on a pointer")
        if e.op == "-":
            if isinstance(e.ctype, FloatType):
                return _store_convert(-float(v), e.ctype, None)
            assert isinstance(e.ctype, IntType)
            return wrap_int(-int(v), e.ctype)
        if e.op == "~":
            assert isinstance(e.ctype, IntType)
            return wrap_int(~int(v), e.ctype)
        raise ReplayError(f"unary {e.op}")

    def _address_of(self, e: Expr) -> CPtr:
        if isinstance(e, Name):
            region = self.layout.regions.by_name[e.name]
            return CPtr(region.base_id, 0)
        if isinstance(e, Index):
            base = self.eval(e.base)
            if not isinstance(base, CPtr):
                raise ReplayError("& of non-place")
            return CPtr(base.base, base.offset + int(self.eval(e.index)))  # type: ignore[arg-type]
        if isinstance(e, Un) and e.op == "*":
            v = self.eval(e.operand)
            if not isinstance(v, CPtr):
                raise ReplayError("& of non-place")
            return v
        raise ReplayError("& of unsupported place")

    def _cast(self, v: Value, src: CType, dst: CType) -> Value:
        if isinstance(v, CPtr):
            if isinstance(dst, PointerType):
                return v
            raise ReplayError("pointer cast to non-pointer")
        if isinstance(dst, PointerType):
            if v == 0:
                return CPtr(0, 0)
            raise ReplayError("integer cast to pointer")
        return _store_convert(v if not isinstance(v, CPtr) else 0, dst, None)


def _decayed(t: CType) -> CType:
    if isinstance(t, ArrayType):
        return PointerType(t.elem)
    return t


def _conv(v: Value, t: CType) -> int | float:
    if isinstance(v, CPtr):
        raise ReplayError("pointer in arithmetic conversion")
    if isinstance(t, FloatType):
        from .symexpr import _round_float

        return _round_float(float(v), t)
    assert isinstance(t, IntType)
    return wrap_int(int(v), t)


def _truthy(v: Value) -> bool:
    if isinstance(v, CPtr):
        return v.base != 0
    return bool(v)


def concrete_replay(cfg: Cfg, layout: Layout, anns: AnnotationSet,
                    model: dict[str, int | float],
                    schedule: dict[str, list[StubScheduleEntry]]) -> ReplayResult:
    """Run the CFG concretely; raises ReplayError on impossible models."""
    return _Replayer(cfg, layout, anns, model, schedule).run()
