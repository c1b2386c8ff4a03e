"""History-based symbolic memory: regions, memory items, reads and writes.

Every named storage location (global, parameter, local, temporary,
auxiliary variable) is a region with an abstract base address. A write
appends a memory item (base, offset, length, value, validity interval); a
read walks the history newest-first. When the accessed location is decidable
the read returns the stored value directly; otherwise it returns a fresh
read symbol constrained by a case split over the candidate items. A write
through a pointer whose base is symbolic simply records the symbolic base,
which makes later reads split on the aliasing condition - that one item
stands for the write against every candidate region.

Offsets are element-scaled in pointer values and byte-scaled inside memory
items; structs and unions are addressed by byte (and bit, for bit fields)
offsets from their region base.
"""

from __future__ import annotations

from dataclasses import dataclass

from .symexpr import (
    Const,
    Role,
    Sym,
    SymExpr,
    mk_binop,
    mk_cast,
)
from .typesys import (
    INT,
    UINT,
    ArrayType,
    CType,
    IntType,
    PointerType,
    StructType,
)

NULL_BASE = 0
BASE_COUNTER_START = 2147483648


@dataclass
class Region:
    base_id: int
    name: str
    elem_type: CType
    dim: int
    kind: str  # global, param, local, temp, aux, autogen
    is_input: bool

    @property
    def elem_size(self) -> int:
        return self.elem_type.size

    @property
    def byte_size(self) -> int:
        return self.elem_size * self.dim


@dataclass
class PointerSyms:
    """Free symbols describing a pointer test input."""

    name: str
    base: Sym
    offset: Sym
    fresh_region: Region
    pointee: CType


@dataclass
class MemoryItem:
    base: SymExpr  # Const(region id) or a pointer-base symbol
    offset: SymExpr  # bytes
    length: int  # bytes
    value: SymExpr
    valid_from: int
    valid_to: int | None = None
    bit: tuple[int, int] | None = None  # (bit offset, bit length) for bit fields
    line: int = 0

    @property
    def open(self) -> bool:
        return self.valid_to is None


@dataclass
class Place:
    """A resolved lvalue: where a read or write lands."""

    base: SymExpr
    offset: SymExpr  # bytes
    length: int
    elem_type: CType
    bit: tuple[int, int] | None = None
    hint: str = ""  # naming hint for fresh read symbols
    # element-scaled view for pointer formation (&x)
    elem_offset: SymExpr | None = None


class RegionTable:
    """Abstract address space for one generation session."""

    def __init__(self, ptr_array_size: int):
        self.ptr_array_size = ptr_array_size
        self._counter = BASE_COUNTER_START
        self.by_name: dict[str, Region] = {}
        self.by_id: dict[int, Region] = {}
        self.pointer_inputs: dict[str, PointerSyms] = {}
        self.cell_syms: dict[tuple[int, int, int, int], Sym] = {}
        self.cell_index: dict[str, tuple[int, int]] = {}  # symbol name -> (base, elem idx)
        self.declared_order: list[Region] = []

    def new_region(self, name: str, decl: CType, kind: str, is_input: bool) -> Region:
        if isinstance(decl, ArrayType):
            elem, dim = decl.elem, decl.length
        else:
            elem, dim = decl, 1
        region = Region(self._counter, name, elem, dim, kind, is_input)
        self._counter += 1
        self.by_name[name] = region
        self.by_id[region.base_id] = region
        self.declared_order.append(region)
        return region

    def region_of(self, name: str) -> Region:
        return self.by_name[name]

    def pointer_input(self, name: str, ptr_type: PointerType) -> PointerSyms:
        """Base/offset symbols plus a fresh backing region for a pointer input."""
        if name in self.pointer_inputs:
            return self.pointer_inputs[name]
        base = Sym(f"{name}@baseAddress", UINT, Role.PTR_BASE)
        offset = Sym(f"{name}@offset", UINT, Role.PTR_OFFSET)
        fresh = self.new_region(f"{name}__autogen",
                                ArrayType(ptr_type.pointee, self.ptr_array_size),
                                "autogen", True)
        ps = PointerSyms(name, base, offset, fresh, ptr_type.pointee)
        self.pointer_inputs[name] = ps
        return ps

    def base_candidates(self, ps: PointerSyms) -> list[int]:
        """Values a pointer-input base may take, in deterministic order.

        The pointer's own fresh region comes first, then other inputs' fresh
        regions of the same element type, then type-matching declared
        regions, then null. An equality chain therefore lands on the first
        fresh id, which is how shared auto-generated arrays come about.
        """
        own = ps.fresh_region.base_id
        same_type_fresh = [
            other.fresh_region.base_id
            for other in self.pointer_inputs.values()
            if other.pointee == ps.pointee and other.name != ps.name
        ]
        declared = [
            r.base_id for r in self.declared_order
            if r.kind in ("global", "param", "local")
            and r.elem_type == ps.pointee
        ]
        out = [own]
        for rid in same_type_fresh + declared:
            if rid not in out:
                out.append(rid)
        out.append(NULL_BASE)
        return out

    def dim_for_base(self, base: SymExpr) -> int:
        if isinstance(base, Const):
            region = self.by_id.get(int(base.value))
            if region is not None:
                return region.dim
            return self.ptr_array_size
        if isinstance(base, Sym):
            name = base.name.removesuffix("@baseAddress")
            ps = self.pointer_inputs.get(name)
            if ps is not None:
                return ps.fresh_region.dim
        return self.ptr_array_size

    def cell_symbol(self, region: Region, byte_off: int,
                    bit: tuple[int, int] | None = None) -> Sym:
        """Input symbol for one cell of an input region."""
        key = (region.base_id, byte_off, *(bit or (-1, -1)))
        if key in self.cell_syms:
            return self.cell_syms[key]
        st = region.elem_type
        if isinstance(st, StructType):
            name = f"{region.name}@{byte_off}"
            ctype: CType = INT
            for f in st.fields:
                f_bit = (f.bit_offset, f.bit_width) if f.bit_width is not None else None
                if f.byte_offset == byte_off % max(st.size, 1) and f_bit == bit:
                    name = f"{region.name}.{f.name}"
                    ctype = f.ctype
                    if f.bit_width is not None and isinstance(f.ctype, IntType):
                        # the storable value set is the field's bit range
                        ctype = IntType(f.bit_width, f.ctype.signed,
                                        f"{f.ctype.name}:{f.bit_width}")
                    break
            elem_index = byte_off // max(st.size, 1)
            if region.dim > 1:
                name = f"{region.name}[{elem_index}].{name.split('.')[-1]}"
        else:
            elem_index = byte_off // max(region.elem_size, 1)
            name = region.name if region.dim == 1 else f"{region.name}[{elem_index}]"
            ctype = region.elem_type
        sym = Sym(name, ctype, Role.INPUT)
        self.cell_syms[key] = sym
        self.cell_index[name] = (region.base_id, elem_index)
        return sym


def base_eq_cond(a: SymExpr, b: SymExpr) -> SymExpr:
    """Base-address equality, folded when both sides are concrete."""
    if isinstance(a, Const) and isinstance(b, Const):
        return mk_binop("==", a, b)  # folds to a boolean constant
    if isinstance(a, Sym) and isinstance(b, Sym) and a.name == b.name:
        from .symexpr import TRUE

        return TRUE
    return mk_binop("==", a, b)


def offsets_overlap_cond(item: MemoryItem, place: Place) -> SymExpr | None:
    """Condition under which the item covers the read exactly.

    Returns a folded constant when decidable. None means the shapes overlap
    only partially, which the caller treats as an imprecise hit.
    """
    if item.bit != place.bit:
        if isinstance(item.offset, Const) and isinstance(place.offset, Const):
            if _disjoint(int(item.offset.value), item.length,
                         int(place.offset.value), place.length):
                from .symexpr import FALSE

                return FALSE
        return None
    if item.length == place.length:
        return mk_binop("==", item.offset, place.offset)
    if isinstance(item.offset, Const) and isinstance(place.offset, Const):
        if _disjoint(int(item.offset.value), item.length,
                     int(place.offset.value), place.length):
            from .symexpr import FALSE

            return FALSE
    return None


def _disjoint(off_a: int, len_a: int, off_b: int, len_b: int) -> bool:
    return off_a + len_a <= off_b or off_b + len_b <= off_a


def reinterpret(value: SymExpr, want: CType, state_flags: "ApproxFlags") -> SymExpr:
    """Adapt a stored value to the reading type.

    Same type passes through; equal-width integers are reinterpreted by a
    cast (two's-complement semantics make that exact); anything else is a
    documented imprecision and yields a fresh unconstrained symbol.
    """
    have = value.ctype
    if have == want:
        return value
    if isinstance(have, IntType) and isinstance(want, IntType):
        return mk_cast(value, want)
    if is_pointer(have) and is_pointer(want):
        return value
    state_flags.mark(f"reinterpret {have} as {want}")
    return state_flags.fresh(want)


class ApproxFlags:
    """Collects imprecision markers and mints fresh unconstrained symbols."""

    def __init__(self) -> None:
        self.notes: list[str] = []
        self._count = 0

    @property
    def approximate(self) -> bool:
        return bool(self.notes)

    def mark(self, note: str) -> None:
        self.notes.append(note)

    def fresh(self, ctype: CType) -> Sym:
        self._count += 1
        return Sym(f"__approx@{self._count}", ctype, Role.FRESH_READ)
