"""C type model for the supported subset.

Integer widths follow a conventional LP64 target: char 8, short 16, int 32,
long 64. All arithmetic is fixed-width with two's-complement wraparound,
which is what the solver and the concrete replay interpreter implement as
well (generated drivers are compiled with -fwrapv so the real machine
agrees).
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class IntType:
    width: int
    signed: bool
    name: str

    @property
    def size(self) -> int:
        return self.width // 8

    def min_value(self) -> int:
        return -(1 << (self.width - 1)) if self.signed else 0

    def max_value(self) -> int:
        return (1 << (self.width - 1)) - 1 if self.signed else (1 << self.width) - 1

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class FloatType:
    width: int
    name: str

    @property
    def size(self) -> int:
        return self.width // 8

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class VoidType:
    def __str__(self) -> str:
        return "void"

    @property
    def size(self) -> int:
        return 0


@dataclass(frozen=True)
class BoolType:
    """Internal type of guards and resolved constraints; not a C type."""

    def __str__(self) -> str:
        return "_Bool"

    @property
    def size(self) -> int:
        return 1


@dataclass(frozen=True)
class PointerType:
    pointee: "CType"
    const_pointee: bool = False

    @property
    def size(self) -> int:
        return 8

    def __str__(self) -> str:
        c = "const " if self.const_pointee else ""
        return f"{c}{self.pointee} *"


@dataclass(frozen=True)
class ArrayType:
    elem: "CType"
    length: int

    @property
    def size(self) -> int:
        return self.elem.size * self.length

    def __str__(self) -> str:
        return f"{self.elem} [{self.length}]"


@dataclass(frozen=True)
class StructField:
    name: str
    ctype: "CType"
    bit_width: int | None = None
    # Filled in by layout():
    byte_offset: int = 0
    bit_offset: int = 0


@dataclass(frozen=True)
class StructType:
    tag: str
    fields: tuple[StructField, ...]
    is_union: bool = False
    total_size: int = 0

    @property
    def size(self) -> int:
        return self.total_size

    def field(self, name: str) -> StructField:
        for f in self.fields:
            if f.name == name:
                return f
        raise KeyError(name)

    def __str__(self) -> str:
        kw = "union" if self.is_union else "struct"
        return f"{kw} {self.tag}"


CType = IntType | FloatType | VoidType | BoolType | PointerType | ArrayType | StructType

# Canonical scalar types. Plain char is signed on this target.
SCHAR = IntType(8, True, "char")
UCHAR = IntType(8, False, "unsigned char")
SHORT = IntType(16, True, "short")
USHORT = IntType(16, False, "unsigned short")
INT = IntType(32, True, "int")
UINT = IntType(32, False, "unsigned int")
LONG = IntType(64, True, "long")
ULONG = IntType(64, False, "unsigned long")
FLOAT = FloatType(32, "float")
DOUBLE = FloatType(64, "double")
VOID = VoidType()
BOOL = BoolType()

PTRDIFF = INT  # pointer subtraction result on the desk-scale target


def is_integer(t: CType) -> bool:
    return isinstance(t, IntType)


def is_float(t: CType) -> bool:
    return isinstance(t, FloatType)


def is_arith(t: CType) -> bool:
    return isinstance(t, (IntType, FloatType))


def is_pointer(t: CType) -> bool:
    return isinstance(t, PointerType)


def is_scalar(t: CType) -> bool:
    return isinstance(t, (IntType, FloatType, PointerType, BoolType))


def wrap_int(value: int, t: IntType) -> int:
    """Reduce an unbounded integer to the two's-complement value of type t."""
    masked = value & ((1 << t.width) - 1)
    if t.signed and masked >= 1 << (t.width - 1):
        masked -= 1 << t.width
    return masked


def c_div(a: int, b: int) -> int:
    """C99 integer division: truncation toward zero."""
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def c_rem(a: int, b: int) -> int:
    """C99 remainder: sign follows the dividend."""
    return a - c_div(a, b) * b


def promote(t: IntType) -> IntType:
    """Integer promotion: anything narrower than int becomes int."""
    if t.width < INT.width:
        return INT
    return t


def usual_arith(a: CType, b: CType) -> CType:
    """Usual arithmetic conversions for two arithmetic operand types."""
    if isinstance(a, FloatType) or isinstance(b, FloatType):
        fa = a if isinstance(a, FloatType) else None
        fb = b if isinstance(b, FloatType) else None
        if fa and fb:
            return fa if fa.width >= fb.width else fb
        return fa or fb  # type: ignore[return-value]
    assert isinstance(a, IntType) and isinstance(b, IntType)
    a, b = promote(a), promote(b)
    if a == b:
        return a
    if a.signed == b.signed:
        return a if a.width > b.width else b
    signed, unsigned = (a, b) if a.signed else (b, a)
    if unsigned.width >= signed.width:
        return unsigned
    # signed type can represent the whole unsigned range
    return signed


def align_of(t: CType) -> int:
    if isinstance(t, ArrayType):
        return align_of(t.elem)
    if isinstance(t, StructType):
        return max((align_of(f.ctype) for f in t.fields), default=1)
    return max(1, min(t.size, 8))


def layout_struct(tag: str, raw_fields: list[StructField], is_union: bool) -> StructType:
    """Assign byte/bit offsets to struct or union members.

    Bit fields are packed into units of their declared type, least
    significant bits first; a field that would not fit starts a new unit.
    """
    placed: list[StructField] = []
    if is_union:
        size = 0
        for f in raw_fields:
            placed.append(StructField(f.name, f.ctype, f.bit_width, 0, 0))
            size = max(size, f.ctype.size)
        align = max((align_of(f.ctype) for f in raw_fields), default=1)
        size = _round_up(size, align)
        return StructType(tag, tuple(placed), True, size)

    offset = 0
    bit_cursor = -1  # bit position inside the current bit-field unit
    unit_offset = 0
    unit_width = 0
    for f in raw_fields:
        if f.bit_width is not None:
            assert isinstance(f.ctype, IntType)
            width = f.ctype.width
            if bit_cursor < 0 or unit_width != width or bit_cursor + f.bit_width > width:
                unit_offset = _round_up(offset, align_of(f.ctype))
                offset = unit_offset + f.ctype.size
                bit_cursor = 0
                unit_width = width
            placed.append(StructField(f.name, f.ctype, f.bit_width, unit_offset, bit_cursor))
            bit_cursor += f.bit_width
        else:
            bit_cursor = -1
            off = _round_up(offset, align_of(f.ctype))
            placed.append(StructField(f.name, f.ctype, None, off, 0))
            offset = off + f.ctype.size
    align = max((align_of(f.ctype) for f in raw_fields), default=1)
    return StructType(tag, tuple(placed), False, _round_up(offset, align))


def _round_up(n: int, align: int) -> int:
    return (n + align - 1) // align * align


#: Named types available to declarations, extended by typedef/struct parsing.
BUILTIN_TYPES: dict[str, CType] = {
    "void": VOID,
    "char": SCHAR,
    "signed char": SCHAR,
    "unsigned char": UCHAR,
    "short": SHORT,
    "short int": SHORT,
    "unsigned short": USHORT,
    "unsigned short int": USHORT,
    "int": INT,
    "signed": INT,
    "signed int": INT,
    "unsigned": UINT,
    "unsigned int": UINT,
    "long": LONG,
    "long int": LONG,
    "signed long": LONG,
    "unsigned long": ULONG,
    "unsigned long int": ULONG,
    "float": FLOAT,
    "double": DOUBLE,
}
