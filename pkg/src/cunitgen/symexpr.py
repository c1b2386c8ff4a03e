"""Typed symbolic expressions over program inputs, stub variables and constants.

This is the currency of the whole pipeline: memory items store these, branch
guards resolve to them, the solver decides conjunctions of them, and the
model verifier evaluates them.

Integer operations use two's-complement wraparound at the width of the
expression type. Float operations round to the expression type's width.
Pointer values are a dedicated node carrying an abstract base address
expression and an element-scaled offset expression.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Mapping, Union

from .typesys import (
    BOOL,
    INT,
    CType,
    FloatType,
    IntType,
    PointerType,
    c_div,
    c_rem,
    is_float,
    is_integer,
    promote,
    usual_arith,
    wrap_int,
)


class Role(Enum):
    """What a free symbol stands for in a path constraint."""

    INPUT = "input"
    PTR_BASE = "pointer-base"
    PTR_OFFSET = "pointer-offset"
    STUB_RETURN = "stub-return"
    STUB_OUTPUT = "stub-output"
    STUB_GLOBAL = "stub-global"
    FRESH_READ = "fresh-read"


@dataclass(frozen=True)
class Const:
    value: int | float
    ctype: CType

    def __str__(self) -> str:
        if self.ctype is BOOL:
            return "true" if self.value else "false"
        if isinstance(self.ctype, FloatType):
            return repr(float(self.value))
        return str(self.value)


@dataclass(frozen=True)
class Sym:
    name: str
    ctype: CType
    role: Role = Role.INPUT

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class BinOp:
    op: str
    lhs: "SymExpr"
    rhs: "SymExpr"
    ctype: CType

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class UnOp:
    op: str
    operand: "SymExpr"
    ctype: CType

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Cast:
    operand: "SymExpr"
    ctype: CType

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Ite:
    cond: "SymExpr"
    then: "SymExpr"
    other: "SymExpr"
    ctype: CType

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Range:
    """Bounds fact lo <= expr < hi, printed in the chained form."""

    expr: "SymExpr"
    lo: int
    hi: int
    ctype: CType = BOOL

    def __str__(self) -> str:
        return f"{self.lo} <= {render(self.expr)} < {self.hi}"


@dataclass(frozen=True)
class Ptr:
    """A pointer value: abstract base address plus element-scaled offset."""

    base: "SymExpr"
    offset: "SymExpr"
    ctype: CType  # the PointerType of the value

    def __str__(self) -> str:
        return f"({render(self.base)} + {render(self.offset)})"


SymExpr = Union[Const, Sym, BinOp, UnOp, Cast, Ite, Range, Ptr]

TRUE = Const(1, BOOL)
FALSE = Const(0, BOOL)

_CMP_OPS = ("<", "<=", ">", ">=", "==", "!=")
_BOOL_OPS = ("&&", "||")
_FLIP = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}
_SWAP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "==", "!=": "!="}


def is_true(e: SymExpr) -> bool:
    return isinstance(e, Const) and e.ctype is BOOL and bool(e.value)


def is_false(e: SymExpr) -> bool:
    return isinstance(e, Const) and e.ctype is BOOL and not e.value


def mk_int(value: int, ctype: IntType = INT) -> Const:
    return Const(wrap_int(value, ctype), ctype)


def mk_bool(value: bool) -> Const:
    return TRUE if value else FALSE


def mk_binop(op: str, lhs: SymExpr, rhs: SymExpr, ctype: CType | None = None) -> SymExpr:
    """Build a binary node, folding constants and boolean identities."""
    if ctype is None:
        if op in _CMP_OPS or op in _BOOL_OPS:
            ctype = BOOL
        else:
            ctype = usual_arith(lhs.ctype, rhs.ctype)
    if op == "&&":
        if is_false(lhs) or is_false(rhs):
            return FALSE
        if is_true(lhs):
            return rhs
        if is_true(rhs):
            return lhs
    elif op == "||":
        if is_true(lhs) or is_true(rhs):
            return TRUE
        if is_false(lhs):
            return rhs
        if is_false(rhs):
            return lhs
    if isinstance(lhs, Const) and isinstance(rhs, Const) and not isinstance(ctype, PointerType):
        try:
            folded = _fold_binop(op, lhs, rhs, ctype)
        except ZeroDivisionError:
            folded = None
        if folded is not None:
            return folded
    return BinOp(op, lhs, rhs, ctype)


def _fold_binop(op: str, lhs: Const, rhs: Const, ctype: CType) -> Const | None:
    a, b = lhs.value, rhs.value
    if op in _CMP_OPS:
        if isinstance(lhs.ctype, (IntType, FloatType)) and isinstance(rhs.ctype, (IntType, FloatType)):
            common = usual_arith(lhs.ctype, rhs.ctype)
            a = _convert(a, lhs.ctype, common)
            b = _convert(b, rhs.ctype, common)
        res = {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b, "==": a == b, "!=": a != b}[op]
        return mk_bool(res)
    if op in _BOOL_OPS:
        return mk_bool(bool(a) and bool(b)) if op == "&&" else mk_bool(bool(a) or bool(b))
    if isinstance(ctype, FloatType):
        fa, fb = float(a), float(b)
        res = {"+": fa + fb, "-": fa - fb, "*": fa * fb, "/": fa / fb if fb else None}.get(op)
        if res is None:
            return None
        return Const(_round_float(res, ctype), ctype)
    if not isinstance(ctype, IntType):
        return None
    ia = _convert(a, lhs.ctype, ctype)
    ib = _convert(b, rhs.ctype, ctype)
    if op in ("/", "%") and ib == 0:
        raise ZeroDivisionError
    if op in ("<<", ">>") and not 0 <= ib < ctype.width:
        return None
    if op == ">>":
        res = ia >> ib  # arithmetic for signed, logical falls out of wrapping
        if not ctype.signed:
            res = (ia & ((1 << ctype.width) - 1)) >> ib
    elif op == "<<":
        res = ia << ib
    elif op == "/":
        res = c_div(ia, ib)
    elif op == "%":
        res = c_rem(ia, ib)
    elif op == "+":
        res = ia + ib
    elif op == "-":
        res = ia - ib
    elif op == "*":
        res = ia * ib
    elif op == "&":
        res = ia & ib
    elif op == "|":
        res = ia | ib
    elif op == "^":
        res = ia ^ ib
    else:
        return None
    return Const(wrap_int(res, ctype), ctype)


def mk_unop(op: str, operand: SymExpr, ctype: CType | None = None) -> SymExpr:
    if op == "!":
        if isinstance(operand, Const):
            return mk_bool(not operand.value)
        return negate(to_bool(operand))
    if ctype is None:
        ctype = operand.ctype
        if isinstance(ctype, IntType):
            ctype = promote(ctype)
    if isinstance(operand, Const):
        if op == "-":
            if isinstance(ctype, FloatType):
                return Const(_round_float(-float(operand.value), ctype), ctype)
            if isinstance(ctype, IntType):
                return Const(wrap_int(-int(operand.value), ctype), ctype)
        if op == "~" and isinstance(ctype, IntType):
            return Const(wrap_int(~int(operand.value), ctype), ctype)
    return UnOp(op, operand, ctype)


def mk_cast(operand: SymExpr, ctype: CType) -> SymExpr:
    if operand.ctype == ctype:
        return operand
    if isinstance(operand, Const) and not isinstance(ctype, PointerType) \
            and not isinstance(operand.ctype, PointerType):
        return Const(_convert(operand.value, operand.ctype, ctype), ctype)
    return Cast(operand, ctype)


def mk_ite(cond: SymExpr, then: SymExpr, other: SymExpr, ctype: CType | None = None) -> SymExpr:
    if is_true(cond):
        return then
    if is_false(cond):
        return other
    return Ite(cond, then, other, ctype or then.ctype)


def mk_range(expr: SymExpr, lo: int, hi: int) -> SymExpr:
    if isinstance(expr, Const):
        return mk_bool(lo <= expr.value < hi)
    return Range(expr, lo, hi)


def conj(parts: list[SymExpr]) -> SymExpr:
    """Right-folded conjunction of the non-trivial parts."""
    out: SymExpr = TRUE
    for p in reversed(parts):
        out = mk_binop("&&", p, out)
    return out


def to_bool(e: SymExpr) -> SymExpr:
    """Coerce a scalar value to a guard: nonzero means true."""
    if e.ctype is BOOL:
        return e
    if isinstance(e, Ptr):
        return mk_binop("!=", e.base, Const(0, e.base.ctype), BOOL)
    zero = Const(0, e.ctype) if isinstance(e.ctype, (IntType, FloatType)) else Const(0, INT)
    return mk_binop("!=", e, zero, BOOL)


def negate(e: SymExpr) -> SymExpr:
    """Logical negation with comparison flipping and De Morgan push-down."""
    if isinstance(e, Const):
        return mk_bool(not e.value)
    if isinstance(e, UnOp) and e.op == "!":
        return to_bool(e.operand)
    if isinstance(e, BinOp):
        if e.op in _FLIP:
            # no NaN in the value model, so flipping is valid for floats too
            return BinOp(_FLIP[e.op], e.lhs, e.rhs, BOOL)
        if e.op == "&&":
            return mk_binop("||", negate(e.lhs), negate(e.rhs))
        if e.op == "||":
            return mk_binop("&&", negate(e.lhs), negate(e.rhs))
    if isinstance(e, Range):
        return UnOp("!", e, BOOL)
    return UnOp("!", to_bool(e), BOOL)


def free_symbols(e: SymExpr) -> Iterator[Sym]:
    if isinstance(e, Sym):
        yield e
    elif isinstance(e, BinOp):
        yield from free_symbols(e.lhs)
        yield from free_symbols(e.rhs)
    elif isinstance(e, (UnOp, Cast)):
        yield from free_symbols(e.operand)
    elif isinstance(e, Ite):
        yield from free_symbols(e.cond)
        yield from free_symbols(e.then)
        yield from free_symbols(e.other)
    elif isinstance(e, Range):
        yield from free_symbols(e.expr)
    elif isinstance(e, Ptr):
        yield from free_symbols(e.base)
        yield from free_symbols(e.offset)


# ---------------------------------------------------------------------------
# Rendering

_PREC = {
    "||": 1, "&&": 2, "|": 3, "^": 4, "&": 5,
    "==": 6, "!=": 6, "<": 7, "<=": 7, ">": 7, ">=": 7,
    "<<": 8, ">>": 8, "+": 9, "-": 9, "*": 10, "/": 10, "%": 10,
}
_UNARY_PREC = 11


def render(e: SymExpr, parent_prec: int = 0) -> str:
    if isinstance(e, (Const, Sym)):
        return str(e)
    if isinstance(e, Range):
        text = str(e)
        return f"({text})" if parent_prec > _PREC["<"] else text
    if isinstance(e, BinOp):
        if e.op == "&&":  # folded-true members stay structurally, not in text
            if is_true(e.rhs):
                return render(e.lhs, parent_prec)
            if is_true(e.lhs):
                return render(e.rhs, parent_prec)
        prec = _PREC[e.op]
        lhs = render(e.lhs, prec)
        # fully associative operators chain without parentheses
        rhs = render(e.rhs, prec if e.op in ("&&", "||") else prec + 1)
        text = f"{lhs} {e.op} {rhs}"
        return f"({text})" if prec < parent_prec else text
    if isinstance(e, UnOp):
        inner = render(e.operand, _UNARY_PREC)
        text = f"{e.op}{inner}"
        return f"({text})" if _UNARY_PREC < parent_prec else text
    if isinstance(e, Cast):
        return f"({e.ctype}){render(e.operand, _UNARY_PREC)}"
    if isinstance(e, Ite):
        text = f"{render(e.cond, 1)} ? {render(e.then, 1)} : {render(e.other, 1)}"
        return f"({text})" if parent_prec > 0 else text
    if isinstance(e, Ptr):
        return f"{render(e.base, _PREC['+'])}[{render(e.offset)}]"
    raise TypeError(f"cannot render {e!r}")


def render_conjunction(parts: list[SymExpr]) -> str:
    shown = [render(p, _PREC["&&"]) for p in parts if not is_true(p)]
    if not shown:
        return "true"
    return " && ".join(shown)


# ---------------------------------------------------------------------------
# Evaluation (the independent check on solver models)


@dataclass(frozen=True)
class PointerVal:
    base: int
    offset: int


Value = Union[int, float, bool, PointerVal]


class EvalError(Exception):
    pass


def _round_float(v: float, t: FloatType) -> float:
    if t.width == 32:
        return struct.unpack("<f", struct.pack("<f", v))[0]
    return v


def _convert(v: int | float, src: CType, dst: CType) -> int | float:
    if isinstance(dst, IntType):
        if isinstance(src, FloatType) or isinstance(v, float):
            v = int(v)  # trunc toward zero
        return wrap_int(int(v), dst)
    if isinstance(dst, FloatType):
        return _round_float(float(v), dst)
    if dst is BOOL:
        return 1 if v else 0
    return v


def evaluate(e: SymExpr, env: Mapping[str, Value]) -> Value:
    """Evaluate under a model. Independent of the solver's search machinery."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Sym):
        if e.name not in env:
            raise EvalError(f"unassigned symbol {e.name}")
        return env[e.name]
    if isinstance(e, Cast):
        v = evaluate(e.operand, env)
        if isinstance(v, PointerVal):
            if isinstance(e.ctype, PointerType):
                return v
            raise EvalError("pointer cast to non-pointer")
        return _convert(v, e.operand.ctype, e.ctype)
    if isinstance(e, UnOp):
        v = evaluate(e.operand, env)
        if e.op == "!":
            return 0 if _truthy(v) else 1
        if isinstance(v, PointerVal):
            raise EvalError(f"unary {e.op} on pointer")
        if e.op == "-":
            if isinstance(e.ctype, IntType):
                return wrap_int(-int(v), e.ctype)
            return _round_float(-float(v), e.ctype)  # type: ignore[arg-type]
        if e.op == "~":
            assert isinstance(e.ctype, IntType)
            return wrap_int(~int(v), e.ctype)
        raise EvalError(f"unknown unary {e.op}")
    if isinstance(e, Ite):
        c = evaluate(e.cond, env)
        return evaluate(e.then if _truthy(c) else e.other, env)
    if isinstance(e, Range):
        v = evaluate(e.expr, env)
        if isinstance(v, PointerVal):
            raise EvalError("range over pointer")
        return 1 if e.lo <= v < e.hi else 0
    if isinstance(e, Ptr):
        b = evaluate(e.base, env)
        o = evaluate(e.offset, env)
        return PointerVal(int(b), int(o))  # type: ignore[arg-type]
    if isinstance(e, BinOp):
        return _eval_binop(e, env)
    raise EvalError(f"cannot evaluate {e!r}")


def _truthy(v: Value) -> bool:
    if isinstance(v, PointerVal):
        return v.base != 0
    return bool(v)


def _eval_binop(e: BinOp, env: Mapping[str, Value]) -> Value:
    if e.op == "&&":
        return 1 if _truthy(evaluate(e.lhs, env)) and _truthy(evaluate(e.rhs, env)) else 0
    if e.op == "||":
        return 1 if _truthy(evaluate(e.lhs, env)) or _truthy(evaluate(e.rhs, env)) else 0
    a = evaluate(e.lhs, env)
    b = evaluate(e.rhs, env)
    if isinstance(a, PointerVal) or isinstance(b, PointerVal):
        return _eval_ptr_cmp(e.op, a, b)
    if e.op in _CMP_OPS:
        common = usual_arith(e.lhs.ctype, e.rhs.ctype) \
            if is_arith_pair(e.lhs.ctype, e.rhs.ctype) else None
        if common is not None:
            a = _convert(a, e.lhs.ctype, common)
            b = _convert(b, e.rhs.ctype, common)
        res = {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b,
               "==": a == b, "!=": a != b}[e.op]
        return 1 if res else 0
    if isinstance(e.ctype, FloatType):
        fa, fb = float(a), float(b)
        if e.op == "/" and fb == 0.0:
            raise EvalError("float division by zero")
        res = {"+": fa + fb, "-": fa - fb, "*": fa * fb, "/": fa / fb if fb else 0.0}[e.op]
        return _round_float(res, e.ctype)
    assert isinstance(e.ctype, IntType), e
    ia = int(_convert(a, e.lhs.ctype, e.ctype))
    # shift amounts keep their own value; everything else converts to the result type
    ib = int(b) if e.op in ("<<", ">>") else int(_convert(b, e.rhs.ctype, e.ctype))
    if e.op in ("/", "%"):
        if ib == 0:
            raise EvalError("division by zero")
        return wrap_int(c_div(ia, ib) if e.op == "/" else c_rem(ia, ib), e.ctype)
    if e.op in ("<<", ">>"):
        if not 0 <= ib < e.ctype.width:
            raise EvalError("shift amount out of range")
        if e.op == "<<":
            return wrap_int(ia << ib, e.ctype)
        if e.ctype.signed:
            return wrap_int(ia >> ib, e.ctype)
        return wrap_int((ia & ((1 << e.ctype.width) - 1)) >> ib, e.ctype)
    res = {"+": ia + ib, "-": ia - ib, "*": ia * ib,
           "&": ia & ib, "|": ia | ib, "^": ia ^ ib}[e.op]
    return wrap_int(res, e.ctype)


def is_arith_pair(a: CType, b: CType) -> bool:
    return (is_integer(a) or is_float(a)) and (is_integer(b) or is_float(b))


def _eval_ptr_cmp(op: str, a: Value, b: Value) -> int:
    if not isinstance(a, PointerVal):
        a = PointerVal(0, 0) if a == 0 else PointerVal(int(a), 0)  # type: ignore[arg-type]
    if not isinstance(b, PointerVal):
        b = PointerVal(0, 0) if b == 0 else PointerVal(int(b), 0)  # type: ignore[arg-type]
    if op == "==":
        return 1 if (a.base, a.offset) == (b.base, b.offset) or (a.base == 0 and b.base == 0) else 0
    if op == "!=":
        return 0 if (a.base, a.offset) == (b.base, b.offset) or (a.base == 0 and b.base == 0) else 1
    if a.base != b.base:
        raise EvalError("ordered comparison of pointers into different regions")
    res = {"<": a.offset < b.offset, "<=": a.offset <= b.offset,
           ">": a.offset > b.offset, ">=": a.offset >= b.offset}[op]
    return 1 if res else 0
