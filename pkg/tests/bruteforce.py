"""Vectorized brute-force evaluation of constraints, used as a test oracle.

Evaluates symbolic expressions over numpy grids covering entire small
domains; integer dtypes give two's-complement wraparound for free, matching
the generator's semantics. Kept independent of the solver's code paths.
"""

from __future__ import annotations

import numpy as np

from cunitgen.symexpr import BinOp, Cast, Const, Ite, Range, Sym, SymExpr, UnOp
from cunitgen.typesys import BOOL, FloatType, IntType

_DTYPES = {
    (8, True): np.int8, (8, False): np.uint8,
    (16, True): np.int16, (16, False): np.uint16,
    (32, True): np.int32, (32, False): np.uint32,
    (64, True): np.int64, (64, False): np.uint64,
}


def dtype_of(t: IntType):
    return _DTYPES[(t.width, t.signed)]


def np_eval(e: SymExpr, grids: dict[str, np.ndarray]) -> np.ndarray:
    with np.errstate(over="ignore"):
        return _eval(e, grids)


def _to_int_dtype(arr: np.ndarray, t: IntType) -> np.ndarray:
    return arr.astype(dtype_of(t))


def _eval(e: SymExpr, grids: dict[str, np.ndarray]) -> np.ndarray:
    if isinstance(e, Const):
        if e.ctype is BOOL:
            return np.bool_(bool(e.value))
        if isinstance(e.ctype, FloatType):
            return np.float64(e.value)
        return np.array(e.value, dtype=dtype_of(e.ctype))
    if isinstance(e, Sym):
        return grids[e.name]
    if isinstance(e, Cast):
        inner = _eval(e.operand, grids)
        if isinstance(e.ctype, IntType):
            return _to_int_dtype(inner, e.ctype)
        return inner.astype(np.float64)
    if isinstance(e, Range):
        x = _eval(e.expr, grids)
        return (x >= e.lo) & (x < e.hi)
    if isinstance(e, UnOp):
        v = _eval(e.operand, grids)
        if e.op == "!":
            return ~_as_bool(v)
        if e.op == "-":
            return (-v).astype(v.dtype) if isinstance(e.ctype, IntType) else -v
        if e.op == "~":
            return np.invert(v)
        raise ValueError(e.op)
    if isinstance(e, Ite):
        c = _as_bool(_eval(e.cond, grids))
        return np.where(c, _eval(e.then, grids), _eval(e.other, grids))
    if isinstance(e, BinOp):
        if e.op == "&&":
            return _as_bool(_eval(e.lhs, grids)) & _as_bool(_eval(e.rhs, grids))
        if e.op == "||":
            return _as_bool(_eval(e.lhs, grids)) | _as_bool(_eval(e.rhs, grids))
        a = _eval(e.lhs, grids)
        b = _eval(e.rhs, grids)
        if e.op in ("==", "!=", "<", "<=", ">", ">="):
            a, b = _common(a, b, e.lhs.ctype, e.rhs.ctype)
            return {
                "==": a == b, "!=": a != b, "<": a < b,
                "<=": a <= b, ">": a > b, ">=": a >= b,
            }[e.op]
        assert isinstance(e.ctype, IntType), f"oracle cannot do {e.op} on {e.ctype}"
        dt = dtype_of(e.ctype)
        a = a.astype(dt) if hasattr(a, "astype") else np.array(a, dtype=dt)
        b = b.astype(dt) if hasattr(b, "astype") else np.array(b, dtype=dt)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "&":
            return a & b
        if e.op == "|":
            return a | b
        if e.op == "^":
            return a ^ b
        raise ValueError(f"oracle does not model {e.op}")
    raise ValueError(f"cannot evaluate {e!r}")


def _as_bool(v: np.ndarray) -> np.ndarray:
    if v.dtype == np.bool_:
        return v
    return v != 0


def _common(a, b, ta, tb):
    """Usual arithmetic conversions before a comparison."""
    from cunitgen.typesys import usual_arith

    if isinstance(ta, IntType) and isinstance(tb, IntType):
        t = usual_arith(ta, tb)
        return _to_int_dtype(a, t), _to_int_dtype(b, t)
    return a.astype(np.float64), b.astype(np.float64)


def grid_for(symbols: list, t: IntType) -> dict[str, np.ndarray]:
    """Full-domain meshgrid over the given symbols (domain = whole type)."""
    lo, hi = t.min_value(), t.max_value()
    axis = np.arange(lo, hi + 1, dtype=dtype_of(t))
    mesh = np.meshgrid(*([axis] * len(symbols)), indexing="ij", copy=False)
    return {s: m for s, m in zip(symbols, mesh)}


def oracle_sat(conjuncts: list[SymExpr], grids: dict[str, np.ndarray]) -> bool:
    result = None
    for c in conjuncts:
        v = _as_bool(np.asarray(np_eval(c, grids)))
        result = v if result is None else (result & v)
    if result is None:
        return True
    return bool(np.any(result))
