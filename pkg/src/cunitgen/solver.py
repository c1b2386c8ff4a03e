"""Built-in constraint solver.

The pipeline is: (1) constant-fold and flatten the conjunction; (2) interval
propagation over integer and offset symbols to a fixpoint; (3) equality-class
substitution for base-address symbols (finite candidate domains intersected
through a union-find); (4) search that picks the symbol with the smallest
residual domain, probes the boundary values, then splits at the midpoint and
backtracks on propagation failure; (5) floats are handled by propagating
exact literals through equality classes and trying a fixed seed set
(0, +-1, +-0.5 and the boundary constants found in the constraint).

Sat answers are only reported after the model passes the independent
expression evaluator; the search is never trusted. Unsat is only reported
when the search space was covered exhaustively; a blown budget yields
Unknown with the reason attached.

Interval arithmetic here is wraparound-aware: a forward step that may wrap
widens to the full type range, and backward narrowing only fires when the
unwrapped result provably fits the type, so no feasible value is ever
pruned.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .constraints import Constraint, FreeSymbol
from .symexpr import (
    BinOp,
    Cast,
    Const,
    EvalError,
    Ite,
    Range,
    Role,
    Sym,
    SymExpr,
    UnOp,
    evaluate,
    is_false,
    is_true,
)
from .typesys import BOOL, FloatType, IntType, wrap_int

_CMP = ("<", "<=", ">", ">=", "==", "!=")


@dataclass
class Budget:
    max_nodes: int = 10000
    max_ms: int = 2000


@dataclass
class Model:
    values: dict[str, int | float] = field(default_factory=dict)

    def get(self, name: str, default: int | float = 0) -> int | float:
        return self.values.get(name, default)


@dataclass
class SolveResult:
    status: str  # sat, unsat, unknown
    model: Model | None = None
    reason: str = ""
    nodes: int = 0

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.status == "unsat"


class _BudgetExceeded(Exception):
    pass


class _Conflict(Exception):
    pass


@dataclass
class _IntDomain:
    lo: int
    hi: int
    ctype: IntType

    def empty(self) -> bool:
        return self.lo > self.hi

    def singleton(self) -> bool:
        return self.lo == self.hi

    def size(self) -> int:
        return max(0, self.hi - self.lo + 1)


@dataclass
class _SetDomain:
    values: list[int]  # ordered candidates

    def empty(self) -> bool:
        return not self.values

    def singleton(self) -> bool:
        return len(self.values) == 1

    def size(self) -> int:
        return len(self.values)


class _Solver:
    def __init__(self, constraint: Constraint, budget: Budget):
        self.constraint = constraint
        self.budget = budget
        self.start = time.monotonic()
        self.nodes = 0
        self.conjuncts = _flatten(constraint.conjuncts)
        self.order: list[str] = list(constraint.free.keys())
        self.int_syms: dict[str, FreeSymbol] = {}
        self.base_syms: dict[str, FreeSymbol] = {}
        self.float_syms: dict[str, FreeSymbol] = {}
        for name, fs in constraint.free.items():
            if isinstance(fs.ctype, FloatType):
                self.float_syms[name] = fs
            elif fs.role is Role.PTR_BASE and fs.candidates:
                self.base_syms[name] = fs
            elif isinstance(fs.ctype, IntType) or fs.ctype is BOOL:
                self.int_syms[name] = fs
            else:
                self.int_syms[name] = fs  # treated as full-range integer

    # -- entry ----------------------------------------------------------------

    def run(self) -> SolveResult:
        for c in self.conjuncts:
            if is_false(c):
                return SolveResult("unsat", nodes=self.nodes)
        try:
            if self.float_syms:
                return self._run_with_floats()
            env = self._initial_env()
            model = self._search(env, {})
            if model is not None:
                return SolveResult("sat", model, nodes=self.nodes)
            return SolveResult("unsat", nodes=self.nodes)
        except _BudgetExceeded as exc:
            return SolveResult("unknown", reason=str(exc), nodes=self.nodes)

    def _run_with_floats(self) -> SolveResult:
        combos = self._float_assignments()
        for fenv in combos:
            self._tick()
            env = self._initial_env()
            try:
                model = self._search(env, fenv)
            except _BudgetExceeded:
                raise
            if model is not None:
                return SolveResult("sat", model, nodes=self.nodes)
        return SolveResult(
            "unknown",
            reason="float seed set exhausted without a verified model",
            nodes=self.nodes,
        )

    # -- domains ----------------------------------------------------------------

    def _initial_env(self) -> dict[str, _IntDomain | _SetDomain]:
        env: dict[str, _IntDomain | _SetDomain] = {}
        for name, fs in self.base_syms.items():
            env[name] = _SetDomain(list(fs.candidates))
        for name, fs in self.int_syms.items():
            if isinstance(fs.ctype, IntType):
                lo, hi = fs.ctype.min_value(), fs.ctype.max_value()
            else:
                lo, hi = 0, 1  # booleans
            if fs.role is Role.PTR_OFFSET and fs.dim is not None:
                lo, hi = 0, fs.dim - 1
            ct = fs.ctype if isinstance(fs.ctype, IntType) else IntType(8, False, "bool")
            env[name] = _IntDomain(lo, hi, ct)
        return env

    # -- search ------------------------------------------------------------------

    def _tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.budget.max_nodes:
            raise _BudgetExceeded(f"search node budget ({self.budget.max_nodes}) exhausted")
        if self.nodes % 64 == 0:
            elapsed = (time.monotonic() - self.start) * 1000.0
            if elapsed > self.budget.max_ms:
                raise _BudgetExceeded(f"time budget ({self.budget.max_ms} ms) exhausted")

    def _search(self, env: dict[str, _IntDomain | _SetDomain],
                fenv: dict[str, float]) -> Model | None:
        self._tick()
        try:
            self._propagate(env, fenv)
        except _Conflict:
            return None
        name = self._pick(env)
        if name is None:
            return self._finish(env, fenv)
        dom = env[name]
        if isinstance(dom, _SetDomain):
            for v in dom.values:
                child = dict(env)
                child[name] = _SetDomain([v])
                model = self._search(child, fenv)
                if model is not None:
                    return model
            return None
        lo, hi = dom.lo, dom.hi
        for probe in ([lo] if lo == hi else [lo, hi]):
            child = dict(env)
            child[name] = _IntDomain(probe, probe, dom.ctype)
            model = self._search(child, fenv)
            if model is not None:
                return model
        if hi - lo >= 2:
            mid = lo + (hi - lo) // 2
            for sub_lo, sub_hi in ((lo + 1, mid), (mid + 1, hi - 1)):
                if sub_lo > sub_hi:
                    continue
                child = dict(env)
                child[name] = _IntDomain(sub_lo, sub_hi, dom.ctype)
                model = self._search(child, fenv)
                if model is not None:
                    return model
        return None

    def _pick(self, env: dict[str, _IntDomain | _SetDomain]) -> str | None:
        best: tuple[int, int] | None = None
        best_name: str | None = None
        for idx, name in enumerate(self.order):
            dom = env.get(name)
            if dom is None or dom.singleton():
                continue
            key = (dom.size(), idx)
            if best is None or key < best:
                best = key
                best_name = name
        return best_name

    def _finish(self, env: dict[str, _IntDomain | _SetDomain],
                fenv: dict[str, float]) -> Model | None:
        values: dict[str, int | float] = {}
        for name in self.order:
            if name in fenv:
                values[name] = fenv[name]
                continue
            dom = env.get(name)
            if isinstance(dom, _SetDomain):
                values[name] = dom.values[0]
            elif isinstance(dom, _IntDomain):
                values[name] = dom.lo
            else:
                values[name] = 0
        model = Model(values)
        return model if verify_model(self.constraint, model) else None

    # -- propagation ----------------------------------------------------------------

    def _propagate(self, env: dict[str, _IntDomain | _SetDomain],
                   fenv: dict[str, float]) -> None:
        self._base_equalities(env)
        for _ in range(32):  # fixpoint cap; each pass only narrows
            changed = False
            for c in self.conjuncts:
                changed |= self._narrow(c, True, env, fenv)
            self._pair_offsets(env)
            if not changed:
                break
        self._difference_cycles(env, fenv)

    def _difference_cycles(self, env, fenv) -> None:
        """Detect contradictory chains like x > y && y > x.

        Conjuncts whose sides linearize to at most one wide variable plus a
        constant become edges x >= y + c; a cycle with positive weight sum
        is unsatisfiable. Only wrap-free sides contribute, which keeps the
        check sound under two's-complement semantics.
        """
        edges: list[tuple[str, str, int]] = []  # x >= y + c as (y, x, c)
        for c in self.conjuncts:
            if not isinstance(c, BinOp) or c.op not in ("<", "<=", ">", ">=", "=="):
                continue
            left = self._linearize(c.lhs, env, fenv)
            right = self._linearize(c.rhs, env, fenv)
            if left is None or right is None:
                continue
            (xl, cl), (xr, cr) = left, right
            if xl is None or xr is None or xl == xr:
                continue
            if c.op in (">", ">="):
                edges.append((xr, xl, cr - cl + (1 if c.op == ">" else 0)))
            elif c.op in ("<", "<="):
                edges.append((xl, xr, cl - cr + (1 if c.op == "<" else 0)))
            else:
                edges.append((xr, xl, cr - cl))
                edges.append((xl, xr, cl - cr))
        if not edges:
            return
        nodes = sorted({n for e in edges for n in e[:2]})
        index = {n: i for i, n in enumerate(nodes)}
        n = len(nodes)
        neg_inf = None
        dist = [[neg_inf] * n for _ in range(n)]
        for y, x, c in edges:
            i, j = index[y], index[x]
            if dist[i][j] is None or c > dist[i][j]:
                dist[i][j] = c
        for k in range(n):
            for i in range(n):
                dik = dist[i][k]
                if dik is None:
                    continue
                row_k = dist[k]
                row_i = dist[i]
                for j in range(n):
                    dkj = row_k[j]
                    if dkj is None:
                        continue
                    cand = dik + dkj
                    if row_i[j] is None or cand > row_i[j]:
                        row_i[j] = cand
        for i in range(n):
            if dist[i][i] is not None and dist[i][i] > 0:
                raise _Conflict

    def _linearize(self, e: SymExpr, env, fenv) -> tuple[str | None, int] | None:
        """Express e as one non-singleton variable plus a constant, or None.

        Singleton-domain symbols fold into the constant. Sides whose raw
        interval may wrap are rejected.
        """
        iv = self._ival(e, env, fenv)
        if iv is not None and iv[0] == iv[1]:
            return (None, iv[0])
        if isinstance(e, Sym):
            return (e.name, 0)
        if isinstance(e, Cast) and isinstance(e.ctype, IntType):
            inner = self._ival(e.operand, env, fenv)
            if inner is not None and e.ctype.min_value() <= inner[0] \
                    and inner[1] <= e.ctype.max_value():
                return self._linearize(e.operand, env, fenv)
            return None
        if isinstance(e, BinOp) and e.op in ("+", "-") \
                and isinstance(e.ctype, IntType):
            a = self._ival(e.lhs, env, fenv)
            b = self._ival(e.rhs, env, fenv)
            if a is None or b is None:
                return None
            raw_lo, raw_hi = _interval_arith(e.op, a, b)
            if raw_lo is None or not (e.ctype.min_value() <= raw_lo
                                      and raw_hi <= e.ctype.max_value()):
                return None
            left = self._linearize(e.lhs, env, fenv)
            right = self._linearize(e.rhs, env, fenv)
            if left is None or right is None:
                return None
            (xl, cl), (xr, cr) = left, right
            if e.op == "+":
                if xl is not None and xr is not None:
                    return None
                return (xl or xr, cl + cr)
            if xr is not None:
                return None
            return (xl, cl - cr)
        return None

    def _base_equalities(self, env: dict[str, _IntDomain | _SetDomain]) -> None:
        """Union-find over base symbols; members share intersected domains."""
        parent: dict[str, str] = {n: n for n in self.base_syms}

        def find(x: str) -> str:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for c in self.conjuncts:
            if isinstance(c, BinOp) and c.op == "==" \
                    and isinstance(c.lhs, Sym) and isinstance(c.rhs, Sym) \
                    and c.lhs.name in self.base_syms and c.rhs.name in self.base_syms:
                ra, rb = find(c.lhs.name), find(c.rhs.name)
                if ra != rb:
                    parent[ra] = rb
        groups: dict[str, list[str]] = {}
        for name in self.base_syms:
            groups.setdefault(find(name), []).append(name)
        for members in groups.values():
            if len(members) < 2:
                continue
            shared: list[int] | None = None
            for m in members:
                dom = env[m]
                assert isinstance(dom, _SetDomain)
                if shared is None:
                    shared = list(dom.values)
                else:
                    shared = [v for v in shared if v in dom.values]
            assert shared is not None
            if not shared:
                raise _Conflict
            for m in members:
                env[m] = _SetDomain(list(shared))

    def _pair_offsets(self, env: dict[str, _IntDomain | _SetDomain]) -> None:
        """A decided base narrows its offset to the region's true bounds."""
        for name, fs in self.base_syms.items():
            dom = env.get(name)
            if not isinstance(dom, _SetDomain) or not dom.singleton():
                continue
            if not fs.paired_offset or fs.paired_offset not in env:
                continue
            rid = dom.values[0]
            dim = fs.candidate_dims.get(rid, 0)
            off = env[fs.paired_offset]
            assert isinstance(off, _IntDomain)
            hi = max(dim - 1, 0)
            new = _IntDomain(max(off.lo, 0), min(off.hi, hi), off.ctype)
            if new.empty():
                raise _Conflict
            env[fs.paired_offset] = new

    # forward interval evaluation; returns (lo, hi) or None for unknown

    def _ival(self, e: SymExpr, env, fenv) -> tuple[int, int] | None:
        if isinstance(e, Const):
            if isinstance(e.value, float):
                return None
            return (int(e.value), int(e.value))
        if isinstance(e, Sym):
            if e.name in fenv:
                return None
            dom = env.get(e.name)
            if isinstance(dom, _IntDomain):
                return (dom.lo, dom.hi)
            if isinstance(dom, _SetDomain):
                if dom.empty():
                    raise _Conflict
                return (min(dom.values), max(dom.values))
            return None
        if isinstance(e, Cast):
            if not isinstance(e.ctype, IntType):
                return None
            inner = self._ival(e.operand, env, fenv)
            if inner is None:
                return self._type_range(e.ctype)
            return _fit_interval(inner[0], inner[1], e.ctype)
        if isinstance(e, UnOp):
            if e.op == "-" and isinstance(e.ctype, IntType):
                inner = self._ival(e.operand, env, fenv)
                if inner is None:
                    return self._type_range(e.ctype)
                return _fit_interval(-inner[1], -inner[0], e.ctype)
            if e.op == "!":
                b = self._bval(e.operand, env, fenv)
                if b is None:
                    return (0, 1)
                return (0, 0) if b else (1, 1)
            if isinstance(e.ctype, IntType):
                return self._type_range(e.ctype)
            return None
        if isinstance(e, Ite):
            b = self._bval(e.cond, env, fenv)
            if b is True:
                return self._ival(e.then, env, fenv)
            if b is False:
                return self._ival(e.other, env, fenv)
            a = self._ival(e.then, env, fenv)
            c = self._ival(e.other, env, fenv)
            if a is None or c is None:
                return None
            return (min(a[0], c[0]), max(a[1], c[1]))
        if isinstance(e, Range):
            b = self._bval(e, env, fenv)
            if b is None:
                return (0, 1)
            return (1, 1) if b else (0, 0)
        if isinstance(e, BinOp):
            if e.op in _CMP or e.op in ("&&", "||"):
                b = self._bval(e, env, fenv)
                if b is None:
                    return (0, 1)
                return (1, 1) if b else (0, 0)
            if not isinstance(e.ctype, IntType):
                return None
            a = self._ival(e.lhs, env, fenv)
            b2 = self._ival(e.rhs, env, fenv)
            if a is None or b2 is None:
                return self._type_range(e.ctype)
            if a[0] == a[1] and b2[0] == b2[1]:
                # exact wrapped fold for fully decided operands
                try:
                    v = evaluate(
                        BinOp(e.op, Const(wrap_int(a[0], e.ctype), e.ctype),
                              Const(wrap_int(b2[0], e.ctype), e.ctype), e.ctype), {})
                except EvalError:
                    # undefined here (for example division by zero); the
                    # final concrete verification rejects such assignments
                    return self._type_range(e.ctype)
                return (int(v), int(v))
            lo, hi = _interval_arith(e.op, a, b2)
            if lo is None or hi is None:
                return self._type_range(e.ctype)
            return _fit_interval(lo, hi, e.ctype)
        return None

    @staticmethod
    def _type_range(t: IntType) -> tuple[int, int]:
        return (t.min_value(), t.max_value())

    # tri-state boolean evaluation

    def _bval(self, e: SymExpr, env, fenv) -> bool | None:
        if isinstance(e, Const):
            return bool(e.value)
        if isinstance(e, Range):
            iv = self._ival(e.expr, env, fenv)
            if iv is None:
                return None
            if e.lo <= iv[0] and iv[1] < e.hi:
                return True
            if iv[1] < e.lo or iv[0] >= e.hi:
                return False
            return None
        if isinstance(e, UnOp) and e.op == "!":
            b = self._bval(e.operand, env, fenv)
            return None if b is None else not b
        if isinstance(e, BinOp):
            if e.op == "&&":
                a = self._bval(e.lhs, env, fenv)
                b = self._bval(e.rhs, env, fenv)
                if a is False or b is False:
                    return False
                if a is True and b is True:
                    return True
                return None
            if e.op == "||":
                a = self._bval(e.lhs, env, fenv)
                b = self._bval(e.rhs, env, fenv)
                if a is True or b is True:
                    return True
                if a is False and b is False:
                    return False
                return None
            if e.op in _CMP:
                if _has_float(e):
                    return self._float_cmp(e, env, fenv)
                a = self._ival(e.lhs, env, fenv)
                b = self._ival(e.rhs, env, fenv)
                if a is None or b is None:
                    return None
                return _interval_cmp(e.op, a, b)
        if isinstance(e, Sym):
            iv = self._ival(e, env, fenv)
            if iv is None:
                return None
            if iv[0] > 0 or iv[1] < 0:
                return True
            if iv == (0, 0):
                return False
            return None
        return None

    def _float_cmp(self, e: BinOp, env, fenv) -> bool | None:
        try:
            vals = {}
            for s in _syms(e):
                if s.name in fenv:
                    vals[s.name] = fenv[s.name]
                else:
                    return None
            return bool(evaluate(e, vals))
        except EvalError:
            return None

    # backward narrowing; returns True when some domain changed

    def _narrow(self, e: SymExpr, want: bool, env, fenv) -> bool:
        b = self._bval(e, env, fenv)
        if b is not None:
            if b != want:
                raise _Conflict
            return False
        if isinstance(e, UnOp) and e.op == "!":
            return self._narrow(e.operand, not want, env, fenv)
        if isinstance(e, Range):
            if want:
                return self._push(e.expr, e.lo, e.hi - 1, env, fenv)
            return False
        if isinstance(e, BinOp):
            if e.op == "&&" and want:
                changed = self._narrow(e.lhs, True, env, fenv)
                changed |= self._narrow(e.rhs, True, env, fenv)
                return changed
            if e.op == "||" and not want:
                changed = self._narrow(e.lhs, False, env, fenv)
                changed |= self._narrow(e.rhs, False, env, fenv)
                return changed
            if e.op == "&&" and not want:
                a = self._bval(e.lhs, env, fenv)
                b2 = self._bval(e.rhs, env, fenv)
                if a is True:
                    return self._narrow(e.rhs, False, env, fenv)
                if b2 is True:
                    return self._narrow(e.lhs, False, env, fenv)
                return False
            if e.op == "||" and want:
                a = self._bval(e.lhs, env, fenv)
                b2 = self._bval(e.rhs, env, fenv)
                if a is False:
                    return self._narrow(e.rhs, True, env, fenv)
                if b2 is False:
                    return self._narrow(e.lhs, True, env, fenv)
                return False
            if e.op in _CMP and not _has_float(e):
                return self._narrow_cmp(e, want, env, fenv)
        return False

    def _narrow_cmp(self, e: BinOp, want: bool, env, fenv) -> bool:
        op = e.op if want else {"<": ">=", "<=": ">", ">": "<=", ">=": "<",
                                "==": "!=", "!=": "=="}[e.op]
        # base-address set domains get dedicated handling
        if self._narrow_base_cmp(e, op, env):
            return True
        a = self._ival(e.lhs, env, fenv)
        b = self._ival(e.rhs, env, fenv)
        if a is None or b is None:
            return False
        changed = False
        if op == "<":
            changed |= self._push(e.lhs, None, b[1] - 1, env, fenv)
            changed |= self._push(e.rhs, a[0] + 1, None, env, fenv)
        elif op == "<=":
            changed |= self._push(e.lhs, None, b[1], env, fenv)
            changed |= self._push(e.rhs, a[0], None, env, fenv)
        elif op == ">":
            changed |= self._push(e.lhs, b[0] + 1, None, env, fenv)
            changed |= self._push(e.rhs, None, a[1] - 1, env, fenv)
        elif op == ">=":
            changed |= self._push(e.lhs, b[0], None, env, fenv)
            changed |= self._push(e.rhs, None, a[1], env, fenv)
        elif op == "==":
            lo, hi = max(a[0], b[0]), min(a[1], b[1])
            if lo > hi:
                raise _Conflict
            changed |= self._push(e.lhs, lo, hi, env, fenv)
            changed |= self._push(e.rhs, lo, hi, env, fenv)
        elif op == "!=":
            changed |= self._bump_neq(e.lhs, b, env, fenv)
            changed |= self._bump_neq(e.rhs, a, env, fenv)
        return changed

    def _narrow_base_cmp(self, e: BinOp, op: str, env) -> bool:
        lhs_base = isinstance(e.lhs, Sym) and e.lhs.name in self.base_syms
        rhs_base = isinstance(e.rhs, Sym) and e.rhs.name in self.base_syms
        if not lhs_base and not rhs_base:
            return False
        if op not in ("==", "!="):
            return False
        changed = False
        if lhs_base and rhs_base:
            da, db = env[e.lhs.name], env[e.rhs.name]
            assert isinstance(da, _SetDomain) and isinstance(db, _SetDomain)
            if op == "==":
                shared = [v for v in da.values if v in db.values]
                if not shared:
                    raise _Conflict
                if len(shared) != len(da.values):
                    env[e.lhs.name] = _SetDomain(list(shared))
                    changed = True
                if len(shared) != len(db.values):
                    env[e.rhs.name] = _SetDomain(list(shared))
                    changed = True
            else:
                if da.singleton() and db.singleton() and da.values == db.values:
                    raise _Conflict
                if da.singleton():
                    nv = [v for v in db.values if v != da.values[0]]
                    if not nv:
                        raise _Conflict
                    if len(nv) != len(db.values):
                        env[e.rhs.name] = _SetDomain(nv)
                        changed = True
                if db.singleton():
                    nv = [v for v in da.values if v != db.values[0]]
                    if not nv:
                        raise _Conflict
                    if len(nv) != len(da.values):
                        env[e.lhs.name] = _SetDomain(nv)
                        changed = True
            return changed
        sym, other = (e.lhs, e.rhs) if lhs_base else (e.rhs, e.lhs)
        if not isinstance(other, Const):
            return False
        dom = env[sym.name]
        assert isinstance(dom, _SetDomain)
        val = int(other.value)
        if op == "==":
            nv = [v for v in dom.values if v == val]
        else:
            nv = [v for v in dom.values if v != val]
        if not nv:
            raise _Conflict
        if len(nv) != len(dom.values):
            env[sym.name] = _SetDomain(nv)
            return True
        return changed

    def _bump_neq(self, e: SymExpr, other: tuple[int, int], env, fenv) -> bool:
        if other[0] != other[1]:
            return False
        v = other[0]
        if isinstance(e, Sym) and isinstance(env.get(e.name), _IntDomain):
            dom = env[e.name]
            if dom.lo == v == dom.hi:
                raise _Conflict
            if dom.lo == v:
                env[e.name] = _IntDomain(v + 1, dom.hi, dom.ctype)
                return True
            if dom.hi == v:
                env[e.name] = _IntDomain(dom.lo, v - 1, dom.ctype)
                return True
        return False

    def _push(self, e: SymExpr, lo: int | None, hi: int | None, env, fenv) -> bool:
        """Intersect the value set of e with [lo, hi], descending where exact."""
        if isinstance(e, Sym):
            dom = env.get(e.name)
            if isinstance(dom, _IntDomain):
                nlo = dom.lo if lo is None else max(dom.lo, lo)
                nhi = dom.hi if hi is None else min(dom.hi, hi)
                if nlo > nhi:
                    raise _Conflict
                if (nlo, nhi) != (dom.lo, dom.hi):
                    env[e.name] = _IntDomain(nlo, nhi, dom.ctype)
                    return True
            if isinstance(dom, _SetDomain):
                nv = [v for v in dom.values
                      if (lo is None or v >= lo) and (hi is None or v <= hi)]
                if not nv:
                    raise _Conflict
                if len(nv) != len(dom.values):
                    env[e.name] = _SetDomain(nv)
                    return True
            return False
        if isinstance(e, Const):
            v = int(e.value)
            if (lo is not None and v < lo) or (hi is not None and v > hi):
                raise _Conflict
            return False
        if isinstance(e, Cast) and isinstance(e.ctype, IntType):
            inner = self._ival(e.operand, env, fenv)
            if inner is None:
                return False
            if e.ctype.min_value() <= inner[0] and inner[1] <= e.ctype.max_value():
                return self._push(e.operand, lo, hi, env, fenv)
            return False
        if isinstance(e, BinOp) and isinstance(e.ctype, IntType) \
                and e.op in ("+", "-"):
            a = self._ival(e.lhs, env, fenv)
            b = self._ival(e.rhs, env, fenv)
            if a is None or b is None:
                return False
            raw_lo, raw_hi = _interval_arith(e.op, a, b)
            if raw_lo is None or raw_hi is None:
                return False
            if not (e.ctype.min_value() <= raw_lo and raw_hi <= e.ctype.max_value()):
                return False  # may wrap: no sound backward reasoning
            changed = False
            if e.op == "+":
                changed |= self._push(
                    e.lhs,
                    None if lo is None else lo - b[1],
                    None if hi is None else hi - b[0], env, fenv)
                changed |= self._push(
                    e.rhs,
                    None if lo is None else lo - a[1],
                    None if hi is None else hi - a[0], env, fenv)
            else:
                changed |= self._push(
                    e.lhs,
                    None if lo is None else lo + b[0],
                    None if hi is None else hi + b[1], env, fenv)
                # lhs - rhs >= lo bounds rhs from above; <= hi from below
                changed |= self._push(
                    e.rhs,
                    None if hi is None else a[0] - hi,
                    None if lo is None else a[1] - lo, env, fenv)
            return changed
        if isinstance(e, UnOp) and e.op == "-" and isinstance(e.ctype, IntType):
            inner = self._ival(e.operand, env, fenv)
            if inner is None:
                return False
            if -inner[1] < e.ctype.min_value() or -inner[0] > e.ctype.max_value():
                return False
            return self._push(
                e.operand,
                None if hi is None else -hi,
                None if lo is None else -lo, env, fenv)
        return False

    # -- floats --------------------------------------------------------------------

    def _float_assignments(self):
        """Deterministic seed combinations, equalities propagated first."""
        names = list(self.float_syms.keys())
        parent = {n: n for n in names}

        def find(x: str) -> str:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        fixed: dict[str, float] = {}
        for c in self.conjuncts:
            if isinstance(c, BinOp) and c.op == "==":
                lt, rt = c.lhs, c.rhs
                if isinstance(lt, Sym) and lt.name in self.float_syms \
                        and isinstance(rt, Sym) and rt.name in self.float_syms:
                    parent[find(lt.name)] = find(rt.name)
                elif isinstance(lt, Sym) and lt.name in self.float_syms \
                        and isinstance(rt, Const):
                    fixed[find(lt.name)] = float(rt.value)
                elif isinstance(rt, Sym) and rt.name in self.float_syms \
                        and isinstance(lt, Const):
                    fixed[find(rt.name)] = float(lt.value)
        seeds = [0.0, 1.0, -1.0, 0.5, -0.5]
        for c in self.conjuncts:
            for lit in _float_literals(c):
                for v in (lit, lit + 1.0, lit - 1.0):
                    if v not in seeds:
                        seeds.append(v)
        reps: list[str] = []
        for n in names:
            r = find(n)
            if r not in reps:
                reps.append(r)
        free_reps = [r for r in reps if r not in fixed]
        cap = self.budget.max_nodes

        def assignments(idx: int, cur: dict[str, float]):
            if idx == len(free_reps):
                out = dict(cur)
                for r, v in fixed.items():
                    out[find(r)] = v
                yield {n: out[find(n)] for n in names}
                return
            for v in seeds:
                cur[free_reps[idx]] = v
                yield from assignments(idx + 1, cur)

        count = 0
        for combo in assignments(0, {}):
            count += 1
            if count > cap:
                return
            yield combo


def _fit_interval(lo: int, hi: int, t: IntType) -> tuple[int, int]:
    """Reduce an unwrapped interval to type t, staying exact where possible.

    If the raw interval lies inside the type range it is returned as is; if
    it lies entirely within one later (or earlier) wrap window the uniform
    shift keeps it exact; only an interval straddling a wrap boundary
    widens to the full type range.
    """
    t_min, t_max = t.min_value(), t.max_value()
    if t_min <= lo and hi <= t_max:
        return (lo, hi)
    span = 1 << t.width
    lo_window = (lo - t_min) // span
    hi_window = (hi - t_min) // span
    if lo_window == hi_window:
        shift = lo_window * span
        return (lo - shift, hi - shift)
    return (t_min, t_max)


def _flatten(conjuncts: list[SymExpr]) -> list[SymExpr]:
    out: list[SymExpr] = []

    def add(e: SymExpr) -> None:
        if isinstance(e, BinOp) and e.op == "&&":
            add(e.lhs)
            add(e.rhs)
        elif not is_true(e):
            out.append(e)

    for c in conjuncts:
        add(c)
    return out


def _interval_arith(op: str, a: tuple[int, int], b: tuple[int, int]
                    ) -> tuple[int | None, int | None]:
    if op == "+":
        return (a[0] + b[0], a[1] + b[1])
    if op == "-":
        return (a[0] - b[1], a[1] - b[0])
    if op == "*":
        corners = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
        return (min(corners), max(corners))
    return (None, None)


def _interval_cmp(op: str, a: tuple[int, int], b: tuple[int, int]) -> bool | None:
    if op == "<":
        if a[1] < b[0]:
            return True
        if a[0] >= b[1]:
            return False
    elif op == "<=":
        if a[1] <= b[0]:
            return True
        if a[0] > b[1]:
            return False
    elif op == ">":
        if a[0] > b[1]:
            return True
        if a[1] <= b[0]:
            return False
    elif op == ">=":
        if a[0] >= b[1]:
            return True
        if a[1] < b[0]:
            return False
    elif op == "==":
        if a[0] == a[1] == b[0] == b[1]:
            return True
        if a[1] < b[0] or b[1] < a[0]:
            return False
    elif op == "!=":
        if a[1] < b[0] or b[1] < a[0]:
            return True
        if a[0] == a[1] == b[0] == b[1]:
            return False
    return None


def _has_float(e: SymExpr) -> bool:
    if isinstance(e.ctype, FloatType):
        return True
    for attr in ("lhs", "rhs", "operand", "cond", "then", "other", "expr",
                 "base", "offset"):
        child = getattr(e, attr, None)
        if child is not None and hasattr(child, "ctype") and _has_float(child):
            return True
    return False


def _syms(e: SymExpr):
    from .symexpr import free_symbols

    yield from free_symbols(e)


def _float_literals(e: SymExpr):
    if isinstance(e, Const) and isinstance(e.ctype, FloatType):
        yield float(e.value)
    for attr in ("lhs", "rhs", "operand", "cond", "then", "other", "expr"):
        child = getattr(e, attr, None)
        if child is not None and hasattr(child, "ctype"):
            yield from _float_literals(child)


def verify_model(constraint: Constraint, model: Model) -> bool:
    """Independent check: every conjunct evaluates true under the model."""
    env = dict(model.values)
    try:
        for c in constraint.conjuncts:
            if not evaluate(c, env):
                return False
    except EvalError:
        return False
    return True


def solve(constraint: Constraint, budget: Budget | None = None) -> SolveResult:
    """Decide a constraint; Sat models always verify under evaluation."""
    result = _Solver(constraint, budget or Budget()).run()
    if result.is_sat:
        assert result.model is not None
        if not verify_model(constraint, result.model):
            return SolveResult("unknown", reason="model failed verification",
                               nodes=result.nodes)
    return result
