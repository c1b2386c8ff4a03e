"""Path-constraint assembly: pointer comparison expansion and conjunction.

A pointer is a pair (base address, element offset). A comparison p1 w p2
over pointers becomes the constraint

    A1 == A2 && x1 w x2 && 0 <= x1 < dim(p1) && 0 <= x2 < dim(p2)
    && dim(p1) == dim(p2)

for ordering operators. Equality is the same-region same-offset case or the
null/null case; inequality is the negation of the equality body, which
keeps cross-region pointers distinguishable. Comparisons against a literal
null compare the base id with the reserved null id. The trailing dimension
conjunct folds to a boolean constant when both dimensions are already the
same configured number; folded-true conjuncts are retained structurally
(the SMT-LIB export emits them) but suppressed when rendering text.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .memory import NULL_BASE, RegionTable
from .symexpr import (
    Const,
    Ptr,
    Role,
    SymExpr,
    conj,
    free_symbols,
    is_true,
    mk_binop,
    mk_range,
    negate,
    render_conjunction,
)
from .typesys import UINT, CType

_ORDERING = ("<", "<=", ">", ">=")
_ALL_OMEGA = _ORDERING + ("==", "!=")


@dataclass
class FreeSymbol:
    name: str
    ctype: CType
    role: Role
    # pointer-offset symbols: the default input domain [0, dim)
    dim: int | None = None
    # pointer-base symbols: allowed region ids and their dimensions
    candidates: list[int] = field(default_factory=list)
    candidate_dims: dict[int, int] = field(default_factory=dict)
    paired_offset: str | None = None


@dataclass
class Constraint:
    """Ordered conjunction plus the free-symbol table the solver needs."""

    conjuncts: list[SymExpr] = field(default_factory=list)
    free: dict[str, FreeSymbol] = field(default_factory=dict)
    # (kind, branch index, first conjunct position); kind is assume/branch/tail
    segments: list[tuple[str, int, int]] = field(default_factory=list)

    def render(self) -> str:
        return render_conjunction(self.conjuncts)

    def as_expr(self) -> SymExpr:
        return conj(self.conjuncts)

    def prefix(self, branch_count: int) -> "Constraint":
        """The sub-constraint covering assumptions and the first n branches."""
        cut = len(self.conjuncts)
        for kind, idx, pos in self.segments:
            if kind == "branch" and idx >= branch_count:
                cut = min(cut, pos)
            if kind == "tail":
                cut = min(cut, pos)
        conjuncts = self.conjuncts[:cut]
        return Constraint(conjuncts, _restrict_free(self.free, conjuncts),
                          [s for s in self.segments if s[2] < cut])

    def branch_count(self) -> int:
        return sum(1 for kind, _, _ in self.segments if kind == "branch")


def _restrict_free(free: dict[str, FreeSymbol], conjuncts: list[SymExpr]
                   ) -> dict[str, FreeSymbol]:
    names: list[str] = []
    for c in conjuncts:
        for s in free_symbols(c):
            if s.name not in names:
                names.append(s.name)
    out: dict[str, FreeSymbol] = {}
    for n in names:
        if n in free:
            out[n] = free[n]
    # keep paired offsets/bases together so domains stay linked
    for n in list(out.values()):
        if n.paired_offset and n.paired_offset in free:
            out.setdefault(n.paired_offset, free[n.paired_offset])
    return out


@dataclass
class PtrInfo:
    base: SymExpr
    offset: SymExpr
    dim: int


def ptr_info(p: Ptr, table: RegionTable) -> PtrInfo:
    return PtrInfo(p.base, p.offset, table.dim_for_base(p.base))


def pointer_compare(p1: PtrInfo, p2: PtrInfo, omega: str) -> Constraint:
    """The published pointer-comparison constraint for two region pointers."""
    if omega not in _ALL_OMEGA:
        raise ValueError(f"not a comparison operator: {omega}")
    if omega in _ORDERING:
        conjuncts = [
            mk_binop("==", p1.base, p2.base),
            mk_binop(omega, p1.offset, p2.offset),
            mk_range(p1.offset, 0, p1.dim),
            mk_range(p2.offset, 0, p2.dim),
            mk_binop("==", Const(p1.dim, UINT), Const(p2.dim, UINT)),
        ]
        return Constraint(conjuncts)
    eq_body = _pointer_eq_expr(p1, p2)
    if omega == "==":
        return Constraint([eq_body])
    return Constraint([negate(eq_body)])


def _pointer_eq_expr(p1: PtrInfo, p2: PtrInfo) -> SymExpr:
    null_case = mk_binop(
        "&&",
        mk_binop("==", p1.base, Const(NULL_BASE, UINT)),
        mk_binop("==", p2.base, Const(NULL_BASE, UINT)),
    )
    same = conj([
        mk_binop("==", p1.base, p2.base),
        mk_binop("==", p1.offset, p2.offset),
        mk_range(p1.offset, 0, p1.dim),
        mk_range(p2.offset, 0, p2.dim),
        mk_binop("==", Const(p1.dim, UINT), Const(p2.dim, UINT)),
    ])
    return mk_binop("||", null_case, same)


def pointer_compare_semantic(p1: PtrInfo, p2: PtrInfo, omega: str) -> SymExpr:
    """Plain C comparison semantics, used for obligations and replay checks.

    No in-bounds feasibility conjuncts here: a postcondition like
    p <= buf + DIM must hold for the legal one-past-the-end pointer.
    """
    if omega in _ORDERING:
        return conj([
            mk_binop("==", p1.base, p2.base),
            mk_binop(omega, p1.offset, p2.offset),
        ])
    both_null = mk_binop(
        "&&",
        mk_binop("==", p1.base, Const(NULL_BASE, UINT)),
        mk_binop("==", p2.base, Const(NULL_BASE, UINT)),
    )
    same = mk_binop(
        "&&",
        mk_binop("==", p1.base, p2.base),
        mk_binop("==", p1.offset, p2.offset),
    )
    eq = mk_binop("||", both_null, same)
    return eq if omega == "==" else negate(eq)


def pointer_null_compare(p: PtrInfo, omega: str) -> SymExpr:
    if omega == "==":
        return mk_binop("==", p.base, Const(NULL_BASE, UINT))
    if omega == "!=":
        return mk_binop("!=", p.base, Const(NULL_BASE, UINT))
    raise ValueError(f"ordered comparison against null: {omega}")


def build_free_table(conjuncts: list[SymExpr], table: RegionTable) -> dict[str, FreeSymbol]:
    """Free-symbol metadata (roles, domains, base candidates) in first-use order."""
    out: dict[str, FreeSymbol] = {}
    for c in conjuncts:
        for s in free_symbols(c):
            if s.name in out:
                continue
            fs = FreeSymbol(s.name, s.ctype, s.role)
            if s.role is Role.PTR_BASE:
                name = s.name.removesuffix("@baseAddress")
                ps = table.pointer_inputs.get(name)
                if ps is not None:
                    fs.candidates = table.base_candidates(ps)
                    fs.candidate_dims = {
                        rid: (table.by_id[rid].dim if rid in table.by_id else 0)
                        for rid in fs.candidates
                    }
                    fs.paired_offset = ps.offset.name
            elif s.role is Role.PTR_OFFSET:
                name = s.name.removesuffix("@offset")
                ps = table.pointer_inputs.get(name)
                fs.dim = ps.fresh_region.dim if ps is not None else None
            out[s.name] = fs
    return out


def resolve(guard, state, polarity: bool = True) -> Constraint:
    """Resolve one branch condition against a path state.

    Pointer and array references inside the condition go through the
    symbolic interpreter's memory reads; pointer comparisons expand through
    pointer_compare; dereference bounds and divisor side conditions come
    back as leading conjuncts.
    """
    from . import symex  # deferred: symex drives this module during interpretation

    expr, sides = symex.eval_guard(state, guard, polarity)
    conjuncts = list(sides) + ([] if is_true(expr) else [expr])
    c = Constraint(conjuncts)
    c.free = build_free_table(conjuncts, state.layout.regions)
    return c


def conjoin(state) -> Constraint:
    """Ordered conjunction of assumptions, branch guards and side conditions.

    Proof obligations (post/assert/testcase-post) are not part of the
    returned constraint; they live in state.obligations.
    """
    conjuncts: list[SymExpr] = []
    segments: list[tuple[str, int, int]] = []
    segments.append(("assume", -1, len(conjuncts)))
    conjuncts.extend(state.assumptions)
    for i, branch in enumerate(state.branches):
        segments.append(("branch", i, len(conjuncts)))
        conjuncts.extend(branch.sides)
        if not is_true(branch.guard):
            conjuncts.append(branch.guard)
    segments.append(("tail", -1, len(conjuncts)))
    conjuncts.extend(state.tail_sides)
    c = Constraint(conjuncts, build_free_table(conjuncts, state.layout.regions), segments)
    return c
