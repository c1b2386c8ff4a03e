"""Pointer-comparison formula and constraint-assembly tests."""

import itertools

import pytest

from conftest import read_data

from cunitgen import constraints as con
from cunitgen.config import Config
from cunitgen.frontend import extract_annotations, parse_unit
from cunitgen.imr import lower
from cunitgen.memory import NULL_BASE
from cunitgen.solver import solve
from cunitgen.symexpr import Const, PointerVal, Role, Sym, evaluate, render_conjunction
from cunitgen.typesys import UINT


def pinfo(base, offset, dim):
    return con.PtrInfo(base, offset, dim)


def sym_ptr(name: str, dim: int):
    return pinfo(Sym(f"{name}@baseAddress", UINT, Role.PTR_BASE),
                 Sym(f"{name}@offset", UINT, Role.PTR_OFFSET), dim)


class TestPointerCompare:
    def test_table1_exact_text(self):
        c = con.pointer_compare(sym_ptr("p1", 10), sym_ptr("p2", 10), "<")
        assert c.render() == (
            "p1@baseAddress == p2@baseAddress && p1@offset < p2@offset && "
            "0 <= p1@offset < 10 && 0 <= p2@offset < 10"
        )
        # the folded dimension conjunct is retained structurally
        assert len(c.conjuncts) == 5

    def test_reflexive_equality_satisfiable(self):
        p = sym_ptr("p", 4)
        c = con.pointer_compare(p, p, "==")
        c.free = con.build_free_table(c.conjuncts, _regions())
        assert solve(c).is_sat

    def test_distinct_declared_arrays_unsatisfiable(self):
        # two declared arrays have fixed, distinct base ids
        a = pinfo(Const(2147483648, UINT), Sym("x1", UINT, Role.PTR_OFFSET), 4)
        b = pinfo(Const(2147483649, UINT), Sym("x2", UINT, Role.PTR_OFFSET), 4)
        c = con.pointer_compare(a, b, "<")
        c.free = con.build_free_table(c.conjuncts, _regions())
        assert solve(c).is_unsat

    def test_unequal_dims_fold_false(self):
        c = con.pointer_compare(sym_ptr("p", 4), sym_ptr("q", 7), "<")
        c.free = con.build_free_table(c.conjuncts, _regions())
        assert solve(c).is_unsat

    def test_inequality_across_regions_satisfiable(self):
        a = pinfo(Const(2147483648, UINT), Const(0, UINT), 4)
        b = pinfo(Const(2147483649, UINT), Const(0, UINT), 4)
        c = con.pointer_compare(a, b, "!=")
        c.free = con.build_free_table(c.conjuncts, _regions())
        assert solve(c).is_sat

    @pytest.mark.parametrize("omega", ["<", "<=", ">", ">=", "==", "!="])
    @pytest.mark.parametrize("dim1,dim2", [(1, 1), (2, 3), (4, 4), (3, 1)])
    def test_equisatisfiable_with_brute_force(self, omega, dim1, dim2):
        """Enumerate all base/offset assignments and compare verdicts."""
        p1 = sym_ptr("p1", dim1)
        p2 = sym_ptr("p2", dim2)
        c = con.pointer_compare(p1, p2, omega)
        c.free = {
            "p1@baseAddress": con.FreeSymbol(
                "p1@baseAddress", UINT, Role.PTR_BASE,
                candidates=[101, 102, NULL_BASE],
                candidate_dims={101: dim1, 102: dim2, NULL_BASE: 0},
                paired_offset="p1@offset"),
            "p2@baseAddress": con.FreeSymbol(
                "p2@baseAddress", UINT, Role.PTR_BASE,
                candidates=[102, 101, NULL_BASE],
                candidate_dims={101: dim1, 102: dim2, NULL_BASE: 0},
                paired_offset="p2@offset"),
            "p1@offset": con.FreeSymbol("p1@offset", UINT, Role.PTR_OFFSET, dim=dim1),
            "p2@offset": con.FreeSymbol("p2@offset", UINT, Role.PTR_OFFSET, dim=dim2),
        }
        brute_sat = False
        for b1, b2 in itertools.product([101, 102, NULL_BASE], repeat=2):
            off_range1 = [0] if b1 == NULL_BASE else range(4)
            off_range2 = [0] if b2 == NULL_BASE else range(4)
            for x1, x2 in itertools.product(off_range1, off_range2):
                env = {"p1@baseAddress": b1, "p2@baseAddress": b2,
                       "p1@offset": x1, "p2@offset": x2}
                if all(evaluate(cj, env) for cj in c.conjuncts):
                    brute_sat = True
                    break
            if brute_sat:
                break
        verdict = solve(c)
        assert verdict.status in ("sat", "unsat")
        assert verdict.is_sat == brute_sat


def _regions():
    from cunitgen.memory import RegionTable

    return RegionTable(10)


class TestConjoin:
    def _state(self, name: str, file_name: str, trace_edges: int = 1):
        from cunitgen.stct import CoverageState, Stct
        from cunitgen.symex import Layout, interpret
        from cunitgen.imr import enumerate_coverage_targets

        unit = parse_unit(read_data(file_name), file_name)
        fn = unit.function(name)
        anns = extract_annotations(fn)
        cfg = lower(unit, fn)
        layout = Layout(unit, fn, cfg, anns, Config())
        coverage = CoverageState(enumerate_coverage_targets(cfg, "c1"))
        tree = Stct(cfg, coverage, 256)
        trace = tree.select_trace(None)
        states = []
        while trace is not None and len(states) < trace_edges:
            state = interpret(trace, cfg, anns, layout)
            states.append((trace, state))
            if state.infeasible_branch is not None:
                break
            coverage.mark_pending(trace)
            if trace.complete:
                break
            trace = tree.select_trace(trace)
        return states

    def test_monotonic_prefixes(self):
        states = self._state("test", "table2.c", trace_edges=3)
        rendered = [con.conjoin(s).render() for _t, s in states]
        for shorter, longer in zip(rendered, rendered[1:]):
            assert longer.startswith(shorter)

    def test_empty_trace_constraint_trivial(self):
        states = self._state("select_demo", "fig3.c", trace_edges=1)
        _trace, state = states[0]
        c = con.conjoin(state)
        assert solve(c).is_sat

    def test_bounds_present_for_every_offset(self):
        states = self._state("test", "table1.c", trace_edges=1)
        _trace, state = states[0]
        c = con.conjoin(state)
        from cunitgen.symexpr import Range, free_symbols, BinOp

        offsets = {s.name for cj in c.conjuncts for s in free_symbols(cj)
                   if s.role is Role.PTR_OFFSET}

        def ranges(e):
            if isinstance(e, Range):
                yield e
            for attr in ("lhs", "rhs", "operand", "cond", "then", "other"):
                child = getattr(e, attr, None)
                if child is not None and hasattr(child, "ctype"):
                    yield from ranges(child)

        bounded = set()
        for cj in c.conjuncts:
            for r in ranges(cj):
                for s in free_symbols(r.expr):
                    bounded.add(s.name)
        assert offsets <= bounded

    def test_table2_constraint_text(self):
        states = self._state("test", "table2.c", trace_edges=3)
        _trace, state = states[-1]
        c = con.conjoin(state)
        assert c.render() == (
            "func_ext@RETURN@0 > p2 && func_ext@RETURN@1 == p1 && "
            "globalVar@func_ext@1 == p2"
        )
