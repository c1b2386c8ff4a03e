"""Built-in solver tests: verdicts, models, determinism, budgets."""

from cunitgen.constraints import Constraint, FreeSymbol
from cunitgen.solver import Budget, solve, verify_model
from cunitgen.symexpr import Const, Range, Role, Sym, mk_binop, mk_cast, mk_range
from cunitgen.typesys import DOUBLE, INT, SCHAR, UINT


def make(conjuncts, free=None):
    c = Constraint(list(conjuncts))
    if free is None:
        from cunitgen.symexpr import free_symbols

        free = {}
        for cj in conjuncts:
            for s in free_symbols(cj):
                free.setdefault(s.name, FreeSymbol(s.name, s.ctype, s.role))
    c.free = free
    return c


def ptr_free(name: str, candidates, dims, paired: str):
    return FreeSymbol(f"{name}@baseAddress", UINT, Role.PTR_BASE,
                      candidates=list(candidates),
                      candidate_dims=dict(dims), paired_offset=f"{name}@offset")


def off_free(name: str, dim: int):
    return FreeSymbol(f"{name}@offset", UINT, Role.PTR_OFFSET, dim=dim)


class TestVerdicts:
    def test_table1_shape_sat(self):
        a1 = Sym("p1@baseAddress", UINT, Role.PTR_BASE)
        a2 = Sym("p2@baseAddress", UINT, Role.PTR_BASE)
        x1 = Sym("p1@offset", UINT, Role.PTR_OFFSET)
        x2 = Sym("p2@offset", UINT, Role.PTR_OFFSET)
        c = make(
            [mk_binop("==", a1, a2), mk_binop("<", x1, x2),
             mk_range(x1, 0, 10), mk_range(x2, 0, 10)],
            {
                "p1@baseAddress": ptr_free("p1", [2147483648, 2147483649, 0],
                                           {2147483648: 10, 2147483649: 10, 0: 0}, "p1"),
                "p2@baseAddress": ptr_free("p2", [2147483649, 2147483648, 0],
                                           {2147483648: 10, 2147483649: 10, 0: 0}, "p2"),
                "p1@offset": off_free("p1", 10),
                "p2@offset": off_free("p2", 10),
            },
        )
        r = solve(c)
        assert r.is_sat
        m = r.model.values
        assert m["p1@baseAddress"] == m["p2@baseAddress"]
        assert 0 <= m["p1@offset"] < m["p2@offset"] < 10

    def test_contradiction_unsat(self):
        x = Sym("x", INT)
        r = solve(make([mk_binop(">", x, Const(0, INT)),
                        mk_binop("<", x, Const(0, INT))]))
        assert r.is_unsat

    def test_wraparound_sat(self):
        x = Sym("x", INT)
        xp = mk_binop("+", x, Const(1, INT), INT)
        r = solve(make([mk_binop(">", x, Const(0, INT)),
                        mk_binop("<", xp, Const(0, INT))]))
        assert r.is_sat
        assert r.model.values["x"] == 2**31 - 1

    def test_triangle_prefix_sat(self):
        i, j, k = (Sym(n, INT) for n in "ijk")
        conj = []
        for v in (i, j, k):
            conj.append(mk_binop(">=", v, Const(0, INT)))
        conj.append(mk_binop(">", mk_binop("+", i, j, INT), k))
        conj.append(mk_binop(">", mk_binop("+", j, k, INT), i))
        conj.append(mk_binop(">", mk_binop("+", k, i, INT), j))
        r = solve(make(conj))
        assert r.is_sat

    def test_difference_cycle_unsat(self):
        x, y = Sym("x", INT), Sym("y", INT)
        r = solve(make([mk_binop(">", x, y), mk_binop(">", y, x)]))
        assert r.is_unsat

    def test_empty_constraint_sat(self):
        r = solve(make([]))
        assert r.is_sat

    def test_table2_shape_sat(self):
        r0 = Sym("func_ext@RETURN@0", INT, Role.STUB_RETURN)
        r1 = Sym("func_ext@RETURN@1", INT, Role.STUB_RETURN)
        g1 = Sym("globalVar@func_ext@1", INT, Role.STUB_GLOBAL)
        p1, p2 = Sym("p1", INT), Sym("p2", INT)
        c = make([
            mk_binop(">", r0, p2),
            mk_binop("==", r1, p1),
            mk_binop("==", g1, p2),
        ])
        r = solve(c)
        assert r.is_sat
        assert verify_model(c, r.model)

    def test_disequality_chain(self):
        x = Sym("x", SCHAR)
        conj = [mk_binop(">=", x, Const(0, SCHAR)),
                mk_binop("<=", x, Const(1, SCHAR)),
                mk_binop("!=", x, Const(0, SCHAR)),
                mk_binop("!=", x, Const(1, SCHAR))]
        r = solve(make(conj))
        assert r.is_unsat

    def test_budget_gives_unknown(self):
        # nonlinear equation the search cannot finish in two nodes
        x, y = Sym("x", INT), Sym("y", INT)
        prod = mk_binop("*", x, y, INT)
        c = make([mk_binop("==", prod, Const(1 << 30, INT)),
                  mk_binop(">", x, Const(3, INT)),
                  mk_binop(">", y, Const(3, INT))])
        r = solve(c, Budget(max_nodes=2, max_ms=100000))
        assert r.status == "unknown"
        assert r.reason


class TestModels:
    def test_pointer_offset_respects_region_dim(self):
        a = Sym("p@baseAddress", UINT, Role.PTR_BASE)
        x = Sym("p@offset", UINT, Role.PTR_OFFSET)
        free = {
            "p@baseAddress": ptr_free("p", [7, 0], {7: 3, 0: 0}, "p"),
            "p@offset": off_free("p", 10),
        }
        c = make([mk_binop("==", a, Const(7, UINT)),
                  mk_binop(">=", x, Const(0, UINT))], free)
        r = solve(c)
        assert r.is_sat
        assert 0 <= r.model.values["p@offset"] < 3

    def test_null_base_forces_zero_offset(self):
        a = Sym("p@baseAddress", UINT, Role.PTR_BASE)
        free = {
            "p@baseAddress": ptr_free("p", [8, 0], {8: 4, 0: 0}, "p"),
            "p@offset": off_free("p", 4),
        }
        c = make([mk_binop("==", a, Const(0, UINT))], free)
        r = solve(c)
        assert r.is_sat
        assert r.model.values.get("p@offset", 0) == 0

    def test_unconstrained_defaults_are_deterministic(self):
        x, y = Sym("x", INT), Sym("y", INT)
        c = make([mk_binop("==", x, x), mk_binop("==", y, y)])
        r1, r2 = solve(c), solve(c)
        assert r1.model.values == r2.model.values


class TestFloats:
    def test_float_equalities_from_literals(self):
        f = Sym("f", DOUBLE)
        c = make([mk_binop("==", f, Const(2.5, DOUBLE))])
        r = solve(c)
        assert r.is_sat
        assert r.model.values["f"] == 2.5

    def test_float_ordering_with_seeds(self):
        f, g = Sym("f", DOUBLE), Sym("g", DOUBLE)
        c = make([mk_binop("<", f, g)])
        r = solve(c)
        assert r.is_sat
        assert r.model.values["f"] < r.model.values["g"]

    def test_unknown_when_seeds_fail(self):
        f = Sym("f", DOUBLE)
        # seeds contain 3.25 +- 1 but not 3.25 / 2
        double = mk_binop("+", f, f, DOUBLE)
        c = make([mk_binop("==", double, Const(3.25, DOUBLE))])
        r = solve(c)
        assert r.status in ("sat", "unknown")
        if r.status == "unknown":
            assert "seed" in r.reason

    def test_triangle_floats(self):
        i, j, k = (Sym(n, DOUBLE) for n in "ijk")
        conj = [mk_binop(">=", v, Const(0.0, DOUBLE)) for v in (i, j, k)]
        conj.append(mk_binop(">", mk_binop("+", i, j, DOUBLE), k))
        conj.append(mk_binop(">", mk_binop("+", j, k, DOUBLE), i))
        conj.append(mk_binop(">", mk_binop("+", k, i, DOUBLE), j))
        conj.append(mk_binop("==", i, j))
        r = solve(c := make(conj))
        assert r.is_sat
        assert verify_model(c, r.model)


class TestDeterminism:
    def test_same_constraint_same_model(self):
        x1 = Sym("p1@offset", UINT, Role.PTR_OFFSET)
        x2 = Sym("p2@offset", UINT, Role.PTR_OFFSET)
        c1 = make([mk_binop("<", x1, x2), mk_range(x1, 0, 10), mk_range(x2, 0, 10)])
        a = solve(c1)
        b = solve(c1)
        assert a.status == b.status
        assert a.model.values == b.model.values
