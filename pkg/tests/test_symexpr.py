"""Expression-level tests: wraparound arithmetic, rendering, evaluation."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cunitgen.symexpr import (
    Const,
    EvalError,
    PointerVal,
    Ptr,
    Range,
    Sym,
    evaluate,
    free_symbols,
    mk_binop,
    mk_cast,
    mk_range,
    mk_unop,
    negate,
    render,
    render_conjunction,
    to_bool,
)
from cunitgen.typesys import (
    INT,
    LONG,
    PointerType,
    SCHAR,
    UCHAR,
    UINT,
    c_div,
    c_rem,
    wrap_int,
)


class TestWrap:
    def test_wrap_int_signed(self):
        assert wrap_int(2**31, INT) == -(2**31)
        assert wrap_int(-(2**31) - 1, INT) == 2**31 - 1
        assert wrap_int(300, SCHAR) == 44
        assert wrap_int(-1, UCHAR) == 255

    def test_c_division_truncates_toward_zero(self):
        assert c_div(7, 2) == 3
        assert c_div(-7, 2) == -3
        assert c_div(7, -2) == -3
        assert c_rem(-7, 2) == -1
        assert c_rem(7, -2) == 1

    @given(st.integers(-(2**40), 2**40))
    def test_wrap_is_idempotent(self, v):
        assert wrap_int(wrap_int(v, INT), INT) == wrap_int(v, INT)


class TestEvaluate:
    def test_signed_overflow_wraps(self):
        x = Sym("x", INT)
        e = mk_binop("+", x, Const(1, INT), INT)
        assert evaluate(e, {"x": 2**31 - 1}) == -(2**31)

    def test_unsigned_compare(self):
        a = Sym("a", UINT)
        b = Sym("b", INT)
        e = mk_binop(">", a, b)  # b converts to unsigned
        assert evaluate(e, {"a": 1, "b": -1}) == 0

    def test_division_by_zero_raises(self):
        x = Sym("x", INT)
        e = mk_binop("/", Const(4, INT), x, INT)
        with pytest.raises(EvalError):
            evaluate(e, {"x": 0})

    def test_pointer_equality(self):
        p = Ptr(Sym("p@baseAddress", UINT), Sym("p@offset", UINT), PointerType(SCHAR))
        q = Ptr(Sym("q@baseAddress", UINT), Sym("q@offset", UINT), PointerType(SCHAR))
        e = mk_binop("==", p, q)
        env = {"p@baseAddress": 5, "p@offset": 2, "q@baseAddress": 5, "q@offset": 2}
        assert evaluate(e, env) == 1
        env["q@offset"] = 3
        assert evaluate(e, env) == 0

    def test_null_pointers_equal(self):
        p = Ptr(Const(0, UINT), Const(0, UINT), PointerType(SCHAR))
        e = mk_binop("==", p, Const(0, INT))
        assert evaluate(e, {}) == 1

    def test_range(self):
        x = Sym("x", UINT)
        r = mk_range(x, 0, 10)
        assert evaluate(r, {"x": 9}) == 1
        assert evaluate(r, {"x": 10}) == 0

    def test_float32_rounding(self):
        from cunitgen.typesys import FLOAT

        e = mk_binop("+", Const(0.1, FLOAT), Const(0.2, FLOAT), FLOAT)
        v = evaluate(e, {})
        import struct

        assert v == struct.unpack("<f", struct.pack("<f", v))[0]


class TestRender:
    def test_conjunction_chain_without_parens(self):
        a, b, c = (Sym(n, INT) for n in "abc")
        e = mk_binop("&&", mk_binop("<", a, b),
                     mk_binop("&&", mk_binop("==", b, c), mk_binop(">", c, a)))
        assert render(e) == "a < b && b == c && c > a"

    def test_true_conjunct_suppressed(self):
        from cunitgen.symexpr import BinOp, TRUE
        from cunitgen.typesys import BOOL

        a = Sym("a", INT)
        chain = BinOp("&&", mk_binop("<", a, Const(3, INT)), TRUE, BOOL)
        assert render(chain) == "a < 3"

    def test_range_chained_form(self):
        assert str(mk_range(Sym("p1@offset", UINT), 0, 10)) == "0 <= p1@offset < 10"

    def test_precedence_parens(self):
        a, b = Sym("a", INT), Sym("b", INT)
        e = mk_binop("*", mk_binop("+", a, b, INT), Const(2, INT), INT)
        assert render(e) == "(a + b) * 2"

    def test_render_conjunction_skips_true(self):
        from cunitgen.symexpr import TRUE

        a = Sym("a", INT)
        assert render_conjunction([TRUE, mk_binop("<", a, Const(1, INT))]) == "a < 1"
        assert render_conjunction([TRUE]) == "true"


class TestNegate:
    def test_comparison_flip(self):
        a, b = Sym("a", INT), Sym("b", INT)
        assert render(negate(mk_binop("<", a, b))) == "a >= b"
        assert render(negate(mk_binop("==", a, b))) == "a != b"

    def test_de_morgan(self):
        a, b = Sym("a", INT), Sym("b", INT)
        e = mk_binop("&&", to_bool(a), to_bool(b))
        assert render(negate(e)) == "a == 0 || b == 0"

    @given(st.integers(-100, 100), st.integers(-100, 100))
    def test_negation_is_complement(self, va, vb):
        a, b = Sym("a", INT), Sym("b", INT)
        for op in ("<", "<=", ">", ">=", "==", "!="):
            e = mk_binop(op, a, b)
            env = {"a": va, "b": vb}
            assert bool(evaluate(e, env)) != bool(evaluate(negate(e), env))


class TestCast:
    @given(st.integers(-(2**31), 2**31 - 1))
    def test_int_to_char_wraps(self, v):
        e = mk_cast(Sym("x", INT), SCHAR)
        assert evaluate(e, {"x": v}) == wrap_int(v, SCHAR)

    def test_widening_preserves(self):
        e = mk_cast(Sym("x", SCHAR), LONG)
        assert evaluate(e, {"x": -5}) == -5

    def test_const_folds(self):
        assert mk_cast(Const(300, INT), SCHAR) == Const(44, SCHAR)


class TestFreeSymbols:
    def test_collects_in_order(self):
        a, b = Sym("a", INT), Sym("b", INT)
        e = mk_binop("&&", mk_binop("<", a, b), mk_binop(">", b, Const(0, INT)))
        assert [s.name for s in free_symbols(e)] == ["a", "b", "b"]


@settings(max_examples=200)
@given(
    st.integers(-(2**31), 2**31 - 1),
    st.integers(-(2**31), 2**31 - 1),
    st.sampled_from(["+", "-", "*", "&", "|", "^"]),
)
def test_binop_matches_reference_wraparound(x, y, op):
    """Evaluation agrees with direct two's-complement arithmetic."""
    e = mk_binop(op, Sym("x", INT), Sym("y", INT), INT)
    got = evaluate(e, {"x": x, "y": y})
    ref = {
        "+": x + y, "-": x - y, "*": x * y,
        "&": x & y, "|": x | y, "^": x ^ y,
    }[op]
    assert got == wrap_int(ref, INT)
