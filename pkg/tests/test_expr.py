import math

import pytest
from hypothesis import given, strategies as st

from vnhc import expr as ex
from vnhc.expr import (
    Binary,
    Constant,
    EvalError,
    ParseError,
    Symbol,
    Unary,
    diff,
    evaluate,
    free_symbols,
    parse,
    to_string,
)

# Expressions exercised throughout the suite; envs keep log/sqrt in domain.
CORPUS = [
    ("sin(theta)^2*C1 - sin(theta)*cos(theta)*C2", {"theta": 0.7, "C1": 1.3, "C2": -0.4}),
    ("cos(theta)*C2 - sin(theta)*C1", {"theta": -0.3, "C1": 0.9, "C2": 2.0}),
    ("sqrt(1 + x^2)", {"x": 1.5}),
    ("exp(-x^2/2)", {"x": 0.8}),
    ("log(2 + cos(y))", {"y": 2.1}),
    ("tan(x/3)", {"x": 1.2}),
    ("x*y*z + x/y - z^3", {"x": 0.4, "y": 1.7, "z": -0.6}),
    ("(x + y)^3", {"x": 0.2, "y": 1.1}),
    ("2^x", {"x": 1.9}),
    ("x^y", {"x": 2.5, "y": 1.3}),
    ("m*(xd^2 + yd^2)/2", {"m": 2.0, "xd": 0.7, "yd": -1.1}),
]


def fd(e, s, env, h=1e-6):
    hi = dict(env, **{s: env[s] + h})
    lo = dict(env, **{s: env[s] - h})
    return (evaluate(e, hi) - evaluate(e, lo)) / (2 * h)


class TestParse:
    def test_structure(self):
        assert parse("sin(theta)*xd") == Binary(
            "mul", Unary("sin", Symbol("theta")), Symbol("xd")
        )

    def test_pow_right_assoc(self):
        assert evaluate(parse("2^3^2"), {}) == 512

    def test_unary_minus_binds_looser_than_pow(self):
        assert evaluate(parse("-x^2"), {"x": 3}) == -9

    def test_precedence(self):
        assert evaluate(parse("1 + 2*3^2"), {}) == 19
        assert evaluate(parse("(1 + 2)*3"), {}) == 9
        assert evaluate(parse("8/4/2"), {}) == 1  # left assoc

    def test_numbers(self):
        assert parse("2.5e-3") == Constant(0.0025)
        assert parse(".5") == Constant(0.5)

    def test_syntax_error_offset(self):
        with pytest.raises(ParseError) as err:
            parse("x + * y")
        assert err.value.offset == 4

    def test_unknown_function(self):
        with pytest.raises(ParseError, match="unknown function"):
            parse("sinh(x)")

    def test_unclosed_paren(self):
        with pytest.raises(ParseError):
            parse("(x + y")

    def test_trailing_garbage(self):
        with pytest.raises(ParseError):
            parse("x y")


class TestEval:
    def test_sin(self):
        assert evaluate(parse("sin(theta)"), {"theta": 0}) == 0

    def test_product(self):
        assert evaluate(parse("m*xd"), {"m": 2, "xd": 3}) == 6

    def test_current_term(self):
        v = evaluate(
            parse("cos(theta)*C2 - sin(theta)*C1"),
            {"theta": math.pi / 2, "C1": 1, "C2": 5},
        )
        assert v == pytest.approx(-1, abs=1e-15)

    def test_unbound_symbol(self):
        with pytest.raises(EvalError, match="unbound symbol 'x'"):
            evaluate(parse("x + 1"), {"y": 1})

    def test_division_by_zero_names_subexpression(self):
        with pytest.raises(EvalError, match=r"1 / x"):
            evaluate(parse("1/x"), {"x": 0})

    def test_log_domain(self):
        with pytest.raises(EvalError, match="domain"):
            evaluate(parse("log(x)"), {"x": -1})

    def test_deterministic(self):
        e = parse("sin(x)*exp(y) - x^3/7")
        env = {"x": 0.123456, "y": -0.654321}
        assert evaluate(e, env) == evaluate(e, env)


class TestDiff:
    def test_sin(self):
        assert diff(parse("sin(theta)"), "theta") == parse("cos(theta)")

    def test_product(self):
        d = diff(parse("x*y"), "x")
        for y in (0.0, -2.5, 7.0):
            assert evaluate(d, {"x": 3.0, "y": y}) == y

    def test_symbol_free_derivative_is_zero(self):
        assert diff(parse("sin(a)*b"), "x") == Constant(0.0)

    def test_no_new_symbols(self):
        for text, _ in CORPUS:
            e = parse(text)
            for s in free_symbols(e):
                assert free_symbols(diff(e, s)) <= free_symbols(e)

    def test_finite_difference_corpus(self, rng):
        for text, env in CORPUS:
            e = parse(text)
            for s in sorted(free_symbols(e)):
                d = diff(e, s)
                for _ in range(100):
                    pt = {
                        k: v + rng.uniform(-0.1, 0.1) for k, v in env.items()
                    }
                    sym = evaluate(d, pt)
                    num = fd(e, s, pt)
                    assert abs(sym - num) <= 1e-6 * (1 + abs(sym)), (text, s)

    def test_spec_example_fd(self, rng):
        e = parse("sin(theta)^2*C1 - sin(theta)*cos(theta)*C2")
        d = diff(e, "theta")
        for _ in range(100):
            env = {
                "theta": rng.uniform(-3, 3),
                "C1": rng.uniform(-2, 2),
                "C2": rng.uniform(-2, 2),
            }
            assert abs(evaluate(d, env) - fd(e, "theta", env)) <= 1e-6 * (
                1 + abs(evaluate(d, env))
            )

    def test_linearity_exact(self):
        a = parse("sin(x)*y")
        b = parse("x^3 - y/x")
        da, db = diff(a, "x"), diff(b, "x")
        dsum = diff(a + b, "x")
        for env in ({"x": 1.5, "y": 0.3}, {"x": -2.0, "y": 4.0}):
            assert evaluate(dsum, env) == evaluate(da, env) + evaluate(db, env)


class TestPrinter:
    @pytest.mark.parametrize("text", [t for t, _ in CORPUS])
    def test_round_trip_corpus(self, text):
        e = parse(text)
        assert parse(to_string(e)) == e

    def test_round_trip_derivatives(self):
        for text, _ in CORPUS:
            e = parse(text)
            for s in sorted(free_symbols(e)):
                d = diff(e, s)
                assert parse(to_string(d)) == d

    def test_negative_constant(self):
        e = Constant(-1.5)
        assert parse(to_string(e)) == e

    def test_nested_structure_preserved(self):
        for text in ["a - (b + c)", "a/(b*c)", "(a + b)*c", "(x^y)^z", "-(a*b)"]:
            e = parse(text)
            assert parse(to_string(e)) == e


_leaf = st.one_of(
    st.sampled_from([Symbol("x"), Symbol("y"), Symbol("z")]),
    st.floats(-5, 5, allow_nan=False).map(lambda v: Constant(float(v))),
)


def _combine(children):
    return st.one_of(
        st.tuples(st.sampled_from(["add", "sub", "mul"]), children, children).map(
            lambda t: {"add": ex.add, "sub": ex.sub, "mul": ex.mul}[t[0]](t[1], t[2])
        ),
        st.tuples(st.sampled_from(["sin", "cos"]), children).map(
            lambda t: ex.fn(t[0], t[1])
        ),
        children.map(ex.neg),
    )


_exprs = st.recursive(_leaf, _combine, max_leaves=12)


@given(_exprs)
def test_print_parse_round_trip_random(e):
    assert parse(to_string(e)) == e


@given(_exprs, _exprs)
def test_diff_linearity_random(a, b):
    env = {"x": 0.37, "y": -1.21, "z": 2.05}
    lhs = evaluate(diff(ex.add(a, b), "x"), env)
    rhs = evaluate(diff(a, "x"), env) + evaluate(diff(b, "x"), env)
    assert lhs == pytest.approx(rhs, abs=1e-9, rel=1e-9)


@given(_exprs)
def test_random_diff_matches_fd(e):
    env = {"x": 0.41, "y": -0.73, "z": 1.17}
    d = diff(e, "x")
    sym = evaluate(d, env)
    if abs(sym) < 1e6:  # keep FD meaningful away from blow-up
        assert abs(sym - fd(e, "x", env)) <= 1e-5 * (1 + abs(sym))
