import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from projbilliard.errors import EvalError, InputError, ParseError
from projbilliard.expr import (
    FUNCTIONS,
    BinOp,
    Call,
    Neg,
    Num,
    Var,
    eval_with_gradient,
    evaluate,
    parse_expression,
    to_text,
)

ELLIPSOID = "x1^2/4 + x2^2/2 + x3^2 - 1"

SMOOTH = [
    ELLIPSOID,
    "sin(x1) * cosh(x2) - x3^3",
    "exp(x1/3) + x2 * x3 / (2 + x1^2)",
    "sqrt(1 + x1^2 + x2^2) - sinh(x3/2)",
    "(x1 - x2)^2 * cos(x3) + 2^x1",
    "abs(x1 + 3) * x2 - x3 / 7",
    "-x1^2 + x2^4 - x1*x2*x3",
]


def test_ellipsoid_tree():
    e = parse_expression(ELLIPSOID, 3)
    sq = lambda i: BinOp("^", Var(i), Num(2.0))  # noqa: E731
    expected = BinOp(
        "-",
        BinOp("+", BinOp("+", BinOp("/", sq(1), Num(4.0)), BinOp("/", sq(2), Num(2.0))), sq(3)),
        Num(1.0),
    )
    assert e.root == expected


def test_parse_errors():
    with pytest.raises(ParseError) as exc:
        parse_expression("x1 +", 3)
    assert exc.value.offset == 4
    with pytest.raises(InputError):
        parse_expression("x4", 3)
    with pytest.raises(ParseError):
        parse_expression("foo(x1)", 3)
    with pytest.raises(ParseError) as exc:
        parse_expression("é + $", 3)
    assert exc.value.offset == 0
    with pytest.raises(ParseError) as exc:
        parse_expression("(x1 + x2", 3)
    assert exc.value.offset == 8
    with pytest.raises(ParseError):
        parse_expression("1e999", 1)


def test_byte_offsets_count_utf8():
    with pytest.raises(ParseError) as exc:
        parse_expression("x1 + é", 2)
    assert exc.value.offset == 5
    with pytest.raises(ParseError) as exc:
        parse_expression("éé", 2)
    assert exc.value.offset == 0


def test_precedence():
    assert evaluate(parse_expression("-x1^2", 1), [3.0]) == -9.0
    assert evaluate(parse_expression("2^-1", 1), [0.0]) == 0.5
    assert evaluate(parse_expression("2^3^2", 1), [0.0]) == 512.0
    assert evaluate(parse_expression("8/4/2", 1), [0.0]) == 1.0
    assert evaluate(parse_expression("1 - 2 - 3", 1), [0.0]) == -4.0
    assert evaluate(parse_expression("(-2)^2", 1), [0.0]) == 4.0


def test_gradient_examples():
    v, g = eval_with_gradient(parse_expression(ELLIPSOID, 3), [2.0, 0.0, 0.0])
    assert v == 0.0
    np.testing.assert_array_equal(g, [1.0, 0.0, 0.0])
    v, g = eval_with_gradient(parse_expression("x1*x2", 3), [3.0, 5.0, 0.0])
    assert v == 15.0
    np.testing.assert_array_equal(g, [5.0, 3.0, 0.0])


@pytest.mark.parametrize(
    "text, x",
    [
        ("sqrt(x1)", [-1.0, 0.0, 0.0]),
        ("1/x1", [0.0, 0.0, 0.0]),
        ("x1^-1", [0.0, 0.0, 0.0]),
        ("x1^0.5", [-2.0, 0.0, 0.0]),
        ("exp(x1)", [1000.0, 0.0, 0.0]),
        ("x2^x1", [1.0, -1.0, 0.0]),
    ],
)
def test_domain_errors(text, x):
    e = parse_expression(text, 3)
    with pytest.raises(EvalError) as exc:
        eval_with_gradient(e, x)
    assert exc.value.node is not None
    assert to_text(exc.value.node) in str(exc.value)


def test_sqrt_at_zero():
    e = parse_expression("sqrt(x1)", 1)
    assert evaluate(e, [0.0]) == 0.0
    with pytest.raises(EvalError):
        eval_with_gradient(e, [0.0])
    assert eval_with_gradient(parse_expression("sqrt(x1^2 + 1) - 1", 1), [0.0]) == (0.0, pytest.approx([0.0]))


def test_bad_points():
    e = parse_expression("x1", 2)
    with pytest.raises(InputError):
        evaluate(e, [1.0])
    with pytest.raises(InputError):
        evaluate(e, [math.nan, 0.0])


def test_bytes_input():
    assert parse_expression(b"x1 + 1", 1) == parse_expression("x1+1", 1)
    with pytest.raises(ParseError):
        parse_expression(b"\xff", 1)


def _fd_gradient(e, x, h=1e-5):
    g = np.empty(len(x))
    for k in range(len(x)):
        d = np.zeros(len(x))
        d[k] = h
        g[k] = (evaluate(e, x + d) - evaluate(e, x - d)) / (2 * h)
    return g


def gradient_fd_agreement(n, seed=0):
    """Worst relative gap between dual-number and finite-difference gradients."""
    rng = np.random.default_rng(seed)
    exprs = [parse_expression(t, 3) for t in SMOOTH]
    worst = 0.0
    for i in range(n):
        e = exprs[i % len(exprs)]
        x = rng.uniform(-1.5, 1.5, 3)
        _, g = eval_with_gradient(e, x)
        fd = _fd_gradient(e, x)
        worst = max(worst, np.linalg.norm(g - fd) / max(1.0, np.linalg.norm(g)))
    return worst


def test_gradient_matches_finite_differences():
    assert gradient_fd_agreement(300) <= 1e-6


# -- property tests ---------------------------------------------------------

numbers = st.floats(0, 1e6, allow_nan=False, allow_infinity=False)
leaves = st.one_of(numbers.map(Num), st.integers(1, 3).map(Var))


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.builds(BinOp, st.sampled_from(["+", "-", "*", "/", "^"]), children, children),
        st.builds(Call, st.sampled_from(FUNCTIONS), children),
    )


trees = st.recursive(leaves, _extend, max_leaves=25)


@settings(max_examples=300, deadline=None)
@given(trees)
def test_print_parse_roundtrip(tree):
    text = to_text(tree)
    assert parse_expression(text, 3).root == tree


@settings(max_examples=300, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.text(alphabet="x0123456789.eE+-*/^() sincoqrtahbpé", max_size=40))
def test_parser_is_total(text):
    try:
        e = parse_expression(text, 3)
    except ParseError as exc:
        assert 0 <= exc.offset <= len(text.encode("utf-8"))
        return
    except InputError:
        return
    assert parse_expression(str(e), 3) == e


@settings(max_examples=200, deadline=None)
@given(trees, st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_evaluation_is_deterministic_and_safe(tree, x):
    e = parse_expression(to_text(tree), 3)
    try:
        a = eval_with_gradient(e, x)
    except EvalError:
        return
    b = eval_with_gradient(e, x)
    assert a[0] == b[0] and np.array_equal(a[1], b[1])
    assert math.isfinite(a[0])
