import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gabor_hrt_lab import expr as ex
from gabor_hrt_lab.expr import (
    ExprSyntaxError,
    TailConfig,
    classify,
    differentiate,
    evaluate,
    evaluate_array,
    evaluate_log_array,
    parse,
    to_source,
)

from .oracles import central_difference, mp_eval_source


# ---------------------------------------------------------------------------
# parsing

def test_parse_gaussian_shape():
    e = parse("exp(-x^2)")
    assert e.kind == "exp"
    inner = e.children[0]
    assert inner.kind == "neg"
    assert inner.children[0].kind == "pow"
    assert inner.children[0].exponent == Fraction(2)


def test_parse_le_showcase():
    e = parse("exp(sqrt(log(x))/log(log(x)))")
    assert e.kind == "exp"
    quot = e.children[0]
    assert quot.kind == "div"
    assert quot.children[0].kind == "root" and quot.children[0].degree == 2


def test_implicit_multiplication_rejected():
    with pytest.raises(ExprSyntaxError):
        parse("2x")


@pytest.mark.parametrize("bad", ["", "  ", "exp(", "x +", "foo(x)", "x^0.5", "1/0", "x^^2"])
def test_syntax_errors(bad):
    with pytest.raises(ExprSyntaxError):
        parse(bad)


def test_syntax_error_carries_position():
    with pytest.raises(ExprSyntaxError) as err:
        parse("x + $")
    assert err.value.position == 4


def test_whitespace_insensitive():
    assert parse("exp( - x ^ 2 )") == parse("exp(-x^2)")


def test_precedence_unary_minus_vs_power():
    # -x^2 is -(x^2): value at 2 is -4
    assert evaluate(parse("-x^2"), 2.0) == -4.0
    assert evaluate(parse("(-x)^2"), 2.0) == 4.0


def test_rootn_and_rational_exponents():
    assert evaluate(parse("root3(x)"), -8.0) == pytest.approx(-2.0)
    assert evaluate(parse("x^(1/2)"), 9.0) == pytest.approx(3.0)
    assert evaluate(parse("x^(-2)"), 2.0) == pytest.approx(0.25)
    assert evaluate(parse("abs(x)^(1/3)"), -8.0) == pytest.approx(2.0)


# random tree generator shared by round-trip and derivative properties

_LEAVES = ["x", "x", "pi", "const"]
_OPS_LE = ["add", "sub", "mul", "div", "exp", "log", "pow", "root"]
_OPS_ALL = _OPS_LE + ["abs", "sin", "cos", "neg"]


def random_tree(rng, depth, ops=_OPS_ALL):
    # built through the folding constructors so trees stay canonical
    if depth == 0 or rng.random() < 0.3:
        leaf = rng.choice(_LEAVES)
        if leaf == "const":
            c = 0.0
            while abs(c) < 1e-3:
                c = round(rng.uniform(-4, 4), 3)
            return ex.const(c)
        return ex.X if leaf == "x" else ex.PI
    op = rng.choice(ops)
    if op in ("add", "sub", "mul", "div"):
        return ex.Expr(op, (random_tree(rng, depth - 1, ops), random_tree(rng, depth - 1, ops)))
    if op == "pow":
        r = Fraction(rng.choice([1, 2, 3, -1, -2]), rng.choice([1, 1, 2, 3]))
        return ex.Expr("pow", (random_tree(rng, depth - 1, ops),), exponent=r)
    if op == "root":
        return ex.Expr("root", (random_tree(rng, depth - 1, ops),), degree=rng.choice([2, 3, 4]))
    if op == "neg":
        return ex.neg(random_tree(rng, depth - 1, ops))
    return ex.Expr(op, (random_tree(rng, depth - 1, ops),))


@given(st.integers(0, 10_000))
@settings(max_examples=200, deadline=None)
def test_print_parse_roundtrip(seed):
    rng = random.Random(seed)
    tree = random_tree(rng, rng.randint(0, 5))
    assert parse(to_source(tree)) == tree


def test_roundtrip_specific_corner_cases():
    for src in ["-x^2", "(-x)^2", "x-(x-x)", "x/(x/x)", "x^(-1/2)",
                "abs(x)^(2/3)", "-(x*x)", "x+-x", "(-2.5)*x"]:
        tree = parse(src)
        assert parse(to_source(tree)) == tree


# ---------------------------------------------------------------------------
# evaluation

def test_eval_basics():
    assert evaluate(parse("exp(-x^2)"), 0.0) == 1.0
    assert evaluate(parse("log(x)"), -1.0) is None
    assert evaluate(parse("1/(1+x^2)"), 2.0) == pytest.approx(0.2)
    assert evaluate(parse("x/(x-1)"), 1.0) is None


def test_eval_matches_high_precision_oracle():
    # frozen from the oracle: exp(sqrt(log(1e6))/log(log(1e6))) computed at 50 dps
    e = parse("exp(sqrt(log(x))/log(log(x)))")
    got = evaluate(e, 1e6)
    want = float(mp_eval_source(e, 1e6))
    assert abs(got - want) <= 1e-10 * abs(want)


@given(st.integers(0, 10_000))
@settings(max_examples=150, deadline=None)
def test_eval_array_agrees_with_scalar(seed):
    rng = random.Random(seed)
    tree = random_tree(rng, rng.randint(0, 4))
    xs = np.array([rng.uniform(-10, 10) for _ in range(7)])
    arr = evaluate_array(tree, xs)
    for x, v in zip(xs, arr):
        s = evaluate(tree, x)
        if s is None or not math.isfinite(s):
            continue
        if abs(s) > 1e12:
            continue
        assert v == pytest.approx(s, rel=1e-9, abs=1e-12)


@given(st.integers(0, 10_000))
@settings(max_examples=150, deadline=None)
def test_log_eval_agrees_with_oracle_when_well_conditioned(seed):
    rng = random.Random(seed)
    tree = random_tree(rng, rng.randint(0, 4))
    xs = np.array([rng.uniform(0.5, 30) for _ in range(5)])
    logmag, sign = evaluate_log_array(tree, xs)
    plain = evaluate_array(tree, xs)
    for x, lm, sg, v in zip(xs, logmag, sign, plain):
        if not math.isfinite(v) or abs(v) > 1e100 or (v != 0 and abs(v) < 1e-100):
            continue
        truth = mp_eval_source(tree, x)
        if truth is None:
            continue
        truth = float(truth)
        # interior cancellation amplifies rounding in any fixed-precision
        # path; only judge points the plain evaluator itself gets right
        if abs(v - truth) > 1e-9 * (1 + abs(truth)):
            continue
        rebuilt = sg * math.exp(lm) if not math.isnan(lm) else math.nan
        if math.isnan(rebuilt):
            continue  # log path may drop points to cancellation; never invents values
        assert abs(rebuilt - truth) <= 1e-6 * (1 + abs(truth))


def test_log_eval_reaches_below_underflow():
    logmag, sign = evaluate_log_array(parse("exp(-x^2)"), np.array([1e4]))
    assert sign[0] == 1.0
    assert logmag[0] == pytest.approx(-1e8)


# ---------------------------------------------------------------------------
# differentiation

def test_derivative_gaussian():
    e = parse("exp(-x^2)")
    d = differentiate(e)
    for x in (0.3, 1.0, 2.5):
        assert evaluate(d, x) == pytest.approx(-2 * x * math.exp(-x * x), rel=1e-12)


def test_derivative_log():
    d = differentiate(parse("log(x)"))
    assert evaluate(d, 5.0) == pytest.approx(0.2)


def test_derivative_le_quotient_vs_finite_differences():
    e = parse("sqrt(log(x))/log(log(x))")
    d = differentiate(e)
    got = evaluate(d, 100.0)
    want = central_difference(lambda t: evaluate(e, t), 100.0)
    assert abs(got - want) <= 1e-6 * (1 + abs(got))


def test_derivative_abs_flags_origin():
    d = differentiate(parse("abs(x)"))
    assert evaluate(d, 0.0) is None
    assert evaluate(d, 2.0) == pytest.approx(1.0)
    assert evaluate(d, -2.0) == pytest.approx(-1.0)


def _safe_pair(rng, ops):
    """Draw a (tree, x) pair where value, slope and curvature are all tame."""
    while True:
        tree = random_tree(rng, rng.randint(1, 5), ops)
        x = rng.uniform(2.0, 50.0)
        vals = [evaluate(tree, x + t) for t in (-2e-5, -1e-5, 0.0, 1e-5, 2e-5)]
        if any(v is None or not math.isfinite(v) or abs(v) > 1e8 for v in vals):
            continue
        d = differentiate(tree)
        dv = evaluate(d, x)
        if dv is None or not math.isfinite(dv) or abs(dv) > 1e8:
            continue
        curvature = abs(vals[0] - 2 * vals[2] + vals[4])
        if curvature > 1e-2:
            continue
        return tree, x, d, dv


def test_derivative_random_le_trees_match_central_differences():
    rng = random.Random(20240)
    for _ in range(100):
        tree, x, d, dv = _safe_pair(rng, _OPS_LE)
        cd = central_difference(lambda t: evaluate(tree, t), x)
        assert cd is not None
        assert abs(dv - cd) <= 1e-4 * (1 + abs(dv))


# ---------------------------------------------------------------------------
# classification

def test_classify_unbounded_trig_is_not_le():
    rep = classify(parse("sin(2*pi*x)"))
    assert not rep.is_le
    assert not rep.is_extended_hardy
    assert rep.square_integrable == "no"


def test_classify_bounded_trig_extension():
    rep = classify(parse("sin(x/(1+x^2))*exp(-sqrt(abs(x)))"))
    assert not rep.is_le
    assert rep.is_extended_hardy


def test_classify_gaussian():
    rep = classify(parse("exp(-x^2)"))
    assert rep.is_le and rep.is_extended_hardy
    assert rep.decay_class.kind == "super_exponential"
    assert rep.ultimately_decreasing_abs.state == "yes"
    assert rep.ultimately_positive.state == "yes"
    assert rep.square_integrable == "yes"
    assert rep.singular_points == ()


def test_classify_exponential_rate():
    rep = classify(parse("exp(-x)"))
    assert rep.decay_class.kind == "exponential"
    assert rep.decay_class.rate == pytest.approx(1.0, rel=1e-3)


def test_classify_lorentzian():
    rep = classify(parse("1/(1+x^2)"))
    assert rep.is_le
    assert rep.decay_class.kind == "subexponential"
    assert rep.square_integrable == "yes"


def test_classify_abs_kink_detected():
    rep = classify(parse("exp(-abs(x))"))
    assert rep.singular_points == pytest.approx((0.0,))
    assert rep.square_integrable == "yes"
    assert rep.decay_class.kind == "exponential"


def test_classify_smooth_even_power_of_abs_has_no_kink():
    rep = classify(parse("abs(x)^2*exp(-x^2)"))
    assert rep.singular_points == ()


def test_classify_shifted_kinks():
    rep = classify(parse("exp(-abs(x-1))+exp(-abs(x+1))"))
    assert rep.singular_points == pytest.approx((-1.0, 1.0))
    assert rep.ultimately_positive.state == "yes"
    assert rep.ultimately_decreasing_abs.state == "yes"


def test_classify_never_false_positive_sign():
    # cos(x/(1+x^2)) - 1 <= 0 everywhere: must not claim ultimately positive
    rep = classify(parse("(cos(x/(1+x^2))-1)-1"))
    assert rep.ultimately_positive.state != "yes"


@given(st.integers(0, 5_000))
@settings(max_examples=60, deadline=None)
def test_classify_yes_claims_are_backed_by_samples(seed):
    rng = random.Random(seed)
    tree = random_tree(rng, rng.randint(0, 3))
    cfg = TailConfig(50.0, 1e4, 512)
    rep = classify(tree, cfg)
    if rep.ultimately_positive.state == "yes":
        # independent spot check at high precision (plain float eval would
        # underflow genuinely positive values to 0.0)
        for x in np.geomspace(rep.ultimately_positive.witness, cfg.end, 16):
            truth = mp_eval_source(tree, float(x))
            if truth is not None:
                assert truth > 0


def test_le_closure_under_grammar_operations():
    rng = random.Random(7)
    for _ in range(50):
        a = random_tree(rng, 3, _OPS_LE)
        b = random_tree(rng, 3, _OPS_LE)
        assert ex.is_le_syntactic(a) and ex.is_le_syntactic(b)
        for kind in ("add", "sub", "mul", "div"):
            assert ex.is_le_syntactic(ex.Expr(kind, (a, b)))
        assert ex.is_le_syntactic(ex.Expr("exp", (a,)))
