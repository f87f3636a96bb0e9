"""Rule router: check machine-verifiable hypotheses of the known
independence criteria against a (generator, point set) pair and emit a
replayable certificate for the first rule whose predicates all pass.

Rules are ordered so that exact, cheap decisions win over numerical ones,
and so that special-purpose decay/positivity rules fire before the broad
analytic-class rules that would otherwise shadow them.  A certificate lists
every predicate with its evidence; re-running the named predicates against
the same inputs reproduces the passes (certificates are replayable).  When
nothing applies the router says so per rule instead of guessing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from gabor_hrt_lab import asym
from gabor_hrt_lab.dioph import difference_condition, lattice_membership, q_independence
from gabor_hrt_lab.expr import (
    Expr,
    TailConfig,
    classify,
    evaluate_log_array,
    evaluate_mp,
    reflect,
)
from gabor_hrt_lab.gram import GramReport, gram_report
from gabor_hrt_lab.points import LambdaSet
from gabor_hrt_lab.signal import Grid, dft, sample

__all__ = ["RouterConfig", "Certificate", "NoRule", "route", "corroborate",
           "replay", "RULE_ORDER"]

RULE_ORDER = (
    "R1_support",
    "R3_three_points",
    "R6_lattice",
    "R2_hermite",
    "T4_2_superexp",
    "T5_2_positive_qindep",
    "T3_9a_ratio_zero",
    "T3_9b_ratio_diffcond",
    "C3_10_five_points",
    "T5_6_four_point_positive",
    "T2_9_finite_singularities",
    "T2_4_hardy_LE",
)

# annotation-only rule ids: recorded in narratives, never emitted as winners
REPORT_ONLY_RULES = ("R4_R5_perturbation", "T2_7_perturbed_hardy")

_RULE_SUMMARY = {
    "R1_support": "generator supported on a compact set or half-line",
    "R3_three_points": "at most three time-frequency points",
    "R6_lattice": "points lie on a translate of a full-rank lattice",
    "R2_hermite": "generator is a polynomial times the square-exponential window",
    "T4_2_superexp": "two-sided faster-than-exponential decay with |g| ultimately decreasing",
    "T5_2_positive_qindep": "ultimately positive generator with rationally independent "
                            "frequency-shift differences",
    "T3_9a_ratio_zero": "unit-step ratio limit zero forces independence for any point set",
    "T3_9b_ratio_diffcond": "nonzero ratio limit plus a frequency shift unique to one point",
    "C3_10_five_points": "at most five points with ratio limits for the generator and its "
                         "Fourier transform",
    "T5_6_four_point_positive": "four points with a generator positive and decreasing on "
                                "both tails",
    "T2_9_finite_singularities": "analytic off a nonempty finite singular set",
    "T2_4_hardy_LE": "square-integrable log-exp class generator (tame trig extension allowed)",
}


@dataclass(frozen=True)
class RouterConfig:
    grid: Grid = Grid(8.0, 1024)
    tail: TailConfig = TailConfig()
    ratio_tail: TailConfig = TailConfig.ratio_default()
    ratio_alphas: tuple[float, ...] = (0.5, 1.0, 2.0)
    ratio_tol: float = asym.DEFAULT_TOL
    relation_bound: int = 10**6
    decay_variant: str = "l1"  # l1 | lp | pointwise (alternative decay evidence)
    threshold_rel: float = 1e-8

    def __post_init__(self):
        if self.decay_variant not in ("l1", "lp", "pointwise"):
            raise ValueError(f"unknown decay variant {self.decay_variant!r}")


@dataclass(frozen=True)
class Predicate:
    name: str
    outcome: str  # pass | fail
    evidence: str
    exact: bool = False

    def to_json_dict(self):
        return {"name": self.name, "outcome": self.outcome,
                "evidence": self.evidence, "exact": self.exact}


@dataclass(frozen=True)
class Certificate:
    rule: str
    predicates: tuple[Predicate, ...]
    confidence: str  # exact | numerical
    narrative: str
    citations: tuple[str, ...]

    def to_json_dict(self):
        return {
            "rule": self.rule,
            "predicates": [p.to_json_dict() for p in self.predicates],
            "confidence": self.confidence,
            "narrative": self.narrative,
            "citations": list(self.citations),
        }


@dataclass(frozen=True)
class NoRule:
    reasons: tuple[tuple[str, str], ...]  # (rule, first failing predicate + why)

    def to_json_dict(self):
        return {"rule": None,
                "reasons": [{"rule": r, "why": w} for r, w in self.reasons]}


class _Ctx:
    """Lazy, memoized evidence shared by the rule predicates."""

    def __init__(self, g, lam, cfg):
        self.g = g
        self.lam = lam
        self.cfg = cfg
        self._cache = {}

    def classify_plus(self):
        if "classify+" not in self._cache:
            self._cache["classify+"] = classify(self.g, self.cfg.tail)
        return self._cache["classify+"]

    def classify_minus(self):
        if "classify-" not in self._cache:
            self._cache["classify-"] = classify(reflect(self.g), self.cfg.tail)
        return self._cache["classify-"]

    def ratio(self, alpha):
        key = ("ratio", alpha)
        if key not in self._cache:
            self._cache[key] = asym.ratio_limit(self.g, alpha, self.cfg.ratio_tail,
                                                self.cfg.ratio_tol)
        return self._cache[key]

    def sampled(self):
        if "signal" not in self._cache:
            self._cache["signal"] = sample(self.g, self.cfg.grid)
        return self._cache["signal"]

    def lattice(self):
        if "lattice" not in self._cache:
            self._cache["lattice"] = lattice_membership(self.lam)
        return self._cache["lattice"]


# ---------------------------------------------------------------------------
# predicate implementations (registry-backed so certificates replay)

def _pred_half_line_support(ctx):
    probes = [3.0, 17.0, 170.0, 1.7e3, 1.7e5]
    left = [evaluate_mp(ctx.g, -x) for x in probes]
    right = [evaluate_mp(ctx.g, x) for x in probes]
    left_zero = all(v is not None and v == 0 for v in left)
    right_zero = all(v is not None and v == 0 for v in right)
    some_mass = any(v is not None and v != 0 for v in left + right
                    + [evaluate_mp(ctx.g, x) for x in (-0.3, 0.1, 0.7)])
    if (left_zero or right_zero) and some_mass:
        side = "left" if left_zero else "right"
        return Predicate("half_line_support", "pass",
                         f"{side} tail vanished at all high-precision probes", False)
    return Predicate("half_line_support", "fail",
                     "both tails carry mass at high-precision probes", False)


def _pred_card_at_most_3(ctx):
    n = len(ctx.lam)
    ok = n <= 3
    return Predicate("card_at_most_3", "pass" if ok else "fail",
                     f"point count {n}", True)


def _pred_card_eq_4(ctx):
    n = len(ctx.lam)
    return Predicate("card_eq_4", "pass" if n == 4 else "fail",
                     f"point count {n}", True)


def _pred_card_at_most_5(ctx):
    n = len(ctx.lam)
    return Predicate("card_at_most_5", "pass" if n <= 5 else "fail",
                     f"point count {n}", True)


def _pred_lambda_in_lattice(ctx):
    res = ctx.lattice()
    if res.status == "in_lattice":
        return Predicate("lambda_in_lattice", "pass",
                         f"basis {res.basis}, offset {res.offset}: {res.note}", True)
    return Predicate("lambda_in_lattice", "fail", f"{res.status}: {res.note}",
                     res.status == "not_in_lattice")


def _polynomial_degree(e):
    """Degree when the tree is a polynomial in x, else None."""
    k = e.kind
    if k == "const" or k == "pi":
        return 0
    if k == "x":
        return 1
    if k == "neg":
        return _polynomial_degree(e.children[0])
    if k in ("add", "sub"):
        a = _polynomial_degree(e.children[0])
        b = _polynomial_degree(e.children[1])
        return None if a is None or b is None else max(a, b)
    if k == "mul":
        a = _polynomial_degree(e.children[0])
        b = _polynomial_degree(e.children[1])
        return None if a is None or b is None else a + b
    if k == "div":
        a = _polynomial_degree(e.children[0])
        b = _polynomial_degree(e.children[1])
        if a is None or b is None or b != 0:
            return None
        return a
    if k == "pow":
        a = _polynomial_degree(e.children[0])
        r = e.exponent
        if a is None or r.denominator != 1 or r < 0:
            return None
        return a * r.numerator
    return None


def _eval_fraction_poly(e, x):
    """Exact evaluation of a polynomial-shaped tree at a rational point."""
    k = e.kind
    if k == "const":
        f = Fraction(e.value)
        return f
    if k == "pi":
        return None  # irrational constant: fall back to float identity test
    if k == "x":
        return x
    if k == "neg":
        v = _eval_fraction_poly(e.children[0], x)
        return None if v is None else -v
    if k in ("add", "sub", "mul", "div"):
        a = _eval_fraction_poly(e.children[0], x)
        b = _eval_fraction_poly(e.children[1], x)
        if a is None or b is None:
            return None
        if k == "add":
            return a + b
        if k == "sub":
            return a - b
        if k == "mul":
            return a * b
        return a / b if b != 0 else None
    if k == "pow":
        a = _eval_fraction_poly(e.children[0], x)
        return None if a is None else a ** e.exponent.numerator
    return None


def _hermite_split(e):
    """Split g = p(x) * exp(-x^2); returns (p, exact) or None."""
    def is_gauss_exponent(u):
        # exp argument must equal -x^2 as a polynomial identity
        deg = _polynomial_degree(u)
        if deg is None or deg > 2:
            return None
        exact = True
        for t in range(deg + 2):
            xt = Fraction(t + 1)
            v = _eval_fraction_poly(u, xt)
            if v is None:
                exact = False
                break
            if v != -xt * xt:
                return None
        if not exact:
            from gabor_hrt_lab.expr import evaluate
            for t in range(deg + 2):
                xv = float(t + 1)
                v = evaluate(u, xv)
                if v is None or abs(v + xv * xv) > 1e-12 * (1 + xv * xv):
                    return None
        return exact

    if e.kind == "exp":
        ok = is_gauss_exponent(e.children[0])
        if ok is not None:
            return Expr("const", value=1.0), ok
        return None
    if e.kind == "mul":
        for p_side, g_side in ((0, 1), (1, 0)):
            gauss = e.children[g_side]
            if gauss.kind == "exp":
                ok = is_gauss_exponent(gauss.children[0])
                if ok is None:
                    continue
                p = e.children[p_side]
                deg = _polynomial_degree(p)
                if deg is None:
                    continue
                return p, ok
    return None


def _pred_hermite_form(ctx):
    split = _hermite_split(ctx.g)
    if split is None:
        return Predicate("hermite_form", "fail",
                         "not a polynomial multiple of the square-exponential window", True)
    p, exact = split
    deg = _polynomial_degree(p)
    nonzero = False
    for t in range(deg + 2):
        v = _eval_fraction_poly(p, Fraction(t))
        if v is None:
            from gabor_hrt_lab.expr import evaluate
            fv = evaluate(p, float(t))
            if fv is not None and fv != 0:
                nonzero = True
                break
            exact = False
        elif v != 0:
            nonzero = True
            break
    if not nonzero:
        return Predicate("hermite_form", "fail", "polynomial factor is identically zero", True)
    return Predicate("hermite_form", "pass",
                     f"polynomial factor of degree {deg} times exp(-x^2)", exact)


def _pred_square_integrable(ctx):
    rep = ctx.classify_plus()
    ok = rep.square_integrable == "yes"
    return Predicate("square_integrable", "pass" if ok else "fail",
                     f"classifier says {rep.square_integrable} "
                     f"(decay {rep.decay_class.kind})", False)


def _pred_generator_nonzero(ctx):
    for x in (0.1, 0.7, 1.3, 2.9, -1.1):
        v = evaluate_mp(ctx.g, x)
        if v is not None and v != 0:
            return Predicate("generator_nonzero", "pass",
                             f"g({x}) != 0 at high precision", False)
    return Predicate("generator_nonzero", "fail",
                     "no nonzero sample found near the origin", False)


def _decay_evidence(ctx, rep):
    variant = ctx.cfg.decay_variant
    xs = np.geomspace(1.0, ctx.cfg.tail.end, 512)
    logmag, sign = evaluate_log_array(ctx.g, xs)
    notes = {"l1": "weighted-integrability evidence",
             "lp": "p-mean weighted evidence",
             "pointwise": "pointwise weighted-vanishing evidence"}
    for t in (1.0, 2.0, 4.0, 8.0):
        weighted = logmag + t * xs
        finite = weighted[~np.isnan(weighted)]
        if len(finite) < 64 or np.max(finite[-64:]) > -1.0:
            return False, f"exp({t}x)-weighted tail does not vanish ({notes[variant]})"
    return True, f"exp(tx)-weighted tail vanishes for t up to 8 ({notes[variant]})"


def _pred_superexp_decay(ctx):
    rep = ctx.classify_plus()
    if rep.decay_class.kind != "super_exponential":
        return Predicate("superexp_decay", "fail",
                         f"plus-tail decay class {rep.decay_class.kind}", False)
    ok, why = _decay_evidence(ctx, rep)
    if not ok:
        return Predicate("superexp_decay", "fail", why, False)
    # the minus tail must not grow exponentially (weighted mass there)
    xs = np.geomspace(1.0, ctx.cfg.tail.end, 512)
    logmag, _ = evaluate_log_array(reflect(ctx.g), xs)
    finite = logmag[np.isfinite(logmag)]
    if len(finite) >= 64:
        head = np.max(finite[:64])
        tail = np.max(finite[-64:])
        growth = (tail - head) / (xs[-1] - xs[0])
        if growth > 0.05:
            return Predicate("superexp_decay", "fail",
                             f"minus tail grows at exponential rate {growth:.3g}", False)
    return Predicate("superexp_decay", "pass",
                     f"slope-doubling divergence on the plus tail; {why}", False)


def _pred_abs_ultimately_decreasing(ctx):
    rep = ctx.classify_plus()
    st = rep.ultimately_decreasing_abs
    if st.state == "yes":
        return Predicate("abs_ultimately_decreasing", "pass",
                         f"|g| non-increasing beyond x = {st.witness}", False)
    if len(ctx.lam) >= 1:
        alphas = [p.alpha_float() for p in ctx.lam]
        m = min(alphas)
        if sum(1 for a in alphas if abs(a - m) < 1e-12) == 1:
            return Predicate("abs_ultimately_decreasing", "pass",
                             "fallback: a unique minimal time shift replaces monotonicity",
                             False)
    return Predicate("abs_ultimately_decreasing", "fail",
                     f"monotonicity {st.state} and no unique minimal time shift", False)


def _pred_ultimately_positive(ctx):
    rep = ctx.classify_plus()
    st = rep.ultimately_positive
    ok = st.state == "yes"
    return Predicate("ultimately_positive", "pass" if ok else "fail",
                     f"sign check {st.state}" + (f" beyond x = {st.witness}" if ok else ""),
                     False)


def _pred_beta_diffs_q_independent(ctx):
    betas = ctx.lam.betas()
    if not all(b.is_exact for b in betas):
        return Predicate("beta_diffs_q_independent", "fail",
                         "float frequency shifts cannot prove independence", False)
    n = len(betas)
    if n < 2:
        return Predicate("beta_diffs_q_independent", "pass",
                         "single point: nothing to relate", True)
    if n - 1 > 8:
        return Predicate("beta_diffs_q_independent", "fail",
                         "too many points for the exact relation search", False)
    for k0 in range(n):
        try:
            diffs = [betas[k] - betas[k0] for k in range(n) if k != k0]
        except Exception:
            continue
        if not all(d.is_exact for d in diffs):
            continue
        if any(d.is_zero() for d in diffs):
            continue
        rep = q_independence(diffs, bound=ctx.cfg.relation_bound)
        if not rep.found:
            return Predicate("beta_diffs_q_independent", "pass",
                             f"differences from point {k0 + 1} are exactly independent "
                             f"({rep.note})", True)
    return Predicate("beta_diffs_q_independent", "fail",
                     "every base point leaves rationally dependent differences", True)


def _pred_ratio_limits_exist(ctx):
    statuses = []
    for alpha in ctx.cfg.ratio_alphas:
        est = ctx.ratio(float(alpha))
        statuses.append(f"l({alpha})={est.status}")
        if est.status not in ("finite", "zero"):
            return Predicate("ratio_limits_exist", "fail", "; ".join(statuses), False)
    return Predicate("ratio_limits_exist", "pass",
                     "; ".join(statuses) + " (sampled alpha set)", False)


def _pred_ratio_limit_one_zero(ctx):
    est = ctx.ratio(1.0)
    ok = est.status == "zero"
    return Predicate("ratio_limit_one_zero", "pass" if ok else "fail",
                     f"l(1) status {est.status}", False)


def _pred_ratio_limit_one_nonzero(ctx):
    est = ctx.ratio(1.0)
    ok = est.status == "finite" and abs(est.value) > 1e-6
    detail = f"l(1) status {est.status}"
    if est.status == "finite":
        detail += f", |l(1)| = {abs(est.value):.6g}"
    return Predicate("ratio_limit_one_nonzero", "pass" if ok else "fail", detail, False)


def _pred_difference_condition(ctx):
    res = difference_condition(ctx.lam)
    if res.holds:
        return Predicate("difference_condition", "pass",
                         f"frequency shift of point {res.index} is unique", True)
    return Predicate("difference_condition", "fail",
                     "every frequency shift value repeats", True)


def _grid_ratio_statuses(sig, alphas, tol):
    """Coarse existence check for ratio limits of a sampled signal.

    Works on the signal's own grid tail, so this is only a window heuristic:
    stable magnitudes pass as finite, uniformly shrinking ones as zero,
    erratic ones fail.
    """
    vals = sig.samples
    grid = sig.grid
    xs = grid.points()
    out = []
    for alpha in alphas:
        shift = int(round(alpha / grid.spacing))
        if shift <= 0:
            out.append(("skip", alpha))
            continue
        lo = int(np.searchsorted(xs, 1.0))
        hi = grid.count - shift
        if hi - lo < 32:
            out.append(("inconclusive", alpha))
            continue
        num = vals[lo + shift: hi + shift]
        den = vals[lo: hi]
        mags = np.abs(den)
        live = mags > 1e-9 * float(np.max(np.abs(vals)))
        if live.sum() < 32:
            out.append(("zero", alpha))
            continue
        ratio = np.abs(num[live] / den[live])
        k = max(8, len(ratio) // 4)
        tail = ratio[-k:]
        prev = ratio[-2 * k: -k] if len(ratio) >= 2 * k else ratio[:k]
        spread = float(np.max(tail) - np.min(tail))
        spread_prev = float(np.max(prev) - np.min(prev)) if len(prev) else math.inf
        scale = 1.0 + float(np.median(tail))
        steps = np.diff(tail)
        turning = float(np.mean(steps[:-1] * steps[1:] < 0)) if len(steps) > 2 else 1.0
        if spread <= 10 * tol * scale:
            out.append(("finite", alpha))
        elif turning < 0.15 and spread < 0.8 * spread_prev:
            # monotone drift with shrinking spread: converging at the
            # window's edge even though the grid cannot reach the limit
            out.append(("finite", alpha))
        elif np.median(tail) < 0.2 and np.median(tail) < 0.5 * np.median(ratio[:k]):
            out.append(("zero", alpha))
        else:
            out.append(("no_limit", alpha))
    return out


def _pred_ghat_ratio_limits_exist(ctx):
    sig = ctx.sampled()
    ghat = dft(sig)
    statuses = _grid_ratio_statuses(ghat, ctx.cfg.ratio_alphas, ctx.cfg.ratio_tol)
    bad = [f"l_ghat({a})={s}" for s, a in statuses if s in ("no_limit", "inconclusive")]
    detail = "; ".join(f"l_ghat({a})={s}" for s, a in statuses)
    detail += " (grid-window heuristic, finite alpha set)"
    if bad:
        return Predicate("ghat_ratio_limits_exist", "fail", detail, False)
    return Predicate("ghat_ratio_limits_exist", "pass", detail, False)


def _pred_both_tails_positive_decreasing(ctx):
    plus = ctx.classify_plus()
    minus = ctx.classify_minus()
    parts = []
    ok = True
    for name, rep in (("plus", plus), ("minus", minus)):
        pos = rep.ultimately_positive.state
        dec = rep.ultimately_decreasing_abs.state
        parts.append(f"{name} tail: positive {pos}, decreasing {dec}")
        ok = ok and pos == "yes" and dec == "yes"
    return Predicate("both_tails_positive_decreasing", "pass" if ok else "fail",
                     "; ".join(parts), False)


def _pred_finite_singularities(ctx):
    rep = ctx.classify_plus()
    pts = rep.singular_points
    if not pts:
        return Predicate("finite_singularities", "fail",
                         "no confirmed singular point (the rule needs a nonempty set)", False)
    if len(pts) > 64:
        return Predicate("finite_singularities", "fail",
                         "singular set looks infinite on the scan window", False)
    return Predicate("finite_singularities", "pass",
                     f"confirmed singular points {list(pts)}", False)


def _pred_extended_hardy(ctx):
    rep = ctx.classify_plus()
    if rep.is_le:
        return Predicate("extended_hardy_class", "pass", "syntactically log-exp", True)
    if rep.is_extended_hardy:
        return Predicate("extended_hardy_class", "pass",
                         "log-exp with tame trig/abs atoms (bounded arguments verified "
                         "on the tail window)", False)
    return Predicate("extended_hardy_class", "fail",
                     "contains trig atoms with unbounded arguments or sign-changing "
                     "abs arguments", True)


def _pred_ultimately_analytic(ctx):
    rep = ctx.classify_plus()
    pts = rep.singular_points
    if pts and max(pts) > ctx.cfg.tail.start:
        return Predicate("ultimately_analytic", "fail",
                         f"singular point {max(pts)} inside the tail window", False)
    return Predicate("ultimately_analytic", "pass",
                     "no confirmed singular point beyond the tail start", False)


_PREDICATES = {
    "half_line_support": _pred_half_line_support,
    "card_at_most_3": _pred_card_at_most_3,
    "card_eq_4": _pred_card_eq_4,
    "card_at_most_5": _pred_card_at_most_5,
    "lambda_in_lattice": _pred_lambda_in_lattice,
    "hermite_form": _pred_hermite_form,
    "square_integrable": _pred_square_integrable,
    "generator_nonzero": _pred_generator_nonzero,
    "superexp_decay": _pred_superexp_decay,
    "abs_ultimately_decreasing": _pred_abs_ultimately_decreasing,
    "ultimately_positive": _pred_ultimately_positive,
    "beta_diffs_q_independent": _pred_beta_diffs_q_independent,
    "ratio_limits_exist": _pred_ratio_limits_exist,
    "ratio_limit_one_zero": _pred_ratio_limit_one_zero,
    "ratio_limit_one_nonzero": _pred_ratio_limit_one_nonzero,
    "difference_condition": _pred_difference_condition,
    "ghat_ratio_limits_exist": _pred_ghat_ratio_limits_exist,
    "both_tails_positive_decreasing": _pred_both_tails_positive_decreasing,
    "finite_singularities": _pred_finite_singularities,
    "extended_hardy_class": _pred_extended_hardy,
    "ultimately_analytic": _pred_ultimately_analytic,
}

_RULES = {
    "R1_support": ("half_line_support", "generator_nonzero"),
    "R3_three_points": ("card_at_most_3",),
    "R6_lattice": ("lambda_in_lattice", "square_integrable", "generator_nonzero"),
    "R2_hermite": ("hermite_form",),
    "T4_2_superexp": ("superexp_decay", "abs_ultimately_decreasing", "generator_nonzero"),
    "T5_2_positive_qindep": ("ultimately_positive", "beta_diffs_q_independent",
                             "square_integrable"),
    "T3_9a_ratio_zero": ("square_integrable", "ratio_limits_exist", "ratio_limit_one_zero"),
    "T3_9b_ratio_diffcond": ("square_integrable", "ratio_limits_exist",
                             "ratio_limit_one_nonzero", "difference_condition"),
    "C3_10_five_points": ("card_at_most_5", "square_integrable", "generator_nonzero",
                          "ratio_limits_exist", "ghat_ratio_limits_exist"),
    "T5_6_four_point_positive": ("card_eq_4", "square_integrable",
                                 "both_tails_positive_decreasing"),
    "T2_9_finite_singularities": ("square_integrable", "generator_nonzero",
                                  "finite_singularities"),
    "T2_4_hardy_LE": ("square_integrable", "generator_nonzero", "extended_hardy_class",
                      "ultimately_analytic"),
}

_PERTURBATION_NOTE = (
    "Perturbation stability (report-only, rules R4_R5_perturbation and "
    "T2_7_perturbed_hardy): the certified independence survives some "
    "sufficiently small L2 change of the generator or Euclidean move of the "
    "points, and additive terms vanishing relative to a certified analytic "
    "part; the size of the allowed perturbation is existential and is not "
    "machine-checked."
)


def _narrative(rule, lam):
    base = (f"Rule {rule} applies: {_RULE_SUMMARY[rule]}. "
            f"The {len(lam)}-point system is certified linearly independent "
            "subject to a nonzero square-integrable generator. ")
    return base + _PERTURBATION_NOTE


def route(g, lam, cfg=None):
    """Certify the first rule whose predicates all pass, in RULE_ORDER.

    Predicate errors demote a rule to a recorded failure; they never abort
    routing.  Returns a :class:`Certificate` or a :class:`NoRule` with the
    per-rule failure reasons.
    """
    cfg = cfg or RouterConfig()
    ctx = _Ctx(g, lam, cfg)
    reasons = []
    for rule in RULE_ORDER:
        checked = []
        failed = None
        for name in _RULES[rule]:
            try:
                pred = _PREDICATES[name](ctx)
            except Exception as err:  # demote, never abort
                pred = Predicate(name, "fail", f"inconclusive: {err}", False)
            checked.append(pred)
            if pred.outcome != "pass":
                failed = pred
                break
        if failed is None:
            confidence = "exact" if all(p.exact for p in checked) else "numerical"
            return Certificate(rule, tuple(checked), confidence,
                               _narrative(rule, lam),
                               tuple(f"{rule}: {_RULE_SUMMARY[rule]}" for rule in (rule,)))
        reasons.append((rule, f"{failed.name}: {failed.evidence}"))
    return NoRule(tuple(reasons))


def replay(cert, g, lam, cfg=None):
    """Re-evaluate every predicate named in a certificate; True if all pass."""
    cfg = cfg or RouterConfig()
    ctx = _Ctx(g, lam, cfg)
    for pred in cert.predicates:
        try:
            again = _PREDICATES[pred.name](ctx)
        except Exception:
            return False
        if again.outcome != "pass":
            return False
    return True


def corroborate(cert_or_none, g, lam, cfg=None):
    """Numerical cross-check: sample, build the Gram report, flag surprises.

    A "dependent" verdict here contradicts every certified rule (and the
    conjecture the rules serve), so it is flagged as an almost-surely
    numerical artifact rather than silently returned.
    """
    cfg = cfg or RouterConfig()
    sig = sample(g, cfg.grid)
    rep = gram_report(sig, lam, threshold=cfg.threshold_rel * sig.l2_norm**2)
    if rep.verdict == "dependent":
        extra = "dependent verdict contradicts the certified rule" if cert_or_none \
            else "dependent verdict is almost surely a discretization artifact"
        note = rep.note + ("; " if rep.note else "") + f"LOUD: {extra}"
        rep = GramReport(rep.matrix, rep.singular_values, rep.sigma_min, rep.verdict,
                         rep.threshold_used, rep.grid, note)
    return rep
