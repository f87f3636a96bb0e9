"""Tail asymptotics of generators: ratio-limit estimation and algebra, the
power-law consequence for square-integrable generators, the log-derivative
shortcut, and germ comparison at infinity.

All estimators sample geometrically over a configurable tail window and
report an honest residual (the worst deviation over the last quarter of the
window).  Evaluation runs in signed-log form so ratios of generators far
below the double-precision underflow floor stay meaningful.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from gabor_hrt_lab.expr import (
    TailConfig,
    _eval_mp,
    differentiate,
    evaluate_log_array,
)

__all__ = [
    "RatioLimitEstimate",
    "LogDerivativeLimit",
    "GermOrder",
    "HypothesisViolation",
    "ratio_limit",
    "ratio_limit_algebra",
    "power_law_check",
    "log_derivative_limit",
    "germ_compare",
]

DEFAULT_TOL = 1e-3
_ZERO_FLOOR = 1e-12
_DIVERGENT_FLOOR = 1e8


class HypothesisViolation(RuntimeError):
    """An estimator's precondition (a needed limit existing) failed."""


@dataclass(frozen=True)
class RatioLimitEstimate:
    alpha: float
    status: str  # finite | zero | divergent | no_limit | inconclusive
    value: complex | None
    residual: float | None
    window: tuple[float, float]
    note: str = ""

    def magnitude(self):
        if self.status == "zero":
            return 0.0
        if self.status == "finite":
            return abs(self.value)
        return None

    def to_json_dict(self):
        doc = {
            "alpha": self.alpha,
            "status": self.status,
            "residual": self.residual,
            "window": list(self.window),
            "note": self.note,
        }
        if self.value is None:
            doc["value"] = None
        else:
            doc["value"] = {"re": self.value.real, "im": self.value.imag}
        return doc


def _cancellation_mask(l_num, l_den):
    """Entries where rounding in l_num - l_den ate the meaningful digits.

    Two log-magnitudes of size ~1e15 carry no float64 information about a
    difference of size ~1; such samples need the high-precision fallback.
    """
    err = (np.abs(l_num) + np.abs(l_den)) * 2.0**-52
    return np.isfinite(err) & (err > 1e-3)


def _mp_float(v):
    if v == 0:
        return 0.0
    try:
        f = float(v)
    except OverflowError:
        return math.inf if v > 0 else -math.inf
    return f


def _mp_ratio(num_expr, x_num, den_expr, x_den, dps=50):
    """num(x_num) / den(x_den) at high precision, saturated to float."""
    with mpmath.workdps(dps):
        n = _eval_mp(num_expr, mpmath.mpf(x_num))
        d = _eval_mp(den_expr, mpmath.mpf(x_den))
        if n is None or d is None or d == 0:
            return math.nan
        return _mp_float(n / d)


def _ratio_values(num_expr, xs_num, den_expr, xs_den):
    """Elementwise num/den in signed-log form with an mpmath rescue pass."""
    l_num, s_num = evaluate_log_array(num_expr, xs_num)
    l_den, s_den = evaluate_log_array(den_expr, xs_den)
    bad = np.isnan(l_num) | np.isnan(l_den) | (s_den == 0)
    with np.errstate(over="ignore"):
        vals = s_num * s_den * np.exp(l_num - l_den)
    vals = np.where(s_num == 0, 0.0, vals)  # exact zero numerator
    vals = np.where(bad, np.nan, vals)
    for i in np.flatnonzero(_cancellation_mask(l_num, l_den) & ~bad):
        vals[i] = _mp_ratio(num_expr, xs_num[i], den_expr, xs_den[i])
    return vals


def _ratio_samples(e, alpha, cfg):
    """Values of g(x+alpha)/g(x) over the window, NaN where undefined."""
    xs = cfg.samples()
    return xs, _ratio_values(e, xs + alpha, e, xs)


def _classify_sequence(xs, vals, alpha, cfg, tol):
    window = (cfg.start, cfg.end)
    defined = ~np.isnan(vals)  # inf counts as defined (divergence evidence)
    if defined.mean() < 0.7:
        return RatioLimitEstimate(alpha, "inconclusive", None, None, window,
                                  "too many undefined tail evaluations")
    raw_quarter = vals[-len(vals) // 4:]
    raw_quarter = raw_quarter[~np.isnan(raw_quarter)]
    if len(raw_quarter) < 8:
        return RatioLimitEstimate(alpha, "inconclusive", None, None, window,
                                  "tail quarter mostly undefined")
    if np.median(np.abs(raw_quarter)) >= _DIVERGENT_FLOOR:
        return RatioLimitEstimate(alpha, "divergent", None, None, window,
                                  "tail magnitudes beyond the divergence floor")
    quarter = raw_quarter[np.isfinite(raw_quarter)]
    if len(quarter) < 8:
        return RatioLimitEstimate(alpha, "inconclusive", None, None, window,
                                  "tail quarter mostly non-finite")

    mags = np.abs(quarter)
    if np.max(mags) <= _ZERO_FLOOR:
        return RatioLimitEstimate(alpha, "zero", 0j, float(np.max(mags)), window)

    est = complex(np.mean(quarter))
    residual = float(np.max(np.abs(quarter - est)))
    scale = 1.0 + abs(est)
    if residual <= tol * scale:
        if abs(est) <= _ZERO_FLOOR:
            return RatioLimitEstimate(alpha, "zero", 0j, residual, window)
        return RatioLimitEstimate(alpha, "finite", est, residual, window)

    # distinguish genuine oscillation from slow convergence: exhibit two
    # subsequences whose values stay separated across the last two quarters,
    # and refuse the label when the tail is monotone (slow convergence)
    third = vals[-len(vals) // 2: -len(vals) // 4]
    third = third[np.isfinite(third)]

    def _cluster_gap(w):
        order = np.argsort(w.real)
        k = max(3, len(w) // 10)
        return complex(np.mean(w[order[:k]])), complex(np.mean(w[order[-k:]]))

    low4, high4 = _cluster_gap(quarter)
    steps = np.diff(quarter.real)
    turning = float(np.mean(steps[:-1] * steps[1:] < 0)) if len(steps) > 2 else 0.0
    if len(third) >= 8:
        low3, high3 = _cluster_gap(third)
        separated = (abs(high4 - low4) > 10 * tol * scale
                     and abs(high3 - low3) > 10 * tol * scale)
        if separated and turning > 0.2:
            return RatioLimitEstimate(
                alpha, "no_limit", None, residual, window,
                f"two subsequences near {low4:.6g} and {high4:.6g} stay separated")
    return RatioLimitEstimate(alpha, "inconclusive", None, residual, window,
                              "not converged within tolerance on this window")


def ratio_limit(e, alpha, cfg=None, tol=DEFAULT_TOL):
    """Estimate the limit of g(x+alpha)/g(x) as x grows.

    Cauchy-style detection on a geometric grid: the estimate is the mean of
    the last quarter of the window and the residual its worst deviation.
    "no_limit" is only reported when two separated subsequences are found,
    never merely because convergence is slow.
    """
    cfg = cfg or TailConfig.ratio_default()
    xs, vals = _ratio_samples(e, float(alpha), cfg)
    return _classify_sequence(xs, vals, float(alpha), cfg, tol)


def ratio_limit_algebra(base, op, **kwargs):
    """Closed-form transport of a ratio-limit estimate.

    op is one of 'translate' (a=), 'modulate' (beta=), 'dilate' (r=),
    'product' (other=), 'additivity' (other=).  Translation leaves the value
    alone; modulation rotates it by the unimodular phase; dilation by r turns
    an estimate at alpha into one for the dilated generator at alpha/r;
    product and additivity multiply values (the latter adds the alphas).
    """
    if base.status not in ("finite", "zero"):
        return RatioLimitEstimate(base.alpha, "inconclusive", None, base.residual,
                                  base.window, f"algebra on a {base.status} input")
    value = base.value if base.value is not None else 0j

    if op == "translate":
        return base
    if op == "modulate":
        beta = float(kwargs["beta"])
        phase = cmath.exp(2j * math.pi * beta * base.alpha)
        return RatioLimitEstimate(base.alpha, base.status, phase * value,
                                  base.residual, base.window, "modulated")
    if op == "dilate":
        r = float(kwargs["r"])
        if r == 0:
            raise ValueError("dilation factor must be nonzero")
        return RatioLimitEstimate(base.alpha / r, base.status, value,
                                  base.residual, base.window,
                                  f"dilated estimate repositioned from alpha={base.alpha}")
    if op in ("product", "additivity"):
        other = kwargs["other"]
        if other.status not in ("finite", "zero"):
            return RatioLimitEstimate(base.alpha, "inconclusive", None, None,
                                      base.window, f"algebra on a {other.status} input")
        ov = other.value if other.value is not None else 0j
        prod = value * ov
        status = "zero" if ("zero" in (base.status, other.status) or prod == 0) else "finite"
        alpha = base.alpha if op == "product" else base.alpha + other.alpha
        if op == "product" and abs(base.alpha - other.alpha) > 1e-12:
            raise ValueError("product rule needs both estimates at the same alpha")
        residual = max(base.residual or 0.0, other.residual or 0.0)
        return RatioLimitEstimate(alpha, status, prod, residual, base.window, op)
    raise ValueError(f"unknown algebra op {op!r}")


def power_law_check(e, alphas, cfg=None, tol=DEFAULT_TOL):
    """Verify |l(alpha)| = a^alpha with a = |l(1)| over the queried alphas.

    Returns (a, max_deviation).  Raises :class:`HypothesisViolation` when any
    queried ratio limit fails to exist (no_limit / divergent / inconclusive).
    """
    cfg = cfg or TailConfig.ratio_default()
    base = ratio_limit(e, 1.0, cfg, tol)
    if base.magnitude() is None:
        raise HypothesisViolation(f"hypothesis violated: l(1) is {base.status}")
    a = base.magnitude()
    worst = 0.0
    for alpha in alphas:
        if alpha <= 0:
            raise ValueError("alphas must be positive")
        est = ratio_limit(e, float(alpha), cfg, tol)
        mag = est.magnitude()
        if mag is None:
            raise HypothesisViolation(f"hypothesis violated: l({alpha}) is {est.status}")
        worst = max(worst, abs(mag - a**alpha))
    return a, worst


@dataclass(frozen=True)
class LogDerivativeLimit:
    status: str  # finite | minus_infinity | inconclusive
    value: float | None
    residual: float | None
    window: tuple[float, float]

    def predicted_ratio_magnitude(self, alpha):
        if self.status == "finite":
            return math.exp(self.value * alpha)
        if self.status == "minus_infinity":
            return 0.0
        return None

    def to_json_dict(self):
        return {"status": self.status, "value": self.value,
                "residual": self.residual, "window": list(self.window)}


def log_derivative_limit(e, cfg=None, tol=DEFAULT_TOL):
    """Limit of g'/g on the tail: finite(l), minus_infinity, or inconclusive.

    A finite answer predicts ratio limits exp(l * alpha) downstream; a
    minus-infinity answer predicts them all zero.
    """
    cfg = cfg or TailConfig.ratio_default()
    xs = cfg.samples()
    d = differentiate(e)
    vals = _ratio_values(d, xs, e, xs).real
    window = (cfg.start, cfg.end)

    good = np.isfinite(vals)
    if good.mean() < 0.7:
        return LogDerivativeLimit("inconclusive", None, None, window)
    quarter = vals[-len(vals) // 4:]
    quarter = quarter[np.isfinite(quarter)]
    first = vals[: len(vals) // 4]
    first = first[np.isfinite(first)]
    if len(quarter) < 8 or len(first) < 8:
        return LogDerivativeLimit("inconclusive", None, None, window)

    est = float(np.mean(quarter))
    residual = float(np.max(np.abs(quarter - est)))
    if residual <= tol * (1.0 + abs(est)):
        return LogDerivativeLimit("finite", est, residual, window)
    med_q, med_f = float(np.median(quarter)), float(np.median(first))
    if med_q < -100.0 and med_q < 2.0 * med_f and np.all(quarter < -10.0):
        return LogDerivativeLimit("minus_infinity", None, residual, window)
    return LogDerivativeLimit("inconclusive", None, residual, window)


# ---------------------------------------------------------------------------
# germ comparison

@dataclass(frozen=True)
class GermOrder:
    relation: str  # f_smaller | g_smaller | comparable | inconclusive
    limit: float | None
    window: tuple[float, float]
    note: str = ""

    def to_json_dict(self):
        return {"relation": self.relation, "limit": self.limit,
                "window": list(self.window), "note": self.note}


def _window_end_ratios(xs, vals, n_windows):
    """Median |f/g| near the end of each doubling subwindow."""
    edges = xs[0] * 2.0 ** np.arange(n_windows + 1)
    edges[-1] = max(edges[-1], xs[-1] * 1.0000001)
    ends = []
    for i in range(n_windows):
        m = (xs >= edges[i]) & (xs < edges[i + 1]) & np.isfinite(vals)
        if m.sum() < 4:
            ends.append(None)
            continue
        w = vals[m]
        k = max(2, len(w) // 4)
        ends.append(float(np.median(w[-k:])))
    return [v for v in ends if v is not None]


def germ_compare(f, g, cfg=None, tol=DEFAULT_TOL):
    """Order two generators by the behavior of |f/g| on doubling windows.

    f_smaller needs the ratio monotonically shrinking across windows and
    either already below 1e-3 at the end or shrinking at a steady geometric
    rate; a stabilized nonzero ratio is comparable(limit).  Sign changes of
    the denominator make the comparison inconclusive.
    """
    cfg = cfg or TailConfig.ratio_default()
    xs = cfg.samples()
    lf, sf = evaluate_log_array(f, xs)
    lg, sg = evaluate_log_array(g, xs)
    window = (cfg.start, cfg.end)
    if np.isnan(lg).mean() > 0.3 or np.isnan(lf).mean() > 0.3:
        return GermOrder("inconclusive", None, window, "undefined tail values")
    live = ~np.isnan(lg) & (sg != 0)
    if (np.unique(sg[live]).size > 1):
        return GermOrder("inconclusive", None, window, "denominator changes sign on tail")
    with np.errstate(over="ignore"):
        ratio = np.where(live & ~np.isnan(lf), np.exp(lf - lg), np.nan)
    cancelled = _cancellation_mask(lf, lg) & live & ~np.isnan(lf)
    for i in np.flatnonzero(cancelled):
        ratio[i] = abs(_mp_ratio(f, xs[i], g, xs[i]))
    n_windows = max(3, int(math.floor(math.log2(cfg.end / cfg.start))))
    ends = _window_end_ratios(xs, ratio, n_windows)
    if len(ends) < 3:
        return GermOrder("inconclusive", None, window, "too few usable windows")

    last, prev = ends[-1], ends[-2]
    tail = ends[-6:] if len(ends) >= 6 else ends
    shrinking = all(b < a for a, b in zip(tail, tail[1:]))
    growing = all(b > a for a, b in zip(tail, tail[1:]))

    if math.isinf(last):
        return GermOrder("g_smaller", None, window, "ratio overflows on the tail")
    if shrinking and last < 1e-3:
        return GermOrder("f_smaller", None, window, "tail ratio below 1e-3 and shrinking")
    if growing and last > 1e3:
        return GermOrder("g_smaller", None, window, "tail ratio above 1e3 and growing")

    if abs(last - prev) <= tol * max(abs(last), abs(prev)):
        if last <= _ZERO_FLOOR:
            return GermOrder("f_smaller", 0.0, window, "ratio stabilized at zero")
        # reattach the sign of f/g for the reported limit
        tail_sign = sf[live][-1] * sg[live][-1] if live.any() else 1.0
        return GermOrder("comparable", float(tail_sign) * last, window, "ratio stabilized")

    factors = [b / a for a, b in zip(tail, tail[1:]) if a > 0]
    if shrinking and factors and max(factors) <= 0.98:
        return GermOrder("f_smaller", None, window,
                         "steady geometric shrinkage across doubling windows")
    if growing and factors and min(factors) >= 1.0 / 0.98:
        return GermOrder("g_smaller", None, window,
                         "steady geometric growth across doubling windows")
    return GermOrder("inconclusive", None, window, "no stable trend")
