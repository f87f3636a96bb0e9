"""Exact rational/surd arithmetic applied to point sets, plus the
simultaneous-approximation solver and the phase-sum recurrence kernel.

Design stance on independence over the rationals: exact scalar kinds are
decided exactly; float inputs only ever yield "no relation found up to H",
never a claim of independence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from gabor_hrt_lab.points import LambdaSet
from gabor_hrt_lab.scalars import ExactScalar

__all__ = [
    "RelationReport",
    "KroneckerSolution",
    "KroneckerBudgetError",
    "LatticeResult",
    "DifferenceCondition",
    "PhaseSumTable",
    "q_independence",
    "kronecker_solve",
    "lattice_membership",
    "difference_condition",
    "phase_sums",
]

_MAX_VALUES = 8


# ---------------------------------------------------------------------------
# integer-relation detection

@dataclass(frozen=True)
class RelationReport:
    outcome: str  # "relation" | "none"
    coeffs: tuple[int, ...] | None
    residual: float | None
    searched_bound: int
    note: str

    @property
    def found(self):
        return self.outcome == "relation"

    def to_json_dict(self):
        return {
            "outcome": self.outcome,
            "coeffs": list(self.coeffs) if self.coeffs else None,
            "residual": self.residual,
            "searched_bound": self.searched_bound,
            "note": self.note,
        }


def _radical_key(s):
    return ("rat",) if s.kind == "rational" else ("surd", s.rad)


def _fraction_gcd(a, b):
    return Fraction(math.gcd(a.numerator * b.denominator, b.numerator * a.denominator),
                    a.denominator * b.denominator)


def q_independence(values, bound=10**6):
    """Search for an integer relation among scalars.

    Exact kinds are decided exactly (residual exactly zero on a hit, and a
    genuine independence proof on a miss).  Float kinds go through PSLQ with
    coefficients capped at ``bound``; a miss there is explicitly only
    "no relation found", never "independent".
    """
    values = [v if isinstance(v, ExactScalar) else ExactScalar("float", fval=float(v))
              for v in values]
    n = len(values)
    if not 1 <= n <= _MAX_VALUES:
        raise ValueError(f"value count {n} outside 1..{_MAX_VALUES}")
    bound = int(bound)
    if bound < 1:
        raise ValueError("bound must be >= 1")

    if all(v.is_exact for v in values):
        return _q_independence_exact(values, bound)
    return _q_independence_pslq(values, bound)


def _q_independence_exact(values, bound):
    for i, v in enumerate(values):
        if v.is_zero():
            coeffs = tuple(1 if j == i else 0 for j in range(len(values)))
            return RelationReport("relation", coeffs, 0.0, bound,
                                  "exact: zero entry gives a trivial relation")
    groups = {}
    for i, v in enumerate(values):
        groups.setdefault(_radical_key(v), []).append(i)
    for key, idx in groups.items():
        if len(idx) >= 2:
            i, j = idx[0], idx[1]
            ci, cj = values[i].coef, values[j].coef
            # m_i * ci + m_j * cj = 0 with cleared denominators
            mi = cj.numerator * ci.denominator
            mj = -ci.numerator * cj.denominator
            g = math.gcd(mi, mj)
            coeffs = [0] * len(values)
            coeffs[i], coeffs[j] = mi // g, mj // g
            return RelationReport("relation", tuple(coeffs), 0.0, bound,
                                  "exact: matching radical parts")
    return RelationReport("none", None, None, bound,
                          "exact kinds with distinct radical parts are independent")


def _q_independence_pslq(values, bound):
    with mpmath.workdps(30):
        mps = []
        for v in values:
            if v.kind == "rational":
                mps.append(mpmath.mpf(v.coef.numerator) / v.coef.denominator)
            elif v.kind == "surd":
                mps.append(mpmath.mpf(v.coef.numerator) / v.coef.denominator
                           * mpmath.sqrt(v.rad))
            else:
                mps.append(mpmath.mpf(v.fval))
        rel = None
        if len(values) >= 2:
            try:
                rel = mpmath.pslq(mps, maxcoeff=bound, maxsteps=20000)
            except ValueError:
                rel = None
        elif values[0].to_float() == 0.0:
            rel = [1]
        if rel is not None:
            residual = float(abs(sum(m * v for m, v in zip(rel, mps))))
            scale = max(abs(v.to_float()) for v in values)
            if residual <= 1e-9 * max(scale, 1e-30) * bound:
                return RelationReport("relation", tuple(int(m) for m in rel), residual,
                                      bound, "pslq on float images")
    return RelationReport("none", None, None, bound,
                          "no relation found up to the bound; floats cannot prove independence")


# ---------------------------------------------------------------------------
# Kronecker simultaneous approximation

@dataclass(frozen=True)
class KroneckerSolution:
    u: float
    p: tuple[int, ...]
    residuals: tuple[float, ...]
    phase_errors: tuple[float, ...]
    eps: float
    min_u: float

    def __post_init__(self):
        # the two displayed bounds hold on every returned solution
        assert self.u > self.min_u
        assert all(r < self.eps for r in self.residuals)
        assert all(e < 4 * math.pi * self.eps for e in self.phase_errors)

    def to_json_dict(self):
        return {
            "u": self.u,
            "p": list(self.p),
            "residuals": list(self.residuals),
            "phase_errors": list(self.phase_errors),
            "eps": self.eps,
            "min_u": self.min_u,
        }


class KroneckerBudgetError(RuntimeError):
    """Search budget exhausted; carries the best residual vector seen."""

    def __init__(self, best_u, best_residuals):
        super().__init__(
            f"no solution within search budget; best residuals {best_residuals} at u={best_u}")
        self.best_u = best_u
        self.best_residuals = best_residuals


def kronecker_solve(betas, thetas, min_u, eps, integer_u=False, max_points=50_000_000):
    """Find u > min_u with every beta_k*u close to theta_k modulo one.

    Grid search with step eps / (4 max|beta|), scanned in order so the first
    hit is the smallest grid point that works.  Raises
    :class:`KroneckerBudgetError` rather than returning a near-miss.
    """
    betas = [b if isinstance(b, ExactScalar) else ExactScalar("float", fval=float(b))
             for b in betas]
    n = len(betas)
    if not 1 <= n <= _MAX_VALUES:
        raise ValueError(f"beta count {n} outside 1..{_MAX_VALUES}")
    if len(thetas) != n:
        raise ValueError("thetas length must match betas")
    if not 0 < eps < 0.25:
        raise ValueError("eps must lie in (0, 1/4)")
    report = q_independence(betas, bound=10**4)
    if report.found:
        raise ValueError(f"betas are rationally dependent: coeffs {report.coeffs}")

    bf = np.array([b.to_float() for b in betas])
    tf = np.array([float(t) for t in thetas])
    step = eps / (4 * np.max(np.abs(bf)))
    chunk = 500_000
    best = (math.inf, None, None)
    scanned = 0
    offset = 0
    while scanned < max_points:
        if integer_u:
            start = math.floor(min_u) + 1 + offset
            us = np.arange(start, start + chunk, dtype=float)
        else:
            us = min_u + step * (np.arange(offset, offset + chunk, dtype=float) + 1.0)
        vals = np.outer(us, bf) - tf
        res = np.abs(vals - np.round(vals))
        worst = res.max(axis=1)
        hits = np.flatnonzero(np.all(res < eps, axis=1))
        if hits.size:
            i = int(hits[0])
            return _solution(float(us[i]), bf, tf, eps, min_u)
        j = int(np.argmin(worst))
        if worst[j] < best[0]:
            best = (float(worst[j]), float(us[j]), res[j].tolist())
        scanned += chunk
        offset += chunk
    raise KroneckerBudgetError(best[1], best[2])


def _solution(u, bf, tf, eps, min_u):
    vals = bf * u - tf
    p = np.round(vals).astype(int)
    residuals = np.abs(vals - p)
    phases = np.abs(np.exp(2j * np.pi * bf * u) - np.exp(2j * np.pi * tf))
    return KroneckerSolution(u, tuple(int(k) for k in p),
                             tuple(float(r) for r in residuals),
                             tuple(float(e) for e in phases), eps, min_u)


# ---------------------------------------------------------------------------
# lattice membership

@dataclass(frozen=True)
class LatticeResult:
    status: str  # "in_lattice" | "not_in_lattice" | "inconclusive"
    basis: tuple[tuple[float, float], tuple[float, float]] | None = None
    offset: tuple[float, float] | None = None
    note: str = ""

    def to_json_dict(self):
        return {
            "status": self.status,
            "basis": [list(r) for r in self.basis] if self.basis else None,
            "offset": list(self.offset) if self.offset else None,
            "note": self.note,
        }


_MAX_DYADIC_DEN = 4096


def _as_exact_fraction(s):
    """Exact rational content of a scalar, or None if it has none."""
    if s.kind == "rational":
        return s.coef
    if s.kind == "float":
        f = Fraction(s.fval)
        if f.denominator <= _MAX_DYADIC_DEN:
            return f
        return None
    return None  # surd handled separately


def _coordinates(s, keys):
    """Coordinates of a scalar over the radical basis [('rat',), ('surd', d)...]."""
    vec = [Fraction(0)] * len(keys)
    if s.kind == "surd":
        vec[keys.index(("surd", s.rad))] = s.coef
    else:
        f = _as_exact_fraction(s)
        if f is None:
            return None
        vec[keys.index(("rat",))] = f
    return vec


def _rank_fraction_matrix(rows):
    rows = [list(r) for r in rows]
    rank = 0
    cols = len(rows[0]) if rows else 0
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        pv = rows[r][c]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c] / pv
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
        rank += 1
        if r == len(rows):
            break
    return rank


def _xgcd(a, b):
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    return old_r, old_s, old_t


def _hnf_basis_2d(vectors):
    """Z-module basis (at most two rows) for integer 2-vectors."""
    r1 = None  # (a, b) with a > 0
    r2 = 0     # generator of the (0, *) part
    pending = [tuple(v) for v in vectors if v != (0, 0)]
    for a, b in pending:
        if a == 0:
            r2 = math.gcd(r2, abs(b))
            continue
        if r1 is None:
            r1 = (abs(a), b if a > 0 else -b)
            continue
        g, s, t = _xgcd(r1[0], a)
        det = r1[0] * b - r1[1] * a
        r1 = (g, s * r1[1] + t * b)
        r2 = math.gcd(r2, abs(det // g))
    basis = []
    if r1 is not None:
        if r2:
            r1 = (r1[0], r1[1] % r2)
        basis.append(r1)
    if r2:
        basis.append((0, r2))
    return basis


def _verify_integral(basis_cols, diffs, tol=1e-9):
    a = np.array(basis_cols, dtype=float).T
    inv = np.linalg.inv(a)
    for d in diffs:
        m = inv @ np.array(d, dtype=float)
        if np.max(np.abs(m - np.round(m))) > tol:
            return False
    return True


def lattice_membership(lam):
    """Decide whether the points live on a translate of a full-rank lattice.

    Exact path only: rational coordinates (including small dyadic floats) go
    through an integer Hermite reduction; single-radical coordinates go
    through a separable generator construction.  Whenever the rational rank
    of the difference set exceeds its real rank the answer is a definite
    "not_in_lattice"; mixed irrational geometries we cannot reconstruct a
    basis for come back "inconclusive".
    """
    pts = list(lam.points)
    first = pts[0]
    offset = (first.alpha_float(), first.beta_float())
    if len(pts) == 1:
        return LatticeResult("in_lattice", ((1.0, 0.0), (0.0, 1.0)), offset,
                             "single point: any full-rank lattice works")

    keys = [("rat",)]
    for p in pts:
        for s in (p.alpha, p.beta):
            if s.kind == "surd" and ("surd", s.rad) not in keys:
                keys.append(("surd", s.rad))
            if s.kind == "float" and _as_exact_fraction(s) is None:
                return LatticeResult("inconclusive", note="non-exact float coordinate")

    coord_rows = []
    for p in pts:
        ca = _coordinates(p.alpha, keys)
        cb = _coordinates(p.beta, keys)
        if ca is None or cb is None:
            return LatticeResult("inconclusive", note="non-exact coordinate")
        coord_rows.append(ca + cb)
    base = coord_rows[0]
    diff_rows = [[a - b for a, b in zip(row, base)] for row in coord_rows[1:]]

    rank_q = _rank_fraction_matrix(diff_rows)
    diffs_f = [(p.alpha_float() - offset[0], p.beta_float() - offset[1]) for p in pts[1:]]
    sv = np.linalg.svd(np.array(diffs_f), compute_uv=False)
    rank_r = int(np.sum(sv > 1e-9 * max(1.0, sv[0])))

    if rank_q > rank_r:
        return LatticeResult("not_in_lattice",
                             note=f"rational rank {rank_q} exceeds real rank {rank_r}: "
                                  "difference group is dense in some direction")

    nk = len(keys)
    alpha_keys = {keys[i] for row in diff_rows for i in range(nk) if row[i] != 0}
    beta_keys = {keys[i - nk] for row in diff_rows for i in range(nk, 2 * nk) if row[i] != 0}

    if keys == [("rat",)]:
        dens = [f.denominator for row in diff_rows for f in row]
        lcm = math.lcm(*dens) if dens else 1
        ints = [(int(row[0] * lcm), int(row[1] * lcm)) for row in diff_rows]
        basis = _hnf_basis_2d(ints)
        cols = [(b[0] / lcm, b[1] / lcm) for b in basis]
        cols = _complete_basis(cols)
        if _verify_integral(cols, diffs_f):
            return LatticeResult("in_lattice", (tuple(cols[0]), tuple(cols[1])), offset,
                                 "rational coordinates, Hermite-reduced basis")
        return LatticeResult("inconclusive", note="verification failed")

    if len(alpha_keys) <= 1 and len(beta_keys) <= 1:
        ga = _separable_generator(diff_rows, keys, 0, alpha_keys)
        gb = _separable_generator(diff_rows, keys, nk, beta_keys)
        cols = [(ga, 0.0), (0.0, gb)]
        if _verify_integral(cols, diffs_f):
            return LatticeResult("in_lattice", (tuple(cols[0]), tuple(cols[1])), offset,
                                 "separable generators per coordinate")
        return LatticeResult("inconclusive", note="verification failed")

    return LatticeResult("inconclusive",
                         note="discrete but mixed-radical geometry; no basis constructed")


def _separable_generator(diff_rows, keys, col_offset, used_keys):
    if not used_keys:
        return 1.0
    key = next(iter(used_keys))
    idx = keys.index(key) + col_offset
    g = Fraction(0)
    for row in diff_rows:
        if row[idx] != 0:
            g = _fraction_gcd(g, abs(row[idx])) if g else abs(row[idx])
    if g == 0:
        return 1.0
    scale = math.sqrt(key[1]) if key[0] == "surd" else 1.0
    return float(g) * scale


def _complete_basis(cols):
    if len(cols) == 2:
        return cols
    if len(cols) == 0:
        return [(1.0, 0.0), (0.0, 1.0)]
    (a, b) = cols[0]
    other = (0.0, 1.0) if abs(a) >= abs(b) else (1.0, 0.0)
    return [cols[0], other]


# ---------------------------------------------------------------------------
# difference condition for the second variable

@dataclass(frozen=True)
class DifferenceCondition:
    holds: bool
    index: int | None = None  # 1-based position of the distinguished point

    def to_json_dict(self):
        return {"holds": self.holds, "index": self.index}


def difference_condition(lam):
    """Some frequency shift differs from all the others (1-based index)."""
    betas = lam.betas()
    for i, b in enumerate(betas):
        if all(not b.same_value(other) for j, other in enumerate(betas) if j != i):
            return DifferenceCondition(True, i + 1)
    return DifferenceCondition(False, None)


# ---------------------------------------------------------------------------
# phase-sum recurrence table

@dataclass(frozen=True)
class PhaseSumTable:
    """B[n][m] for 1 <= n <= M, 0 <= m <= n-1, built by the one-step recurrence.

    Entry (n, m) is the sum of unimodular phases exp(2*pi*i*(subset sum)*alpha)
    over all (n-m)-element subsets drawn from the last n entries of b.
    """

    m_count: int
    alpha: float
    b: tuple[float, ...]
    rows: tuple[tuple[complex, ...], ...]

    def value(self, n, m):
        if not (1 <= n <= self.m_count and 0 <= m <= n - 1):
            raise IndexError(f"(n={n}, m={m}) outside the table")
        return self.rows[n - 1][m]

    def to_json_dict(self):
        return {
            "M": self.m_count,
            "alpha": self.alpha,
            "b": list(self.b),
            "rows": [[[z.real, z.imag] for z in row] for row in self.rows],
        }


def phase_sums(b, alpha):
    """Fill the phase-sum table in O(M^2) via the boundary/interior recurrence."""
    b = tuple(float(v) for v in b)
    m_count = len(b)
    if not 2 <= m_count <= 20:
        raise ValueError("need 2 <= M <= 20")
    alpha = float(alpha)
    phase = [complex(math.cos(2 * math.pi * v * alpha), math.sin(2 * math.pi * v * alpha))
             for v in b]
    rows = [(phase[m_count - 1],)]  # B_1(0) = e^{2 pi i b_M alpha}
    for n in range(1, m_count):
        w = phase[m_count - n - 1]  # e^{2 pi i b_{M-n} alpha}
        prev = rows[n - 1]
        row = [w * prev[0]]
        for m in range(1, n):
            row.append(w * prev[m] + prev[m - 1])
        row.append(prev[n - 1] + w)
        rows.append(tuple(row))
    return PhaseSumTable(m_count, alpha, b, tuple(rows))
