"""Unit-determinant reductions of Gabor systems: transform the point set by
an affine symplectic map and the generator by the matching unitary, so that
independence questions can be normalized before testing.

Only the four generating operations are provided (Fourier, dilation,
translation, modulation); they cover every normalization the router needs.
The unimodular phase each unitary introduces is not tracked: it rescales
atoms by modulus-one factors and cannot move a singular value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from gabor_hrt_lab.points import LambdaSet, TFPoint
from gabor_hrt_lab.scalars import ExactScalar, parse_scalar, rational
from gabor_hrt_lab.signal import Signal, dft, tf_shift

__all__ = ["SymplecticOp", "apply_to_lambda", "apply_to_signal",
           "apply_pipeline_to_lambda", "normalize", "parse_ops", "ops_to_text"]

_DILATION_RANGE = (0.25, 4.0)


@dataclass(frozen=True)
class SymplecticOp:
    """fourier | dilation(r) | translate(a) | modulate(b).

    The induced action on a point (alpha, beta) is A(alpha, beta) + offset:
    fourier has A = [[0, 1], [-1, 0]], dilation(r) has A = diag(1/r, r)
    (both determinant one exactly), translation and modulation are offsets.
    """

    kind: str
    param: ExactScalar | None = None

    def __post_init__(self):
        if self.kind not in ("fourier", "dilation", "translate", "modulate"):
            raise ValueError(f"unknown op kind {self.kind!r}")
        if self.kind == "fourier":
            if self.param is not None:
                raise ValueError("fourier takes no parameter")
        else:
            if self.param is None:
                raise ValueError(f"{self.kind} needs a parameter")
            if self.kind == "dilation" and self.param.to_float() == 0:
                raise ValueError("dilation factor must be nonzero")

    @staticmethod
    def fourier():
        return SymplecticOp("fourier")

    @staticmethod
    def dilation(r):
        return SymplecticOp("dilation", parse_scalar(r))

    @staticmethod
    def translate(a):
        return SymplecticOp("translate", parse_scalar(a))

    @staticmethod
    def modulate(b):
        return SymplecticOp("modulate", parse_scalar(b))

    def matrix(self):
        if self.kind == "fourier":
            return ((0.0, 1.0), (-1.0, 0.0))
        if self.kind == "dilation":
            r = self.param.to_float()
            return ((1.0 / r, 0.0), (0.0, r))
        return ((1.0, 0.0), (0.0, 1.0))

    def offset(self):
        if self.kind == "translate":
            return (self.param.to_float(), 0.0)
        if self.kind == "modulate":
            return (0.0, self.param.to_float())
        return (0.0, 0.0)

    def to_text(self):
        if self.kind == "fourier":
            return "fourier"
        name = {"dilation": "dilate", "translate": "translate", "modulate": "modulate"}[self.kind]
        return f"{name}:{self.param.to_text()}"


def _map_point(op, p):
    a, b = p.alpha, p.beta
    if op.kind == "fourier":
        return TFPoint(b, -a)
    if op.kind == "dilation":
        return TFPoint(a / op.param, b * op.param)
    if op.kind == "translate":
        return TFPoint(a + op.param, b)
    return TFPoint(a, b + op.param)


def apply_to_lambda(op, lam):
    """Map every point by the op's affine action; distinctness is preserved."""
    return LambdaSet(tuple(_map_point(op, p) for p in lam))


def apply_pipeline_to_lambda(ops, lam):
    for op in ops:
        lam = apply_to_lambda(op, lam)
    return lam


def _dilate_signal(s, r):
    """Band-limited resample of |r|^(1/2) g(r x) on the same grid.

    Points r*x that leave the grid domain are set to zero; that is exact up
    to the generator's decay at the support edge, which acceptance-grade
    generators keep below 1e-12.
    """
    grid = s.grid
    n = grid.count
    targets = r * grid.points()
    spectrum = np.fft.fft(s.samples)
    freqs = np.fft.fftfreq(n)
    # sample index coordinate of each target point
    u = (targets + grid.half_width) / grid.spacing
    kernel = np.exp(2j * np.pi * np.outer(u, freqs))
    values = kernel @ spectrum / n
    inside = np.abs(targets) <= grid.half_width
    values[~inside] = 0.0
    return Signal(grid, math.sqrt(abs(r)) * values)


def apply_to_signal(op, s):
    """The unitary matching the op: dft, dilation resample, or a pure shift."""
    if op.kind == "fourier":
        return dft(s)
    if op.kind == "dilation":
        r = op.param.to_float()
        if not _DILATION_RANGE[0] <= abs(r) <= _DILATION_RANGE[1]:
            raise ValueError(f"dilation factor {r} outside |r| in [1/4, 4]")
        if r == 1.0:
            return s
        return _dilate_signal(s, r)
    if op.kind == "translate":
        return tf_shift(s, op.param.to_float(), 0.0)
    return tf_shift(s, 0.0, op.param.to_float())


# ---------------------------------------------------------------------------
# normalization

def _lex_min_index(lam):
    best = 0
    for i in range(1, len(lam)):
        p, q = lam.points[i], lam.points[best]
        pa, qa = p.alpha.to_float(), q.alpha.to_float()
        if pa < qa - 1e-15 or (abs(pa - qa) <= 1e-15 and p.beta.to_float() < q.beta.to_float()):
            best = i
    return best


def _rational_spacing(alphas):
    """gcd spacing when every alpha is exactly rational, else None."""
    fracs = []
    for a in alphas:
        if a.kind != "rational":
            return None
        fracs.append(a.coef)
    nonzero = [f for f in fracs if f != 0]
    if not nonzero:
        return None
    g = Fraction(0)
    for f in nonzero:
        g = Fraction(math.gcd(g.numerator * f.denominator, f.numerator * g.denominator),
                     g.denominator * f.denominator) if g else abs(f)
    return g


def normalize(lam):
    """Move the lexicographically smallest point to the origin and, when the
    time shifts share an exact rational spacing, rescale that spacing to one.

    Returns the normalized set together with the op pipeline that produces
    it; composing the ops on the input reproduces the output exactly.
    """
    ops = []
    base = lam.points[_lex_min_index(lam)]
    if not base.alpha.is_zero():
        ops.append(SymplecticOp("translate", -base.alpha))
    if not base.beta.is_zero():
        ops.append(SymplecticOp("modulate", -base.beta))
    current = apply_pipeline_to_lambda(ops, lam)

    spacing = _rational_spacing(current.alphas())
    if spacing is not None and spacing != 1 and spacing != 0:
        ops.append(SymplecticOp("dilation", rational(spacing)))
        current = apply_to_lambda(ops[-1], current)
    return current, ops


# ---------------------------------------------------------------------------
# CLI pipeline syntax: "fourier", "dilate:r", "translate:a", "modulate:b"

def parse_ops(text):
    ops = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if chunk == "fourier":
            ops.append(SymplecticOp.fourier())
            continue
        if ":" not in chunk:
            raise ValueError(f"malformed op {chunk!r}")
        name, arg = chunk.split(":", 1)
        name = name.strip()
        if name == "dilate":
            ops.append(SymplecticOp.dilation(arg))
        elif name == "translate":
            ops.append(SymplecticOp.translate(arg))
        elif name == "modulate":
            ops.append(SymplecticOp.modulate(arg))
        else:
            raise ValueError(f"unknown op {name!r}")
    if not ops:
        raise ValueError("empty op pipeline")
    return ops


def ops_to_text(ops):
    return ",".join(op.to_text() for op in ops)
