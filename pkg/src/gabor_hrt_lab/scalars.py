"""Exact-or-float scalars: rationals, quadratic surds c*sqrt(d), and floats.

Exact kinds keep rational-linear-independence questions decidable for the
coordinates the toolkit actually meets (sqrt(2)-type shifts).  Arithmetic
stays exact whenever the result is again a rational or a single surd;
anything richer degrades to a float carrying a ``degraded`` flag.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

__all__ = ["ExactScalar", "rational", "surd", "float_scalar", "parse_scalar"]

_FLOAT_TOL = 1e-12


def _squarefree_split(d):
    """d = s^2 * f with f squarefree; returns (s, f).  Trial division."""
    if d <= 0:
        raise ValueError("radicand must be positive")
    s, f = 1, 1
    n = d
    p = 2
    while p * p <= n:
        k = 0
        while n % p == 0:
            n //= p
            k += 1
        s *= p ** (k // 2)
        if k % 2:
            f *= p
        p += 1 if p == 2 else 2
    f *= n
    return s, f


@dataclass(frozen=True)
class ExactScalar:
    """kind is 'rational' (coef holds p/q), 'surd' (coef*sqrt(rad)) or 'float'."""

    kind: str
    coef: Fraction = Fraction(0)
    rad: int = 1
    fval: float = 0.0
    degraded: bool = False

    # -- constructors keep invariants: gcd-reduced coef, squarefree rad > 1,
    #    zero surds collapse to rational zero

    @property
    def is_exact(self):
        return self.kind != "float"

    def to_float(self):
        if self.kind == "rational":
            return float(self.coef)
        if self.kind == "surd":
            return float(self.coef) * math.sqrt(self.rad)
        return self.fval

    def __float__(self):
        return self.to_float()

    # -- arithmetic

    def _degrade(self, other, op):
        return float_scalar(op(self.to_float(), other.to_float()), degraded=True)

    def __add__(self, other):
        other = _coerce(other)
        if self.kind == "rational" and other.kind == "rational":
            return rational(self.coef + other.coef)
        if self.kind == "surd" and other.kind == "surd" and self.rad == other.rad:
            return surd(self.coef + other.coef, self.rad)
        if self.kind == "rational" and self.coef == 0:
            return other
        if other.kind == "rational" and other.coef == 0:
            return self
        return self._degrade(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __neg__(self):
        if self.kind == "float":
            return float_scalar(-self.fval, degraded=self.degraded)
        if self.kind == "rational":
            return rational(-self.coef)
        return surd(-self.coef, self.rad)

    def __mul__(self, other):
        other = _coerce(other)
        a, b = self, other
        if a.kind == "rational" and b.kind == "rational":
            return rational(a.coef * b.coef)
        if a.kind == "rational" and b.kind == "surd":
            return surd(a.coef * b.coef, b.rad)
        if a.kind == "surd" and b.kind == "rational":
            return surd(a.coef * b.coef, a.rad)
        if a.kind == "surd" and b.kind == "surd":
            s, f = _squarefree_split(a.rad * b.rad)
            c = a.coef * b.coef * s
            return rational(c) if f == 1 else surd(c, f)
        return self._degrade(other, lambda x, y: x * y)

    def __truediv__(self, other):
        other = _coerce(other)
        a, b = self, other
        if b.kind == "rational":
            if b.coef == 0:
                raise ZeroDivisionError("exact scalar division by zero")
            if a.kind == "rational":
                return rational(a.coef / b.coef)
            if a.kind == "surd":
                return surd(a.coef / b.coef, a.rad)
        if b.kind == "surd" and a.kind in ("rational", "surd"):
            if b.coef == 0:
                raise ZeroDivisionError("exact scalar division by zero")
            # 1/(c sqrt(d)) = sqrt(d)/(c d)
            inv = surd(Fraction(1) / (b.coef * b.rad), b.rad)
            return a * inv
        if b.to_float() == 0:
            raise ZeroDivisionError("scalar division by zero")
        return self._degrade(other, lambda x, y: x / y)

    # -- comparisons (exact where the kinds allow, tolerance on floats)

    def same_value(self, other, tol=_FLOAT_TOL):
        other = _coerce(other)
        if self.is_exact and other.is_exact:
            return (self - other).is_zero()
        return abs(self.to_float() - other.to_float()) <= tol

    def is_zero(self):
        if self.kind == "rational":
            return self.coef == 0
        if self.kind == "surd":
            return self.coef == 0
        return self.fval == 0.0

    def __lt__(self, other):
        other = _coerce(other)
        if self.is_exact and other.is_exact:
            d = self - other
            if d.kind == "rational":
                return d.coef < 0
            if d.kind == "surd":
                return d.coef < 0
        return self.to_float() < other.to_float()

    def sort_key(self):
        return self.to_float()

    # -- text

    def to_text(self):
        if self.kind == "rational":
            c = self.coef
            return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
        if self.kind == "surd":
            c = self.coef
            if c == 1:
                return f"sqrt({self.rad})"
            if c == -1:
                return f"-sqrt({self.rad})"
            cs = str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
            return f"{cs}*sqrt({self.rad})"
        return repr(self.fval)

    def __str__(self):
        return self.to_text()

    def to_json_value(self):
        return self.to_text() if self.is_exact else self.fval


def rational(value):
    return ExactScalar("rational", coef=Fraction(value))


def surd(coef, rad):
    coef = Fraction(coef)
    if coef == 0:
        return rational(0)
    s, f = _squarefree_split(int(rad))
    coef *= s
    if f == 1:
        return rational(coef)
    return ExactScalar("surd", coef=coef, rad=f)


def float_scalar(value, degraded=False):
    return ExactScalar("float", fval=float(value), degraded=degraded)


def _coerce(v):
    if isinstance(v, ExactScalar):
        return v
    if isinstance(v, int):
        return rational(v)
    if isinstance(v, Fraction):
        return rational(v)
    if isinstance(v, float):
        return float_scalar(v)
    raise TypeError(f"cannot coerce {type(v).__name__} to ExactScalar")


_RATIONAL_RE = re.compile(r"^(-?\d+)\s*/\s*(\d+)$")
_SURD_RE = re.compile(r"^(?:(-?\d+(?:/\d+)?)\s*\*\s*)?(-?)sqrt\(\s*(\d+)\s*\)$")
_INT_RE = re.compile(r"^-?\d+$")


def parse_scalar(text):
    """Parse 'p/q', 'c*sqrt(d)', 'sqrt(d)', integers, or decimal floats.

    Integers and fractions come back exact; decimal text becomes the float
    kind (decimals are usually measured values, not exact statements).
    """
    if isinstance(text, ExactScalar):
        return text
    if isinstance(text, bool):
        raise ValueError("boolean is not a scalar")
    if isinstance(text, int):
        return rational(text)
    if isinstance(text, float):
        return float_scalar(text)
    s = str(text).strip()
    if not s:
        raise ValueError("empty scalar text")
    if _INT_RE.match(s):
        return rational(int(s))
    m = _RATIONAL_RE.match(s)
    if m:
        den = int(m.group(2))
        if den == 0:
            raise ValueError(f"zero denominator in {s!r}")
        return rational(Fraction(int(m.group(1)), den))
    m = _SURD_RE.match(s)
    if m:
        coef_text, minus, rad = m.groups()
        coef = Fraction(1)
        if coef_text:
            coef = Fraction(coef_text)
        if minus:
            coef = -coef
        return surd(coef, int(rad))
    try:
        return float_scalar(float(s))
    except ValueError:
        raise ValueError(f"unrecognized scalar text {s!r}") from None
