"""Time-frequency point sets and their JSON wire format."""
from __future__ import annotations

import json
from dataclasses import dataclass

from gabor_hrt_lab.scalars import ExactScalar, parse_scalar

__all__ = ["TFPoint", "LambdaSet", "lambda_from_json", "lambda_to_json"]

# the pigeonhole acceptance case needs one more point than a 64-sample grid
MAX_POINTS = 128
_DISTINCT_TOL = 1e-12


@dataclass(frozen=True)
class TFPoint:
    """A single (time shift, frequency shift) pair with exact-or-float coords."""

    alpha: ExactScalar
    beta: ExactScalar

    @staticmethod
    def of(alpha, beta):
        return TFPoint(parse_scalar(alpha), parse_scalar(beta))

    def alpha_float(self):
        return self.alpha.to_float()

    def beta_float(self):
        return self.beta.to_float()

    def same_point(self, other):
        return (self.alpha.same_value(other.alpha, _DISTINCT_TOL)
                and self.beta.same_value(other.beta, _DISTINCT_TOL))

    def to_json_dict(self):
        return {"alpha": self.alpha.to_json_value(), "beta": self.beta.to_json_value()}


@dataclass(frozen=True)
class LambdaSet:
    """A finite set of distinct time-frequency points, order preserved."""

    points: tuple[TFPoint, ...]

    def __post_init__(self):
        n = len(self.points)
        if not 1 <= n <= MAX_POINTS:
            raise ValueError(f"point count {n} outside 1..{MAX_POINTS}")
        for i in range(n):
            for j in range(i + 1, n):
                if self.points[i].same_point(self.points[j]):
                    raise ValueError(
                        f"points {i} and {j} coincide: {self.points[i].to_json_dict()}")

    @staticmethod
    def of(*pairs):
        return LambdaSet(tuple(TFPoint.of(a, b) for a, b in pairs))

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def alphas(self):
        return [p.alpha for p in self.points]

    def betas(self):
        return [p.beta for p in self.points]

    def all_exact(self):
        return all(p.alpha.is_exact and p.beta.is_exact for p in self.points)

    def to_json_dict(self):
        return {"points": [p.to_json_dict() for p in self.points]}


def lambda_from_json(text_or_dict):
    """Read the {"points": [{"alpha": .., "beta": ..}, ..]} document."""
    doc = json.loads(text_or_dict) if isinstance(text_or_dict, str) else text_or_dict
    if not isinstance(doc, dict) or "points" not in doc:
        raise ValueError('expected an object with a "points" array')
    pts = []
    for entry in doc["points"]:
        if not isinstance(entry, dict) or "alpha" not in entry or "beta" not in entry:
            raise ValueError('each point needs "alpha" and "beta"')
        pts.append(TFPoint(parse_scalar(entry["alpha"]), parse_scalar(entry["beta"])))
    return LambdaSet(tuple(pts))


def lambda_to_json(lam):
    return json.dumps(lam.to_json_dict(), sort_keys=True)
