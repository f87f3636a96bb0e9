"""Assemble finite Gabor systems and decide numerical linear independence
from the minimal singular value of the Gram matrix.

Reports are numerical evidence about the discretized system, never a proof
about the continuous one; they carry the grid and the threshold used, and an
explicit inconclusive band two orders of magnitude wide so that a false
"dependent" has to be loud.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gabor_hrt_lab.points import LambdaSet
from gabor_hrt_lab.signal import Grid, Signal, edge_decay, tf_shift

__all__ = ["GramReport", "build_system", "gram_report"]


def build_system(g, lam):
    """The ordered list of time-frequency shifted atoms of g over the set."""
    return [tf_shift(g, p.alpha_float(), p.beta_float()) for p in lam]


@dataclass(frozen=True)
class GramReport:
    matrix: np.ndarray
    singular_values: tuple[float, ...]
    sigma_min: float
    verdict: str  # independent | dependent | inconclusive
    threshold_used: float
    grid: Grid
    note: str = ""

    def to_json_dict(self, include_matrix=False):
        doc = {
            "singular_values": list(self.singular_values),
            "sigma_min": self.sigma_min,
            "verdict": self.verdict,
            "threshold_used": self.threshold_used,
            "grid": {"T": self.grid.half_width, "n": self.grid.count},
            "note": self.note,
            "n_atoms": int(self.matrix.shape[0]),
        }
        if include_matrix:
            doc["matrix"] = [[[z.real, z.imag] for z in row] for row in self.matrix]
        return doc


def gram_report(g, lam, threshold=None):
    """Gram matrix of the system, its spectrum, and an independence verdict.

    The default threshold is norm-relative (1e-8 times the generator energy),
    so rescaling g rescales every singular value without flipping verdicts.
    More atoms than grid samples cannot be independent; that case is forced
    to "dependent" with a pigeonhole note.
    """
    atoms = build_system(g, lam)
    n_atoms = len(atoms)
    grid = g.grid
    if threshold is None:
        threshold = 1e-8 * g.l2_norm**2
    if threshold <= 0:
        raise ValueError("threshold must be positive")

    a = np.column_stack([atom.samples for atom in atoms])
    matrix = grid.spacing * (a.conj().T @ a)
    matrix = 0.5 * (matrix + matrix.conj().T)
    singular = np.linalg.svd(matrix, compute_uv=False)
    sigma_min = float(singular[-1])

    notes = []
    decay = edge_decay(g)
    if decay > 1e-12:
        notes.append(f"edge decay {decay:.2e}: grid truncation may bias the report")

    if n_atoms > grid.count:
        verdict = "dependent"
        notes.append("pigeonhole")
    elif sigma_min > threshold:
        verdict = "independent"
    elif sigma_min < threshold / 100:
        verdict = "dependent"
    else:
        verdict = "inconclusive"

    return GramReport(
        matrix=matrix,
        singular_values=tuple(float(v) for v in singular),
        sigma_min=sigma_min,
        verdict=verdict,
        threshold_used=float(threshold),
        grid=grid,
        note="; ".join(notes),
    )
