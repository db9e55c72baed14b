"""Objective normalisation and exact bi-objective hypervolume."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateAnchorError
from .pareto import nondominated_mask


@dataclass(frozen=True)
class NormalizedFront:
    """Non-dominated points scaled so the ideal maps to (0, 0) and the nadir to (1, 1)."""

    points: np.ndarray
    clipped: np.ndarray

    def __len__(self):
        return len(self.points)


def normalize(points, ideal, nadir) -> NormalizedFront:
    """Scale objective pairs into the unit box and keep the non-dominated ones.

    Coordinates outside [0, 1] are clipped onto the box boundary and the
    point is flagged. A point clipped to 1 in any objective lies on the
    reference boundary and adds no hypervolume.

    Raises:
        DegenerateAnchorError: if ``nadir <= ideal`` in some objective.
    """
    ideal = np.asarray(ideal, dtype=float)
    nadir = np.asarray(nadir, dtype=float)
    span = nadir - ideal
    if not np.all(span > 0):
        raise DegenerateAnchorError(f"nadir {nadir} must exceed ideal {ideal} in every objective")
    f = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(f) == 0:
        return NormalizedFront(np.zeros((0, 2)), np.zeros(0, dtype=bool))
    g = (f - ideal) / span
    clipped = np.any((g >= 1.0) | (g < 0.0), axis=1)
    g = np.clip(g, 0.0, 1.0)
    keep = nondominated_mask(g)
    return NormalizedFront(g[keep], clipped[keep])


def hypervolume_2d(front) -> float:
    """Area dominated by ``front`` inside the unit box, reference point (1, 1)."""
    pts = front.points if isinstance(front, NormalizedFront) else np.asarray(front, dtype=float)
    pts = pts.reshape(-1, 2)
    pts = pts[np.all(pts < 1.0, axis=1)]
    if len(pts) == 0:
        return 0.0
    pts = pts[nondominated_mask(pts)]
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    volume = 0.0
    prev_g2 = 1.0
    for g1, g2 in pts:
        if g2 < prev_g2:
            volume += (1.0 - g1) * (prev_g2 - g2)
            prev_g2 = g2
    return float(volume)


def normalized_hypervolume(points, ideal, nadir) -> float:
    return hypervolume_2d(normalize(points, ideal, nadir))
