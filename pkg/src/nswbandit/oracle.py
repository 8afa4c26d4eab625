"""Brute-force lattice references for the optimizer.

Deliberately plain numpy with no use of the compiled kernels, so the tests
compare two independent code paths.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .core import Policy, RewardMatrix
from .optimizer import HalfSpace

MAX_GRID_POINTS = 10_000_000


class GridTooLargeError(ValueError):
    pass


class GridResult(NamedTuple):
    policy: Policy | None
    objective: float

    @property
    def feasible(self) -> bool:
        return self.policy is not None


def simplex_lattice(n_arms: int, resolution: float) -> np.ndarray:
    """All points of the simplex with coordinates in multiples of ``resolution``,
    in ascending lexicographic order."""
    if n_arms > 3:
        raise GridTooLargeError("lattice search supports at most 3 arms")
    m = int(round(1.0 / resolution))
    if m < 1 or abs(m * resolution - 1.0) > 1e-9:
        raise ValueError("1 / resolution must be a positive integer")
    if float(m) ** (n_arms - 1) > MAX_GRID_POINTS:
        raise GridTooLargeError(f"{m}^{n_arms - 1} lattice points exceed {MAX_GRID_POINTS}")
    if n_arms == 1:
        return np.ones((1, 1))
    if n_arms == 2:
        i = np.arange(m + 1)
        return np.column_stack([i, m - i]) / m
    i, j = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
    keep = i + j <= m
    i, j = i[keep], j[keep]
    return np.column_stack([i, j, m - i - j]) / m


def _nsw_rows(points: np.ndarray, mu: np.ndarray) -> np.ndarray:
    return np.prod(points @ mu.T, axis=1)


def grid_optimal_policy(mu: RewardMatrix, resolution: float = 1e-3) -> tuple[Policy, float]:
    pts = simplex_lattice(mu.n_arms, resolution)
    vals = _nsw_rows(pts, mu.values)
    best = int(np.argmax(vals))
    return Policy(pts[best]), float(vals[best])


def grid_optimal_constrained(mu: RewardMatrix, bonus, h: HalfSpace | None,
                             resolution: float = 1e-3) -> GridResult:
    """Best lattice point of F(pi, mu) + bonus . pi inside the half-space."""
    pts = simplex_lattice(mu.n_arms, resolution)
    if h is not None:
        pts = pts[pts @ h.normal <= h.offset + 1e-12]
    if len(pts) == 0:
        return GridResult(None, float("-inf"))
    vals = _nsw_rows(pts, mu.values) + pts @ np.asarray(bonus, dtype=np.float64)
    best = int(np.argmax(vals))
    return GridResult(Policy(pts[best]), float(vals[best]))
