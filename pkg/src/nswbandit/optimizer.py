"""Projected gradient ascent over the simplex and simplex ∩ half-space.

Two objectives are supported: log NSW (concave, used by the fair UCB
algorithm) and NSW plus a linear bonus term (generally non-concave, used by
the baseline and the high start-up cost algorithm).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K_
from .core import Policy, RewardMatrix

# Initial step of each backtracking line search. At 0.1 the loose in-loop rule
# (2e-4 over 20 iterations) stalls near uniform on flat instances, leaving gaps
# of several 1e-3; from 1.0 it stays within EPS_OPT.
DEFAULT_STEP = 1.0


class InfeasibleConstraintError(ValueError):
    """The half-space does not intersect the simplex."""


class OptimizerError(RuntimeError):
    """The objective became non-finite during ascent."""


@dataclass(frozen=True)
class TerminationRule:
    """Stop once the objective gains less than ``min_improvement`` over
    ``window`` iterations, or after ``max_iters`` iterations."""

    min_improvement: float
    window: int
    max_iters: int = 10_000

    def __post_init__(self):
        if not self.min_improvement > 0:
            raise ValueError("min_improvement must be positive")
        if self.window < 1:
            raise ValueError("window must be at least 1")
        if self.max_iters < self.window:
            raise ValueError("max_iters must be at least window")


# Settings used in the experiments for each solver.
FAIR_RULE = TerminationRule(2e-4, 20, 10_000)
BASELINE_RULE = TerminationRule(1e-6, 30, 10_000)
# For the reference optimum of an instance.
TIGHT_RULE = TerminationRule(1e-13, 50, 200_000)


@dataclass(frozen=True)
class HalfSpace:
    """The set {pi : normal . pi <= offset}."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        c = np.array(self.normal, dtype=np.float64)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise ValueError("half-space normal must be a finite vector")
        c.setflags(write=False)
        object.__setattr__(self, "normal", c)
        object.__setattr__(self, "offset", float(self.offset))

    def intersects_simplex(self) -> bool:
        return float(self.normal.min()) <= self.offset

    def contains(self, pi: np.ndarray, tol: float = 1e-9) -> bool:
        return float(self.normal @ pi) <= self.offset + tol


def project_to_simplex(v) -> Policy:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("need a non-empty vector to project")
    return Policy(K_.project_simplex(v))


def project_to_simplex_halfspace(v, h: HalfSpace) -> Policy:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("need a non-empty vector to project")
    if h.normal.size != v.size:
        raise ValueError("half-space dimension does not match the vector")
    p, ok = K_.project_simplex_halfspace(v, h.normal, h.offset)
    if not ok:
        raise InfeasibleConstraintError(
            f"min normal {h.normal.min():.6g} exceeds offset {h.offset:.6g}")
    return Policy(p)


def maximize_log_nsw(mu: RewardMatrix, rule: TerminationRule = FAIR_RULE,
                     step: float = DEFAULT_STEP) -> tuple[Policy, float]:
    """Maximize log NSW over the simplex, starting from the uniform policy.

    ``mu`` is expected to be clamped away from zero already. Returns the
    policy and its NSW (not log NSW).
    """
    pi, f = K_.pga_log_nsw(mu.values, rule.min_improvement, rule.window, rule.max_iters, step)
    if not np.isfinite(f):
        raise OptimizerError("log NSW is not finite; some agent has zero reward on every arm")
    return Policy(pi), float(np.exp(f))


def random_simplex_starts(k: int, restarts: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform policy followed by ``restarts - 1`` uniform random simplex points."""
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    aux = rng.random((restarts - 1) * k)
    return K_.make_starts(k, aux, restarts)


def maximize_nsw_plus_linear(mu: RewardMatrix, bonus, constraint: HalfSpace | None = None,
                             rule: TerminationRule = BASELINE_RULE, step: float = DEFAULT_STEP,
                             restarts: int = 1, rng: np.random.Generator | None = None,
                             ) -> tuple[Policy, float]:
    """Maximize F(pi, mu) + bonus . pi with multi-start projected gradient ascent."""
    bonus = np.asarray(bonus, dtype=np.float64)
    if bonus.shape != (mu.n_arms,):
        raise ValueError("bonus must have one entry per arm")
    if np.any(bonus < 0):
        raise ValueError("bonus entries must be nonnegative")
    if rng is None:
        rng = np.random.default_rng(0)
    starts = random_simplex_starts(mu.n_arms, restarts, rng)
    if constraint is not None:
        if constraint.normal.size != mu.n_arms:
            raise ValueError("constraint dimension does not match the number of arms")
        if not constraint.intersects_simplex():
            raise InfeasibleConstraintError("constraint excludes the whole simplex")
        c, b, flag = constraint.normal, constraint.offset, True
    else:
        c, b, flag = np.zeros(mu.n_arms), 0.0, False
    pi, f = K_.pga_nsw_linear(mu.values, bonus, c, b, flag, starts,
                              rule.min_improvement, rule.window, rule.max_iters, step)
    if not np.isfinite(f):
        raise OptimizerError("objective is not finite")
    return Policy(pi), float(f)
