"""Domain types, the Nash social welfare objective and regret accounting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K_

SIMPLEX_TOL = 1e-9
# Optimizer gap in NSW units; per-round regret may dip this far below zero.
EPS_OPT = 1e-3


class DimensionMismatchError(ValueError):
    """Raised when a policy and a reward matrix disagree on the number of arms."""


class ZeroWelfareError(ValueError):
    """Raised when some agent has zero expected reward under the policy."""


def _as_float_array(x, ndim: int, name: str) -> np.ndarray:
    arr = np.array(x, dtype=np.float64)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RewardMatrix:
    """N x K matrix of mean rewards in [0, 1]; row j is agent j."""

    values: np.ndarray

    def __post_init__(self):
        v = _as_float_array(self.values, 2, "values")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"reward matrix needs N >= 1 and K >= 1, got {v.shape}")
        if not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("reward matrix entries must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    @property
    def n_agents(self) -> int:
        return self.values.shape[0]

    @property
    def n_arms(self) -> int:
        return self.values.shape[1]

    def clamped(self, floor: float = K_.MEAN_FLOOR) -> "RewardMatrix":
        return RewardMatrix(np.maximum(self.values, floor))


@dataclass(frozen=True)
class Policy:
    """Probability distribution over the K arms."""

    probs: np.ndarray

    def __post_init__(self):
        p = _as_float_array(self.probs, 1, "probs")
        if p.size < 1:
            raise ValueError("policy needs at least one arm")
        if not np.all(np.isfinite(p)) or p.min() < 0.0:
            raise ValueError("policy entries must be finite and nonnegative")
        if abs(p.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"policy must sum to 1 (got {p.sum()!r})")
        object.__setattr__(self, "probs", p)

    @property
    def n_arms(self) -> int:
        return self.probs.size

    @classmethod
    def uniform(cls, k: int) -> "Policy":
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def vertex(cls, k: int, arm: int) -> "Policy":
        """Deterministic policy on ``arm`` (0-based)."""
        p = np.zeros(k)
        p[arm] = 1.0
        return cls(p)


@dataclass
class BanditState:
    """Pull counts and reward sums after ``round`` completed rounds.

    Mutable: the runner that owns it updates it in place each round.
    """

    counts: np.ndarray
    reward_sums: np.ndarray
    round: int = 0

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.reward_sums = np.asarray(self.reward_sums, dtype=np.float64)
        if self.counts.ndim != 1 or self.reward_sums.ndim != 2:
            raise ValueError("counts must be length K and reward_sums N x K")
        if self.reward_sums.shape[1] != self.counts.size:
            raise DimensionMismatchError("reward_sums and counts disagree on K")
        if self.counts.min() < 0 or int(self.counts.sum()) != self.round:
            raise ValueError("counts must be nonnegative and sum to round")
        if self.reward_sums.min() < 0 or np.any(self.reward_sums > self.counts[None, :] + 1e-9):
            raise ValueError("reward sums must lie in [0, counts]")

    @classmethod
    def empty(cls, n_agents: int, n_arms: int) -> "BanditState":
        return cls(np.zeros(n_arms, dtype=np.int64), np.zeros((n_agents, n_arms)), 0)

    @property
    def n_agents(self) -> int:
        return self.reward_sums.shape[0]

    @property
    def n_arms(self) -> int:
        return self.counts.size

    def empirical_means(self) -> np.ndarray:
        """Per-(agent, arm) sample means; arms never pulled read as 0."""
        return K_.empirical_means(self.counts, self.reward_sums)

    def update(self, arm: int, rewards) -> None:
        """Record one pull of ``arm`` (0-based) with per-agent ``rewards``."""
        self.counts[arm] += 1
        self.reward_sums[:, arm] += np.asarray(rewards, dtype=np.float64)
        self.round += 1


@dataclass
class RegretTrace:
    """Per-round record of one episode.

    Arrays are indexed by round - 1; ``arms`` are 0-based.
    """

    opt_nsw: float
    arms: np.ndarray
    policies: np.ndarray
    nsw: np.ndarray
    cum_regret: np.ndarray
    algorithm: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def rounds(self) -> np.ndarray:
        return np.arange(1, self.arms.size + 1)

    @property
    def horizon(self) -> int:
        return int(self.arms.size)

    def records(self):
        for i in range(self.arms.size):
            yield i + 1, int(self.arms[i]), self.policies[i], float(self.nsw[i]), float(self.cum_regret[i])

    def regret_at(self, t: int) -> float:
        return float(self.cum_regret[t - 1])


def _check_dims(policy: Policy, mu: RewardMatrix) -> None:
    if policy.n_arms != mu.n_arms:
        raise DimensionMismatchError(
            f"policy has {policy.n_arms} arms but reward matrix has {mu.n_arms}")


def nsw(policy: Policy, mu: RewardMatrix) -> float:
    """Nash social welfare: product over agents of their expected reward."""
    _check_dims(policy, mu)
    return float(K_.nsw_value(policy.probs, mu.values))


def log_nsw_gradient(policy: Policy, mu: RewardMatrix) -> np.ndarray:
    _check_dims(policy, mu)
    means = mu.values @ policy.probs
    if np.any(means <= 0.0):
        raise ZeroWelfareError("an agent has zero expected reward; clamp the means first")
    grad = np.empty(mu.n_arms)
    K_.log_nsw_grad(policy.probs, mu.values, means, grad)
    return grad


def instantaneous_regret(opt_nsw: float, policy: Policy, mu_star: RewardMatrix) -> float:
    return opt_nsw - nsw(policy, mu_star)


def lipschitz_gap_bound(policy: Policy, mu1: RewardMatrix, mu2: RewardMatrix) -> tuple[float, float]:
    """Return (|F(pi, mu1) - F(pi, mu2)|, sum_j sum_a pi_a |mu1 - mu2|)."""
    if mu1.values.shape != mu2.values.shape:
        raise DimensionMismatchError("reward matrices differ in shape")
    gap = abs(nsw(policy, mu1) - nsw(policy, mu2))
    bound = float(np.sum(np.abs(mu1.values - mu2.values) @ policy.probs))
    return gap, bound
