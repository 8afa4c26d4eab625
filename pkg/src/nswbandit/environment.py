"""Instance generation and Bernoulli reward sampling.

Random streams: every generator is ``numpy.random.Philox`` (a counter-based
bit generator) keyed by a ``SeedSequence`` built from integer labels, so a
trace can be replayed from its seed on any platform numpy supports.

* instance stream: ``SeedSequence([seed, STREAM_INSTANCE])``
* episode stream:  ``SeedSequence([seed, STREAM_EPISODE])``

Seeds for batch runs are derived from a master seed with :func:`derive_seed`.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Policy, RewardMatrix, nsw
from .optimizer import TIGHT_RULE, maximize_log_nsw

STREAM_INSTANCE = 1
STREAM_EPISODE = 2

EXP_MEAN = 0.04
REWARD_FLOOR = 0.1


def make_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def derive_seed(master_seed: int, *labels: int) -> int:
    """Deterministic 63-bit child seed for a tuple of integer labels."""
    state = np.random.SeedSequence([int(master_seed), *map(int, labels)]).generate_state(2, np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])


@dataclass(frozen=True)
class BanditInstance:
    mu_star: RewardMatrix
    opt_policy: Policy
    opt_nsw: float
    seed: int

    @property
    def n_agents(self) -> int:
        return self.mu_star.n_agents

    @property
    def n_arms(self) -> int:
        return self.mu_star.n_arms

    @classmethod
    def from_means(cls, mu_star, seed: int = 0) -> "BanditInstance":
        """Wrap a given mean matrix, solving for its optimal policy."""
        mu = mu_star if isinstance(mu_star, RewardMatrix) else RewardMatrix(mu_star)
        pi, _ = maximize_log_nsw(mu.clamped(), TIGHT_RULE)
        return cls(mu, pi, nsw(pi, mu), int(seed))


def generate_instance(n_agents: int, n_arms: int, seed: int) -> BanditInstance:
    """Means drawn as max(0.1, 1 - X) with X exponential of mean 0.04."""
    if n_agents < 1 or n_arms < 1:
        raise ValueError("need at least one agent and one arm")
    rng = make_rng(seed, STREAM_INSTANCE)
    x = rng.exponential(EXP_MEAN, size=(n_agents, n_arms))
    return BanditInstance.from_means(np.maximum(REWARD_FLOOR, 1.0 - x), seed)


def sample_rewards(mu_star: RewardMatrix, arm: int, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli reward per agent for a pull of ``arm`` (0-based).

    Each reward is ``u < mu`` for one uniform draw per agent, the same
    construction the batched episode runner uses.
    """
    if not 0 <= arm < mu_star.n_arms:
        raise IndexError(f"arm {arm} out of range for {mu_star.n_arms} arms")
    u = rng.random(mu_star.n_agents)
    return (u < mu_star.values[:, arm]).astype(np.float64)


def save_instance(instance: BanditInstance, path) -> None:
    path = Path(path)
    lines = [f"{instance.n_agents} {instance.n_arms} {instance.seed}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in instance.mu_star.values]
    path.write_text("\n".join(lines) + "\n")


def load_instance(path) -> BanditInstance:
    rows = Path(path).read_text().split("\n")
    n, k, seed = (int(x) for x in rows[0].split())
    mu = np.array([[float(x) for x in r.split()] for r in rows[1:1 + n]])
    if mu.shape != (n, k):
        raise ValueError(f"{path}: expected {n}x{k} matrix, got {mu.shape}")
    return BanditInstance.from_means(mu, seed)
