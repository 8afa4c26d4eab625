"""Round-by-round bandit algorithms maximizing Nash social welfare.

* ``fair-ucb``: optimistic means min(mu_hat + w, 1), policy = argmax log NSW.
* ``high-startup``: long deterministic warm-up, then NSW on the empirical
  means plus an exploration vector eta, restricted to a half-space.
* ``baseline-ucb``: NSW on the empirical means plus an additive bonus
  N * sqrt(log(NKt) / N_a), solved as a non-concave program.

Arms are 0-based in this module; round indices ``t`` are 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K_
from .core import BanditState, Policy, RegretTrace
from .environment import STREAM_EPISODE, BanditInstance, make_rng, sample_rewards
from .optimizer import BASELINE_RULE, DEFAULT_STEP, FAIR_RULE, TerminationRule

ALGORITHMS = ("fair-ucb", "high-startup", "baseline-ucb")
_KIND_CODES = {"fair-ucb": K_.FAIR_UCB, "high-startup": K_.HIGH_STARTUP, "baseline-ucb": K_.BASELINE_UCB}

DEFAULT_DELTA = 0.01
DEFAULT_WIDTH_SCALE = 0.5
DEFAULT_BONUS_SCALE = 0.8
WARMUP_CONSTANT = 180.0
CHUNK = 8192


class ZeroCountError(ValueError):
    """A statistic that divides by a pull count was queried for an unpulled arm."""


@dataclass(frozen=True)
class ConfidenceSpec:
    delta: float = DEFAULT_DELTA
    horizon: int = 1
    anytime: bool = False
    width_scale: float = DEFAULT_WIDTH_SCALE

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        if not self.width_scale > 0.0:
            raise ValueError("width_scale must be positive")

    def log_term(self, n_agents: int, n_arms: int, t: int) -> float:
        return K_.fair_log_term(n_agents, n_arms, self.horizon, t, self.delta, self.anytime)


@dataclass(frozen=True)
class AlgorithmKind:
    """One algorithm and its tuning knobs."""

    name: str
    bonus_scale: float = DEFAULT_BONUS_SCALE
    warmup_multiplier: float = WARMUP_CONSTANT
    restarts: int = 1
    rule: TerminationRule | None = None
    step: float = DEFAULT_STEP

    def __post_init__(self):
        if self.name not in _KIND_CODES:
            raise ValueError(f"unknown algorithm {self.name!r}; choose from {', '.join(ALGORITHMS)}")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.bonus_scale < 0 or self.warmup_multiplier <= 0 or self.step <= 0:
            raise ValueError("bonus_scale, warmup_multiplier and step must be positive")
        if self.rule is None:
            object.__setattr__(self, "rule", FAIR_RULE if self.name == "fair-ucb" else BASELINE_RULE)

    @property
    def code(self) -> int:
        return _KIND_CODES[self.name]

    def n_aux(self, n_arms: int) -> int:
        """Uniform draws consumed per round before the arm draw."""
        return int(K_.aux_width(self.code, n_arms, self.restarts))


FAIR_UCB = AlgorithmKind("fair-ucb")
HIGH_STARTUP = AlgorithmKind("high-startup")
BASELINE_UCB = AlgorithmKind("baseline-ucb")


def confidence_width(mu_hat: float, count: int, spec: ConfidenceSpec, n_agents: int, n_arms: int,
                     t: int) -> float:
    """width_scale * (sqrt(12 (1 - mu_hat) L / n) + 12 L / n)."""
    if count < 1:
        raise ZeroCountError("arm must be pulled before its width is queried")
    if not 0.0 <= mu_hat <= 1.0:
        raise ValueError("mu_hat must lie in [0, 1]")
    L = spec.log_term(n_agents, n_arms, t)
    return float(K_.width_value(mu_hat, count, L, spec.width_scale))


def ucb_matrix(state: BanditState, spec: ConfidenceSpec, t: int) -> np.ndarray:
    """min(mu_hat + w, 1) for every (agent, arm); requires every count >= 1."""
    if state.counts.min() < 1:
        raise ZeroCountError("every arm needs a pull before the UCB matrix exists")
    mu_hat = state.empirical_means()
    L = spec.log_term(state.n_agents, state.n_arms, t)
    n = state.counts[None, :].astype(float)
    w = spec.width_scale * (np.sqrt(12.0 * np.clip(1.0 - mu_hat, 0.0, None) * L / n) + 12.0 * L / n)
    return np.minimum(mu_hat + w, 1.0)


def _draw_arm(pi: np.ndarray, u: float) -> int:
    return int(K_.sample_arm(pi, u))


def fair_ucb_step(state: BanditState, spec: ConfidenceSpec, rule: TerminationRule = FAIR_RULE,
                  rng: np.random.Generator | None = None, step: float = DEFAULT_STEP,
                  ) -> tuple[Policy, int]:
    """Policy and sampled arm for round ``state.round + 1``."""
    rng = rng if rng is not None else np.random.default_rng()
    t = state.round + 1
    pi = K_.fair_policy(state.counts, state.reward_sums, t, spec.horizon, spec.delta, spec.anytime,
                        spec.width_scale, rule.min_improvement, rule.window, rule.max_iters, step)
    return Policy(pi), _draw_arm(pi, rng.random())


def startup_widths(state: BanditState, horizon: int, delta: float) -> np.ndarray:
    """Widths of the high start-up cost algorithm, which use ln(6NKT/delta)."""
    if state.counts.min() < 1:
        raise ZeroCountError("every arm needs a pull before widths exist")
    L = K_.startup_log_term(state.n_agents, state.n_arms, horizon, delta)
    mu_hat = state.empirical_means()
    n = state.counts[None, :].astype(float)
    return np.sqrt(12.0 * np.clip(1.0 - mu_hat, 0.0, None) * L / n) + 12.0 * L / n


def eta_vector(state: BanditState, widths: np.ndarray, n_agents: int, n_arms: int, horizon: int,
               delta: float) -> np.ndarray:
    """Per-arm exploration bonus of the high start-up cost algorithm."""
    if state.counts.min() < 1:
        raise ZeroCountError("eta needs every arm pulled at least once")
    if horizon < 2:
        raise ValueError("eta needs a horizon of at least 2")
    widths = np.asarray(widths, dtype=np.float64)
    if widths.shape != (n_agents, n_arms):
        raise ValueError("widths must be N x K")
    return K_.eta_vector(state.counts.astype(np.float64), state.empirical_means(), widths,
                         n_agents, n_arms, horizon, delta)


def warmup_block(n_agents: int, n_arms: int, horizon: int, delta: float,
                 multiplier: float = WARMUP_CONSTANT) -> float:
    """Consecutive pulls of each arm in the warm-up: multiplier N^2 ln(6NTK/delta) ln T."""
    return float(K_.startup_block(n_agents, n_arms, horizon, delta, multiplier))


def warmup_length(n_agents: int, n_arms: int, horizon: int, delta: float,
                  multiplier: float = WARMUP_CONSTANT) -> int:
    """Number of warm-up rounds (the largest t with t <= K * block)."""
    return int(math.floor(n_arms * warmup_block(n_agents, n_arms, horizon, delta, multiplier)))


def high_startup_step(state: BanditState, spec: ConfidenceSpec, rule: TerminationRule = BASELINE_RULE,
                      rng: np.random.Generator | None = None, warmup_multiplier: float = WARMUP_CONSTANT,
                      restarts: int = 1, step: float = DEFAULT_STEP) -> tuple[Policy, int]:
    rng = rng if rng is not None else np.random.default_rng()
    t = state.round + 1
    K = state.n_arms
    aux = rng.random(1 + (restarts - 1) * K)
    pi, _ = K_.high_startup_policy(state.counts, state.reward_sums, t, spec.horizon, spec.delta,
                                   warmup_multiplier, aux[0], aux[1:], restarts,
                                   rule.min_improvement, rule.window, rule.max_iters, step)
    return Policy(pi), _draw_arm(pi, rng.random())


def baseline_bonus(state: BanditState, t: int, bonus_scale: float = DEFAULT_BONUS_SCALE) -> np.ndarray:
    """bonus_scale * N * sqrt(log(N K t) / N_a)."""
    if state.counts.min() < 1:
        raise ZeroCountError("baseline bonus needs every arm pulled at least once")
    return K_.baseline_bonus(state.counts.astype(np.float64), state.n_agents, state.n_arms, t, bonus_scale)


def baseline_ucb_step(state: BanditState, rule: TerminationRule = BASELINE_RULE, restarts: int = 1,
                      rng: np.random.Generator | None = None, bonus_scale: float = DEFAULT_BONUS_SCALE,
                      step: float = DEFAULT_STEP) -> tuple[Policy, int]:
    rng = rng if rng is not None else np.random.default_rng()
    t = state.round + 1
    aux = rng.random((restarts - 1) * state.n_arms)
    pi = K_.baseline_policy(state.counts, state.reward_sums, t, bonus_scale, aux, restarts,
                            rule.min_improvement, rule.window, rule.max_iters, step)
    return Policy(pi), _draw_arm(pi, rng.random())


def play_round(kind: AlgorithmKind, state: BanditState, spec: ConfidenceSpec, env: BanditInstance,
               rng: np.random.Generator) -> tuple[Policy, int, np.ndarray]:
    """One full round through the step API: choose, pull, observe, update."""
    if kind.name == "fair-ucb":
        pi, arm = fair_ucb_step(state, spec, kind.rule, rng, kind.step)
    elif kind.name == "high-startup":
        pi, arm = high_startup_step(state, spec, kind.rule, rng, kind.warmup_multiplier,
                                    kind.restarts, kind.step)
    else:
        pi, arm = baseline_ucb_step(state, kind.rule, kind.restarts, rng, kind.bonus_scale, kind.step)
    rewards = sample_rewards(env.mu_star, arm, rng)
    state.update(arm, rewards)
    return pi, arm, rewards


@dataclass
class _Buffers:
    arms: np.ndarray
    policies: np.ndarray
    nsw: np.ndarray
    cum: np.ndarray
    diag: np.ndarray = field(default_factory=lambda: np.zeros(3))


def run_episode(kind: AlgorithmKind, env: BanditInstance, horizon: int, spec: ConfidenceSpec | None = None,
                seed: int = 0) -> RegretTrace:
    """Play ``horizon`` rounds on ``env`` and record the regret trace.

    The confidence spec's horizon is replaced by ``horizon``. Randomness comes
    from the episode stream of ``seed``; the result equals looping
    :func:`play_round` with that stream.
    """
    if horizon < 1:
        raise ValueError("horizon must be positive")
    spec = replace(spec or ConfidenceSpec(), horizon=horizon)
    rng = make_rng(seed, STREAM_EPISODE)
    N, K = env.n_agents, env.n_arms
    width = kind.n_aux(K) + 1 + N
    state = BanditState.empty(N, K)
    buf = _Buffers(np.empty(horizon, dtype=np.int64), np.empty((horizon, K)),
                   np.empty(horizon), np.empty(horizon))
    rule = kind.rule
    mu = np.ascontiguousarray(env.mu_star.values)
    cum = 0.0
    for start in range(0, horizon, CHUNK):
        stop = min(start + CHUNK, horizon)
        uniforms = rng.random((stop - start, width))
        cum = K_.run_chunk(kind.code, mu, env.opt_nsw, state.counts, state.reward_sums, start + 1,
                           horizon, uniforms, spec.delta, spec.anytime, spec.width_scale,
                           kind.warmup_multiplier, kind.bonus_scale, kind.restarts,
                           rule.min_improvement, rule.window, rule.max_iters, kind.step,
                           spec.width_scale, cum, buf.arms[start:stop], buf.policies[start:stop],
                           buf.nsw[start:stop], buf.cum[start:stop], buf.diag)
    state.round = horizon
    diagnostics = {
        "coverage_held": bool(buf.diag[0] == 0.0),
        "inverse_count_sum": float(buf.diag[1]),
        "fallbacks": int(buf.diag[2]),
        "final_counts": state.counts.copy(),
    }
    return RegretTrace(env.opt_nsw, buf.arms, buf.policies, buf.nsw, buf.cum, kind.name, diagnostics)


def inverse_count_bound(n_arms: int, horizon: int, delta: float) -> float:
    """2K(ln(T/K) + 1) + ln(2/delta)."""
    return 2.0 * n_arms * (math.log(horizon / n_arms) + 1.0) + math.log(2.0 / delta)
