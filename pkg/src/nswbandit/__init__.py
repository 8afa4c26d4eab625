"""Fair multi-agent multi-armed bandits maximizing Nash social welfare."""

from .core import (EPS_OPT, BanditState, DimensionMismatchError, Policy, RegretTrace, RewardMatrix,
                   ZeroWelfareError, instantaneous_regret, lipschitz_gap_bound, log_nsw_gradient, nsw)
from .optimizer import (BASELINE_RULE, FAIR_RULE, TIGHT_RULE, HalfSpace, InfeasibleConstraintError,
                        OptimizerError, TerminationRule, maximize_log_nsw, maximize_nsw_plus_linear,
                        project_to_simplex, project_to_simplex_halfspace)
from .environment import BanditInstance, generate_instance, load_instance, sample_rewards, save_instance
from .algorithms import (BASELINE_UCB, FAIR_UCB, HIGH_STARTUP, AlgorithmKind, ConfidenceSpec,
                         baseline_ucb_step, confidence_width, eta_vector, fair_ucb_step,
                         high_startup_step, run_episode)

__version__ = "0.1.0"
