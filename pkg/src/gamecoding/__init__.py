"""Game of coding on repetition codes: trade-off curves, Stackelberg
thresholds, Monte-Carlo play and threshold learning."""

from .curves import (
    CurveSamples,
    KernelContext,
    KernelDomainError,
    TradeoffCurve,
    acceptance_kernel,
    build_envelope,
    c_curve,
    concave_envelope,
    error_kernel,
    honest_min_density,
    inverse_kernel,
    mixture_pa_mse,
    spike_mse_curve,
)
from .equilibrium import (
    BestResponseSet,
    EquilibriumError,
    ProbeTable,
    StackelbergSolution,
    adversary_best_response,
    check_round_trip,
    optimal_noise,
    properness_probe,
    stackelberg_solve,
)
from .learn import (
    CurveFamily,
    LearnerConfig,
    LearningInstance,
    MyopicOracle,
    TrialLog,
    algorithm3,
    algorithm4,
    evaluate_learner,
)
from .model import (
    EquilibriumPoint,
    GameConfig,
    OpaqueSampler,
    SymmetricAtoms,
    UtilityPair,
    validate_monotonicity,
)
from .sim import EmpiricalStats, analytic_check, monte_carlo, play_round, simulate_rounds, sybil_compare
from .utility import UtilityDomainError, UtilitySyntaxError, eval_utility, parse_utility

__version__ = "0.1.0"
