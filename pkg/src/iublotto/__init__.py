"""Independent-uniform (IU) strategies for generalized Colonel Blotto and lottery Blotto games."""

from .best_response import (
    BestResponseResult,
    ExploitabilityReport,
    analytic_br_value,
    csf_best_response,
    discretized_best_response,
    estimate_exploitability,
)
from .csf import ContestSuccessFunction, DeltaBound, delta_bound, dissimilarity_set
from .distributions import MarginalSet, UniformTypeDistribution, prob_all_zero, uniform_type_marginals
from .experiments import ExperimentConfig, generate_game, load_config, run_sweep
from .game import (
    GameError,
    GameSpec,
    ValidatedGame,
    ValueBounds,
    blotto_payoff,
    csf_payoff,
    load_game,
    validate_game,
)
from .gamma import GammaSolution, ParameterBounds, lagrange_multipliers, parameter_bounds, solve_gamma
from .iu import EmpiricalMarginals, IUSampler, allocations_from_uniforms, marginal_gap, sample_batch, sample_iu
from .rng import RandomStream

__all__ = [
    "BestResponseResult",
    "ContestSuccessFunction",
    "DeltaBound",
    "EmpiricalMarginals",
    "ExperimentConfig",
    "ExploitabilityReport",
    "GameError",
    "GameSpec",
    "GammaSolution",
    "IUSampler",
    "MarginalSet",
    "ParameterBounds",
    "RandomStream",
    "UniformTypeDistribution",
    "ValidatedGame",
    "ValueBounds",
    "allocations_from_uniforms",
    "analytic_br_value",
    "blotto_payoff",
    "csf_best_response",
    "csf_payoff",
    "delta_bound",
    "discretized_best_response",
    "dissimilarity_set",
    "estimate_exploitability",
    "generate_game",
    "lagrange_multipliers",
    "load_config",
    "load_game",
    "marginal_gap",
    "parameter_bounds",
    "prob_all_zero",
    "run_sweep",
    "sample_batch",
    "sample_iu",
    "solve_gamma",
    "uniform_type_marginals",
    "validate_game",
]
