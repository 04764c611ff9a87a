"""Metaheuristic engines behind a single ``run(config, fitness)`` entry point."""

from .common import (
    ALGORITHMS,
    GaConfig,
    OptimizerConfig,
    PsoConfig,
    RunReport,
    SaConfig,
)
from .ga import (
    arithmetic_crossover,
    binary_mutation,
    decode_binary,
    encode_binary,
    geometric_ranking_probabilities,
    nonuniform_mutation,
    run_ga,
    simple_crossover,
    tournament_select,
)
from .pso import pso_update, run_pso
from .sa import acceptance_probability, sa_accept, sa_propose, sa_schedule, run_sa


def run(config: OptimizerConfig, fitness, workers: int = 1) -> RunReport:
    """Maximize ``fitness`` over the config's box with the configured algorithm."""
    config.validate()
    if config.algorithm.startswith("ga"):
        return run_ga(config, fitness, workers)
    if config.algorithm == "pso":
        return run_pso(config, fitness, workers)
    return run_sa(config, fitness, workers)


__all__ = [
    "ALGORITHMS", "GaConfig", "OptimizerConfig", "PsoConfig", "RunReport", "SaConfig",
    "acceptance_probability", "arithmetic_crossover", "binary_mutation", "decode_binary",
    "encode_binary", "geometric_ranking_probabilities", "nonuniform_mutation", "pso_update",
    "run", "run_ga", "run_pso", "run_sa", "sa_accept", "sa_propose", "sa_schedule",
    "simple_crossover", "tournament_select",
]
