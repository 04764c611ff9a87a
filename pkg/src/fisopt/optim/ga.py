"""Binary- and real-coded genetic algorithms (maximizing fitness)."""

from __future__ import annotations

import numpy as np

from ..dataset import DomainError
from .common import Evaluator, Fitness, OptimizerConfig, RunReport, StallStop

DEFAULT_BINARY_PM = 0.05
DEFAULT_REAL_PM = 0.1


def geometric_ranking_probabilities(q: float, population_size: int) -> np.ndarray:
    """Selection probability of the rank-1 (best) ... rank-P individual."""
    if not 0 < q < 1:
        raise DomainError(f"q must lie in (0, 1), got {q}")
    if population_size < 1:
        raise DomainError("population size must be >= 1")
    q_norm = q / (1.0 - (1.0 - q) ** population_size)
    return q_norm * (1.0 - q) ** np.arange(population_size)


def ranking_select(fitnesses, q: float, n: int, rng: np.random.Generator) -> np.ndarray:
    fit = np.asarray(fitnesses, dtype=float)
    # stable sort so equal fitness keeps population order
    order = np.argsort(-fit, kind="stable")
    probs = geometric_ranking_probabilities(q, len(fit))
    ranks = rng.choice(len(fit), size=n, p=probs)
    return order[ranks]


def tournament_select(population, fitnesses, size: int, rng: np.random.Generator):
    """Best of ``size`` uniform draws with replacement; ties go to the lowest index.

    Returns ``(index, individual)``.
    """
    fit = np.asarray(fitnesses, dtype=float)
    if len(fit) == 0:
        raise DomainError("empty population")
    draws = rng.integers(0, len(fit), size=size)
    best = fit[draws].max()
    winner = int(draws[fit[draws] == best].min())
    return winner, population[winner]


def binary_mutation(bits, p_m: float, rng: np.random.Generator) -> np.ndarray:
    if not 0 <= p_m <= 1:
        raise DomainError(f"p_m must lie in [0, 1], got {p_m}")
    bits = np.asarray(bits, dtype=np.uint8)
    flips = rng.random(bits.shape) < p_m
    return np.where(flips, 1 - bits, bits).astype(np.uint8)


def simple_crossover(x, y, rng: np.random.Generator, cut: int | None = None):
    """Swap the tails from 1-based position ``cut`` (drawn on 1..m) onwards."""
    x, y = np.asarray(x), np.asarray(y)
    if x.shape != y.shape:
        raise DomainError("parents differ in length")
    m = len(x)
    r = int(rng.integers(1, m + 1)) if cut is None else cut
    keep = np.arange(1, m + 1) < r
    return np.where(keep, x, y), np.where(keep, y, x)


def nonuniform_mutation(x, lower, upper, generation: int, max_generation: int, shape: float,
                        rng: np.random.Generator) -> np.ndarray:
    """Move one random gene toward a bound by a step that shrinks over generations."""
    if generation > max_generation:
        raise DomainError(f"generation {generation} exceeds maximum {max_generation}")
    x = np.array(x, dtype=float)
    lo, hi = np.broadcast_to(lower, x.shape), np.broadcast_to(upper, x.shape)
    j = int(rng.integers(len(x)))
    r1, r2 = rng.random(), rng.random()
    f = (r2 * (1.0 - generation / max_generation)) ** shape
    if r1 < 0.5:
        x[j] = x[j] + (hi[j] - x[j]) * f
    else:
        x[j] = x[j] - (x[j] - lo[j]) * f
    return x


def arithmetic_crossover(x, y, rng: np.random.Generator, r: float | None = None):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DomainError("parents differ in dimension")
    r = rng.random() if r is None else r
    return r * x + (1 - r) * y, (1 - r) * x + r * y


def encode_binary(x, lower, upper, bits: int) -> np.ndarray:
    levels = 2 ** bits - 1
    k = np.rint((np.asarray(x, dtype=float) - lower) / (upper - lower) * levels).astype(np.int64)
    k = np.clip(k, 0, levels)
    shifts = np.arange(bits - 1, -1, -1)
    return ((k[..., None] >> shifts) & 1).astype(np.uint8).reshape(*k.shape[:-1], -1)


def decode_binary(chrom, lower, upper, bits: int) -> np.ndarray:
    chrom = np.asarray(chrom, dtype=np.int64)
    genes = chrom.reshape(*chrom.shape[:-1], -1, bits)
    k = (genes << np.arange(bits - 1, -1, -1)).sum(axis=-1)
    return lower + k * (upper - lower) / (2 ** bits - 1)


def run_ga(config: OptimizerConfig, fitness: Fitness, workers: int = 1) -> RunReport:
    config.validate()
    if not config.algorithm.startswith("ga"):
        raise DomainError(f"run_ga cannot run {config.algorithm!r}")
    ga = config.ga
    binary = config.algorithm == "ga_binary"
    lo, hi = config.bounds
    rng = np.random.default_rng(config.seed)
    n = ga.population_size
    pm = ga.p_mutation if ga.p_mutation is not None else (DEFAULT_BINARY_PM if binary else DEFAULT_REAL_PM)
    evolutions = ga.generations - 1 if ga.count_initial_as_generation else ga.generations

    if binary:
        pop = rng.integers(0, 2, size=(n, config.dim * ga.bits_per_gene)).astype(np.uint8)

        def phenotype(p):
            return decode_binary(p, lo, hi, ga.bits_per_gene)
    else:
        pop = rng.uniform(lo, hi, size=(n, config.dim))

        def phenotype(p):
            return p

    ev = Evaluator(fitness, config.stall_evaluations, workers)
    stopped = False
    try:
        fit = ev.many(phenotype(pop))
        ev.checkpoint()
        for gen in range(1, evolutions + 1):
            elite = pop[int(np.argmax(fit))].copy()
            if ga.selection == "tournament":
                idx = [tournament_select(pop, fit, ga.tournament_size, rng)[0] for _ in range(n)]
            else:
                idx = ranking_select(fit, ga.q, n, rng)
            children = pop[np.asarray(idx)].copy()
            for j in range(0, n - 1, 2):
                if rng.random() < ga.p_crossover:
                    if binary:
                        children[j], children[j + 1] = simple_crossover(children[j], children[j + 1], rng)
                    else:
                        children[j], children[j + 1] = arithmetic_crossover(children[j], children[j + 1], rng)
            if binary:
                children = binary_mutation(children, pm, rng)
            else:
                for i in range(n):
                    if rng.random() < pm:
                        children[i] = nonuniform_mutation(children[i], lo, hi, gen, evolutions,
                                                          ga.shape, rng)
            if ga.elitism:
                children[0] = elite
            pop = children
            fit = ev.many(phenotype(pop))
            ev.checkpoint()
    except StallStop:
        stopped = True
    return ev.report(config, stopped)
