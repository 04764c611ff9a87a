"""Simulated annealing with Boltzmann, exponential and fast cooling."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit

from ..dataset import DomainError
from .common import Evaluator, Fitness, OptimizerConfig, RunReport, SCHEDULES, StallStop


def sa_schedule(schedule: str, t0: float, k: int) -> float:
    """Temperature at step ``k >= 1``.

    The Boltzmann form uses ln(k + 1) so the first step is finite.
    """
    if k < 1:
        raise DomainError(f"annealing step must be >= 1, got {k}")
    if t0 <= 0:
        raise DomainError("t0 must be > 0")
    if schedule == "boltzmann":
        return t0 / math.log(k + 1)
    if schedule == "exponential":
        return t0 * 0.95 ** k
    if schedule == "fast":
        return t0 / k
    raise DomainError(f"unknown schedule {schedule!r}; expected one of {SCHEDULES}")


def acceptance_probability(delta_e: float, temperature: float) -> float:
    """1 / (1 + exp(dE / T)), evaluated without overflow."""
    if temperature <= 0:
        raise DomainError("temperature must be > 0")
    return float(expit(-delta_e / temperature))


def sa_accept(delta_e: float, temperature: float, rng: np.random.Generator) -> bool:
    # improvements bypass the logistic rule, which would reject half of them near dE = 0
    if delta_e < 0:
        return True
    return bool(rng.random() < acceptance_probability(delta_e, temperature))


def reflect(x, lower, upper) -> np.ndarray:
    """Fold points back into [lower, upper] by mirror reflection at the bounds."""
    span = upper - lower
    y = np.mod(np.asarray(x, dtype=float) - lower, 2 * span)
    y = np.where(y > span, 2 * span - y, y)
    return lower + y


def sa_propose(x, temperature: float, lower, upper, rng: np.random.Generator) -> np.ndarray:
    """Gaussian step with per-dimension variance ``temperature``, reflected into bounds."""
    if temperature <= 0:
        raise DomainError("temperature must be > 0")
    x = np.asarray(x, dtype=float)
    step = rng.normal(0.0, math.sqrt(temperature), size=x.shape)
    return reflect(x + step, lower, upper)


def run_sa(config: OptimizerConfig, fitness: Fitness, workers: int = 1) -> RunReport:
    """Anneal on energy = -fitness.

    Proposals are drawn around the best point found so far (or the current
    accepted point with ``propose_from="current"``); the best point is tracked
    independently of acceptance.
    """
    config.validate()
    if config.algorithm != "sa":
        raise DomainError(f"run_sa cannot run {config.algorithm!r}")
    sa = config.sa
    lo, hi = config.bounds
    rng = np.random.default_rng(config.seed)

    ev = Evaluator(fitness, config.stall_evaluations)
    stopped = False
    try:
        current = rng.uniform(lo, hi)
        e_current = -ev.one(current)
        best, e_best = current.copy(), e_current
        ev.checkpoint()
        for k in range(1, sa.iterations + 1):
            temp = sa_schedule(sa.schedule, sa.t0, k)
            anchor, e_anchor = (best, e_best) if sa.propose_from == "best" else (current, e_current)
            candidate = sa_propose(anchor, temp, lo, hi, rng)
            e_new = -ev.one(candidate)
            if sa_accept(e_new - e_anchor, temp, rng):
                current, e_current = candidate, e_new
            if e_new < e_best:
                best, e_best = candidate, e_new
            ev.checkpoint()
        if sa.final_reevaluation:
            ev.one(best)
    except StallStop:
        stopped = True
    return ev.report(config, stopped)
