"""Global-best particle swarm optimization with linearly decaying inertia."""

from __future__ import annotations

import numpy as np

from ..dataset import DomainError
from .common import Evaluator, Fitness, OptimizerConfig, RunReport, StallStop


def inertia(config_start: float, config_end: float, step: int, steps: int) -> float:
    if steps <= 1:
        return config_start
    return config_start + (config_end - config_start) * step / (steps - 1)


def pso_update(x, v, personal_best, global_best, omega: float, c1: float, c2: float,
               rng: np.random.Generator, lower=None, upper=None, v_max=None):
    """One velocity/position step for a particle.

    Uses independent uniform draws per term and per dimension.  Velocities are
    clamped to ``v_max``; positions are clamped to the bounds and the velocity
    component of any clamped dimension is zeroed.
    """
    x, v = np.asarray(x, dtype=float), np.asarray(v, dtype=float)
    r1 = rng.random(x.shape)
    r2 = rng.random(x.shape)
    v_new = omega * v + c1 * r1 * (personal_best - x) + c2 * r2 * (global_best - x)
    if v_max is not None:
        v_new = np.clip(v_new, -v_max, v_max)
    x_new = x + v_new
    if lower is not None and upper is not None:
        clamped = (x_new < lower) | (x_new > upper)
        x_new = np.clip(x_new, lower, upper)
        v_new = np.where(clamped, 0.0, v_new)
    return v_new, x_new


def run_pso(config: OptimizerConfig, fitness: Fitness, workers: int = 1,
            initial_positions=None) -> RunReport:
    config.validate()
    if config.algorithm != "pso":
        raise DomainError(f"run_pso cannot run {config.algorithm!r}")
    pso = config.pso
    lo, hi = config.bounds
    rng = np.random.default_rng(config.seed)
    n = pso.swarm_size
    if initial_positions is None:
        x = rng.uniform(lo, hi, size=(n, config.dim))
    else:
        x = np.array(initial_positions, dtype=float).reshape(n, config.dim)
    v = np.zeros_like(x)
    v_max = pso.v_max_fraction * (hi - lo)

    ev = Evaluator(fitness, config.stall_evaluations, workers)
    stopped = False
    try:
        fit = ev.many(x)
        pbest, pfit = x.copy(), fit.copy()
        g = int(np.argmax(pfit))
        ev.checkpoint()
        for t in range(pso.iterations):
            w = inertia(pso.inertia_start, pso.inertia_end, t, pso.iterations)
            for i in range(n):
                v[i], x[i] = pso_update(x[i], v[i], pbest[i], pbest[g], w, pso.c1, pso.c2, rng,
                                        lo, hi, v_max)
            fit = ev.many(x)
            better = fit > pfit
            pbest[better], pfit[better] = x[better], fit[better]
            g = int(np.argmax(pfit))
            ev.checkpoint()
    except StallStop:
        stopped = True
    return ev.report(config, stopped)
