"""Configuration, evaluation bookkeeping and run reports shared by the engines."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np

from ..dataset import DomainError

ALGORITHMS = ("ga_binary", "ga_real", "pso", "sa")
SELECTIONS = ("normalized_geometric_ranking", "tournament")
SCHEDULES = ("boltzmann", "exponential", "fast")

Fitness = Callable[[np.ndarray], float]


@dataclass
class GaConfig:
    population_size: int = 30
    generations: int = 25
    selection: str = "normalized_geometric_ranking"
    q: float = 0.08
    tournament_size: int = 3
    p_crossover: float = 0.7
    # per-bit flip rate for binary coding, per-individual rate for real coding
    p_mutation: float | None = None
    bits_per_gene: int = 8
    shape: float = 3.0
    elitism: bool = True
    # treat the random initial population as generation 1 (P * G executions)
    count_initial_as_generation: bool = False

    def validate(self) -> None:
        if self.population_size < 2:
            raise DomainError("population_size must be >= 2")
        if self.generations < 1:
            raise DomainError("generations must be >= 1")
        if self.selection not in SELECTIONS:
            raise DomainError(f"selection must be one of {SELECTIONS}")
        if not 0 < self.q < 1:
            raise DomainError("q must lie in (0, 1)")
        if self.tournament_size < 2:
            raise DomainError("tournament_size must be >= 2")
        if not 0 <= self.p_crossover <= 1:
            raise DomainError("p_crossover must lie in [0, 1]")
        if self.p_mutation is not None and not 0 <= self.p_mutation <= 1:
            raise DomainError("p_mutation must lie in [0, 1]")
        if self.bits_per_gene < 1:
            raise DomainError("bits_per_gene must be >= 1")
        if self.shape <= 0:
            raise DomainError("shape must be > 0")


@dataclass
class PsoConfig:
    swarm_size: int = 30
    iterations: int = 25
    c1: float = 2.0
    c2: float = 2.0
    inertia_start: float = 0.9
    inertia_end: float = 0.0
    # velocity clamp as a fraction of each dimension's range
    v_max_fraction: float = 0.5

    def validate(self) -> None:
        if self.swarm_size < 2:
            raise DomainError("swarm_size must be >= 2")
        if self.iterations < 1:
            raise DomainError("iterations must be >= 1")
        if self.c1 < 0 or self.c2 < 0:
            raise DomainError("c1 and c2 must be >= 0")
        if self.v_max_fraction <= 0:
            raise DomainError("v_max_fraction must be > 0")


@dataclass
class SaConfig:
    iterations: int = 100
    schedule: str = "boltzmann"
    t0: float = 1.0
    propose_from: str = "best"
    final_reevaluation: bool = False

    def validate(self) -> None:
        if self.iterations < 1:
            raise DomainError("iterations must be >= 1")
        if self.schedule not in SCHEDULES:
            raise DomainError(f"schedule must be one of {SCHEDULES}")
        if self.t0 <= 0:
            raise DomainError("t0 must be > 0")
        if self.propose_from not in ("best", "current"):
            raise DomainError("propose_from must be 'best' or 'current'")


@dataclass
class OptimizerConfig:
    algorithm: str
    dim: int
    lower: list[float] | float = 0.05
    upper: list[float] | float = 1.0
    seed: int = 0
    # overrides generations / iterations of the algorithm sub-config when set
    budget: int | None = None
    # stop once this many evaluations pass without improving the best fitness
    stall_evaluations: int | None = None
    ga: GaConfig = field(default_factory=GaConfig)
    pso: PsoConfig = field(default_factory=PsoConfig)
    sa: SaConfig = field(default_factory=SaConfig)

    def __post_init__(self):
        for name, cls in (("ga", GaConfig), ("pso", PsoConfig), ("sa", SaConfig)):
            value = getattr(self, name)
            if isinstance(value, dict):
                setattr(self, name, cls(**value))
        if self.budget is not None:
            self.ga.generations = self.budget
            self.pso.iterations = self.budget
            self.sa.iterations = self.budget

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.dim,)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.dim,)).copy()
        return lo, hi

    def validate(self) -> "OptimizerConfig":
        if self.algorithm not in ALGORITHMS:
            raise DomainError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.dim < 1:
            raise DomainError("dim must be >= 1")
        lo, hi = self.bounds
        if not np.all(lo < hi):
            raise DomainError("every lower bound must be below its upper bound")
        if self.budget is not None and self.budget < 1:
            raise DomainError("budget must be >= 1")
        if self.stall_evaluations is not None and self.stall_evaluations < 1:
            raise DomainError("stall_evaluations must be >= 1")
        {"ga_binary": self.ga, "ga_real": self.ga, "pso": self.pso, "sa": self.sa}[
            self.algorithm].validate()
        return self

    def algorithm_config(self):
        return {"ga_binary": self.ga, "ga_real": self.ga, "pso": self.pso, "sa": self.sa}[self.algorithm]

    def to_dict(self) -> dict:
        d = {
            "algorithm": self.algorithm,
            "dim": self.dim,
            "lower": self.lower,
            "upper": self.upper,
            "seed": self.seed,
            "budget": self.budget,
            "stall_evaluations": self.stall_evaluations,
        }
        key = "ga" if self.algorithm.startswith("ga") else self.algorithm
        d[key] = asdict(self.algorithm_config())
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise DomainError(f"unknown optimizer config keys {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise DomainError(str(exc)) from exc


@dataclass
class RunReport:
    algorithm: str
    seed: int
    best_x: list[float]
    best_fitness: float
    evaluation_executions: int
    history: list[float]
    config: dict
    wall_time: float = 0.0
    stopped_early: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def best_radii(self) -> list[float]:
        return self.best_x

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "best_x": self.best_x,
            "best_fitness": self.best_fitness,
            "evaluation_executions": self.evaluation_executions,
            "history": self.history,
            "stopped_early": self.stopped_early,
            "config": self.config,
            "extra": self.extra,
        }
        if include_timing:
            d["wall_time"] = self.wall_time
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(**d)


class StallStop(Exception):
    pass


class Evaluator:
    """Wraps a fitness callable with execution counting and best-so-far tracking."""

    def __init__(self, fitness: Fitness, stall_evaluations: int | None = None, workers: int = 1):
        self.fitness = fitness
        self.stall_evaluations = stall_evaluations
        self.workers = max(1, int(workers))
        self.calls = 0
        self.best_fitness = -np.inf
        self.best_x: np.ndarray | None = None
        self.since_improvement = 0
        self.history: list[float] = []
        self.started = time.perf_counter()
        self._external_start = getattr(fitness, "evaluation_executions", None)

    def _record(self, x: np.ndarray, f: float) -> None:
        self.calls += 1
        if f > self.best_fitness:
            self.best_fitness = f
            self.best_x = np.array(x, dtype=float, copy=True)
            self.since_improvement = 0
        else:
            self.since_improvement += 1

    def one(self, x: np.ndarray) -> float:
        f = float(self.fitness(np.asarray(x, dtype=float)))
        self._record(x, f)
        return f

    def many(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if self.workers > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                values = list(pool.map(lambda x: float(self.fitness(x)), xs))
        else:
            values = [float(self.fitness(x)) for x in xs]
        # record in index order so tie handling is worker-count independent
        for x, f in zip(xs, values):
            self._record(x, f)
        return np.asarray(values)

    def checkpoint(self) -> None:
        """Close an iteration: log best-so-far and apply the stall rule."""
        self.history.append(float(self.best_fitness))
        if self.stall_evaluations is not None and self.since_improvement >= self.stall_evaluations:
            raise StallStop

    @property
    def executions(self) -> int:
        current = getattr(self.fitness, "evaluation_executions", None)
        if self._external_start is not None and current is not None:
            # memoized contexts count only real evaluations
            return int(current - self._external_start)
        return self.calls

    def report(self, config: "OptimizerConfig", stopped_early: bool) -> RunReport:
        return RunReport(
            algorithm=config.algorithm,
            seed=config.seed,
            best_x=[float(v) for v in self.best_x],
            best_fitness=float(self.best_fitness),
            evaluation_executions=self.executions,
            history=self.history,
            config=config.to_dict(),
            wall_time=time.perf_counter() - self.started,
            stopped_early=stopped_early,
        )


def argmax_lowest(values) -> int:
    """Index of the maximum; ties go to the lowest index (np.argmax semantics)."""
    return int(np.argmax(np.asarray(values)))
