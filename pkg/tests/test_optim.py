import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fisopt.dataset import DomainError
from fisopt.optim import (
    OptimizerConfig, RunReport, acceptance_probability, arithmetic_crossover, binary_mutation,
    decode_binary, encode_binary, geometric_ranking_probabilities, nonuniform_mutation,
    pso_update, run, run_ga, run_pso, run_sa, sa_accept, sa_propose, sa_schedule,
    simple_crossover, tournament_select,
)
from fisopt.optim.sa import reflect

from . import oracles
from .conftest import sphere_fitness


class PinnedRng:
    """Stand-in generator that replays fixed draws."""

    def __init__(self, randoms=(), integers=()):
        self._randoms = list(randoms)
        self._integers = list(integers)

    def random(self, size=None):
        v = self._randoms.pop(0)
        return np.asarray(v, dtype=float) if size is not None else float(v)

    def integers(self, lo, hi=None, size=None):
        return self._integers.pop(0)


class CountingFitness:
    def __init__(self):
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return sphere_fitness(x)


def _cfg(algorithm, dim=2, lower=-1.0, upper=1.0, seed=0, **kw):
    return OptimizerConfig(algorithm=algorithm, dim=dim, lower=lower, upper=upper, seed=seed, **kw)


# -- genetic operators -------------------------------------------------------

def test_ranking_probabilities():
    assert geometric_ranking_probabilities(0.08, 1)[0] == pytest.approx(1.0, abs=1e-15)
    p = geometric_ranking_probabilities(0.08, 30)
    np.testing.assert_allclose(p[:3], oracles.ranking_probabilities(0.08, 30)[:3], rtol=1e-14)
    # frozen from an exact rational evaluation: q' = 0.08 / (1 - 0.92**30)
    np.testing.assert_allclose(p[:3], [0.08714276131416852, 0.08017134040903505, 0.07375763317631225], rtol=1e-9)
    assert np.all(np.diff(p) < 0)


@settings(max_examples=300)
@given(st.floats(0.001, 0.999), st.integers(1, 500))
def test_ranking_probabilities_sum(q, n):
    assert abs(geometric_ranking_probabilities(q, n).sum() - 1.0) < 1e-12


def test_tournament_trivial_and_ties():
    rng = np.random.default_rng(0)
    assert tournament_select(["only"], [0.3], 3, rng) == (0, "only")
    pop = ["a", "b", "c", "d"]
    for _ in range(200):
        idx, _ = tournament_select(pop, [1.0, 1.0, 1.0, 1.0], 3, rng)
        # all tied: the lowest drawn index wins, never a higher one than some drawn
        assert 0 <= idx < 4
    idx, ind = tournament_select(pop, [0.5, 0.9, 0.9, 0.1], 3, PinnedRng(integers=[np.array([2, 1, 3])]))
    assert (idx, ind) == (1, "b")


def test_tournament_monte_carlo():
    rng = np.random.default_rng(1)
    n, trials = 10, 10_000
    fit = np.zeros(n)
    fit[4] = 1.0
    wins = sum(tournament_select(range(n), fit, 3, rng)[0] == 4 for _ in range(trials))
    expected = 1 - ((n - 1) / n) ** 3
    assert abs(wins / trials - expected) < 0.02


def test_binary_mutation():
    rng = np.random.default_rng(2)
    bits = rng.integers(0, 2, 64).astype(np.uint8)
    assert np.array_equal(binary_mutation(bits, 0.0, rng), bits)
    assert np.array_equal(binary_mutation(bits, 1.0, rng), 1 - bits)
    many = np.zeros(100_000, dtype=np.uint8)
    assert abs(binary_mutation(many, 0.1, rng).mean() - 0.1) < 0.005


def test_simple_crossover_cases():
    rng = np.random.default_rng(3)
    x = np.array([1, 1, 1, 1, 1], dtype=np.uint8)
    y = np.zeros(5, dtype=np.uint8)
    a, b = simple_crossover(x, x, rng)
    assert np.array_equal(a, x) and np.array_equal(b, x)
    a, b = simple_crossover(x, y, rng, cut=3)
    assert a.tolist() == [1, 1, 0, 0, 0] and b.tolist() == [0, 0, 1, 1, 1]
    # r = m: only the last position is swapped
    a, b = simple_crossover(x, y, rng, cut=5)
    assert a.tolist() == [1, 1, 1, 1, 0] and b.tolist() == [0, 0, 0, 0, 1]
    a, b = simple_crossover(x, y, rng, cut=1)
    assert np.array_equal(a, y) and np.array_equal(b, x)


def test_simple_crossover_conserves_bits():
    rng = np.random.default_rng(4)
    for _ in range(1000):
        m = int(rng.integers(1, 40))
        x, y = rng.integers(0, 2, m), rng.integers(0, 2, m)
        a, b = simple_crossover(x, y, rng)
        assert a.sum() + b.sum() == x.sum() + y.sum()
        assert np.array_equal(np.sort(np.stack([a, b]), axis=0), np.sort(np.stack([x, y]), axis=0))


def test_arithmetic_crossover():
    rng = np.random.default_rng(5)
    x, y = np.array([0.1, 0.9]), np.array([0.7, 0.3])
    a, b = arithmetic_crossover(x, y, rng, r=1.0)
    assert np.array_equal(a, x) and np.array_equal(b, y)
    a, b = arithmetic_crossover(x, y, rng, r=0.5)
    np.testing.assert_allclose(a, [0.4, 0.6])
    np.testing.assert_allclose(b, [0.4, 0.6])
    for _ in range(1000):
        x, y = rng.normal(size=4), rng.normal(size=4)
        a, b = arithmetic_crossover(x, y, rng)
        assert np.max(np.abs(a + b - (x + y))) < 1e-12


def test_nonuniform_mutation():
    rng = np.random.default_rng(6)
    x = np.array([0.3, 0.6, 0.9])
    for _ in range(200):
        assert np.array_equal(nonuniform_mutation(x, 0.05, 1.0, 25, 25, 3.0, rng), x)
    # gene already at the upper bound moving up stays put
    top = np.array([1.0, 0.5])
    out = nonuniform_mutation(top, 0.0, 1.0, 1, 10, 2.0, PinnedRng([0.2, 0.7], [0]))
    assert out.tolist() == top.tolist()
    with pytest.raises(DomainError):
        nonuniform_mutation(x, 0.05, 1.0, 26, 25, 3.0, rng)


def test_nonuniform_mutation_fixture():
    x = np.array([0.3, 0.6, 0.9])
    # gene 1 moves up: f = (0.4 * (1 - 5/20))**3 = 0.027
    out = nonuniform_mutation(x, 0.05, 1.0, 5, 20, 3.0, PinnedRng([0.25, 0.4], [1]))
    np.testing.assert_allclose(out, [0.3, 0.6 + 0.4 * 0.027, 0.9], rtol=0, atol=1e-15)
    # gene 2 moves down: f = (0.8 * 0.5)**2 = 0.16
    out = nonuniform_mutation(x, 0.05, 1.0, 10, 20, 2.0, PinnedRng([0.75, 0.8], [2]))
    np.testing.assert_allclose(out, [0.3, 0.6, 0.9 - 0.85 * 0.16], rtol=0, atol=1e-15)


def test_binary_coding_round_trip():
    lo, hi = np.array([0.05, 0.05]), np.array([1.0, 1.0])
    chrom = encode_binary(np.array([0.05, 1.0]), lo, hi, 8)
    assert chrom.tolist() == [0] * 8 + [1] * 8
    rng = np.random.default_rng(7)
    for _ in range(100):
        bits = rng.integers(0, 2, 16)
        assert np.array_equal(encode_binary(decode_binary(bits, lo, hi, 8), lo, hi, 8), bits)


# -- particle swarm ----------------------------------------------------------

def test_pso_update_trivial():
    rng = np.random.default_rng(8)
    x, v = np.array([0.2, 0.4]), np.array([0.1, -0.3])
    v2, x2 = pso_update(x, v, np.array([0.9, 0.9]), np.array([0.1, 0.1]), 0.0, 0.0, 0.0, rng)
    assert v2.tolist() == [0.0, 0.0] and x2.tolist() == x.tolist()
    v2, x2 = pso_update(x, v, x, x, 0.7, 2.0, 2.0, rng)
    np.testing.assert_allclose(v2, 0.7 * v)


def test_pso_update_pinned():
    x, v = np.array([0.5, 0.2]), np.array([0.1, -0.1])
    p, g = np.array([0.6, 0.4]), np.array([0.9, 0.1])
    rng = PinnedRng([[0.25, 0.5], [0.75, 0.1]])
    v2, x2 = pso_update(x, v, p, g, 0.8, 2.0, 1.5, rng)
    # hand evaluation of the velocity/position update
    want_v = [0.8 * 0.1 + 2.0 * 0.25 * 0.1 + 1.5 * 0.75 * 0.4,
              0.8 * -0.1 + 2.0 * 0.5 * 0.2 + 1.5 * 0.1 * -0.1]
    np.testing.assert_allclose(v2, want_v, rtol=0, atol=1e-15)
    np.testing.assert_allclose(x2, x + np.array(want_v), rtol=0, atol=1e-15)


def test_pso_update_clamps():
    rng = PinnedRng([[1.0], [1.0]])
    v2, x2 = pso_update(np.array([0.9]), np.array([0.0]), np.array([0.9]), np.array([5.0]),
                        0.5, 2.0, 2.0, rng, lower=np.array([0.0]), upper=np.array([1.0]),
                        v_max=np.array([0.5]))
    assert x2.tolist() == [1.0] and v2.tolist() == [0.0]


def test_stationary_swarm():
    cfg = _cfg("pso", seed=1, pso={"swarm_size": 5, "iterations": 10, "inertia_start": 0.0})
    start = np.tile([0.3, -0.2], (5, 1))
    seen = []

    def f(x):
        seen.append(np.array(x))
        return sphere_fitness(x)

    rep = run_pso(cfg, f, initial_positions=start)
    assert all(np.array_equal(s, [0.3, -0.2]) for s in seen)
    assert rep.best_x == [0.3, -0.2]


def test_pso_counts():
    f = CountingFitness()
    rep = run_pso(_cfg("pso", pso={"swarm_size": 7, "iterations": 4}), f)
    assert rep.evaluation_executions == f.calls == 7 * 5
    assert len(rep.history) == 5


# -- annealing ---------------------------------------------------------------

def test_schedules():
    assert sa_schedule("fast", 3.0, 1) == 3.0
    assert sa_schedule("exponential", 100.0, 10) == pytest.approx(59.8737, abs=5e-5)
    temps = [sa_schedule("boltzmann", 1.0, k) for k in range(1, 1001)]
    assert all(a > b for a, b in zip(temps, temps[1:]))
    with pytest.raises(DomainError):
        sa_schedule("boltzmann", 1.0, 0)
    with pytest.raises(DomainError):
        sa_schedule("linear", 1.0, 1)


def test_acceptance_law():
    assert acceptance_probability(0.0, 2.0) == 0.5
    assert acceptance_probability(1.5, 1.5) == pytest.approx(1 / (1 + math.e), abs=1e-15)
    assert acceptance_probability(1e6, 1e-9) == 0.0
    rng = np.random.default_rng(9)
    assert abs(np.mean([sa_accept(0.0, 1.0, rng) for _ in range(10_000)]) - 0.5) < 0.02
    assert abs(np.mean([sa_accept(0.7, 0.7, rng) for _ in range(10_000)]) - 0.2689) < 0.02
    assert all(sa_accept(-1e-9, 1e-9, rng) for _ in range(100))


def test_greedy_limit():
    rng = np.random.default_rng(10)
    worse = rng.uniform(1e-3, 1.0, 1000)
    assert not any(sa_accept(d, 1e-9, rng) for d in worse)


def test_proposals():
    rng = np.random.default_rng(11)
    lo, hi = np.array([-50.0, -50.0]), np.array([50.0, 50.0])
    steps = np.array([sa_propose(np.zeros(2), 0.25, lo, hi, rng) for _ in range(100_000)])
    assert np.all(np.abs(steps.var(axis=0) / 0.25 - 1) < 0.05)
    x = np.array([0.3, 0.7])
    assert np.max(np.abs(sa_propose(x, 1e-14, 0.0, 1.0, rng) - x)) < 1e-5
    wide = np.array([sa_propose(x, 25.0, 0.0, 1.0, rng) for _ in range(2000)])
    assert np.all((wide >= 0.0) & (wide <= 1.0))


@settings(max_examples=200)
@given(st.floats(-100, 100))
def test_reflect_in_bounds(v):
    y = reflect(np.array([v]), 0.05, 1.0)[0]
    assert 0.05 <= y <= 1.0


def test_sa_counts():
    f = CountingFitness()
    rep = run_sa(_cfg("sa", sa={"iterations": 1}), f)
    assert rep.evaluation_executions == f.calls == 2
    f = CountingFitness()
    rep = run_sa(_cfg("sa", sa={"iterations": 1, "final_reevaluation": True}), f)
    assert rep.evaluation_executions == 3


def test_sa_tracks_best_independently():
    rep = run_sa(_cfg("sa", seed=3, sa={"iterations": 60, "schedule": "fast", "t0": 5.0}),
                 sphere_fitness)
    assert rep.best_fitness == max(rep.history)
    assert sphere_fitness(rep.best_x) == rep.best_fitness


# -- engines -----------------------------------------------------------------

@pytest.mark.parametrize("algorithm", ["ga_binary", "ga_real"])
def test_ga_counts_and_minimal_run(algorithm):
    f = CountingFitness()
    rep = run_ga(_cfg(algorithm, ga={"population_size": 6, "generations": 3}), f)
    assert rep.evaluation_executions == f.calls == 6 * 4
    rep = run_ga(_cfg(algorithm, ga={"population_size": 2, "generations": 1}), sphere_fitness)
    assert len(rep.history) == 2 and len(rep.best_x) == 2


def test_initial_population_as_generation():
    f = CountingFitness()
    cfg = _cfg("ga_binary", ga={"population_size": 10, "generations": 5,
                                "count_initial_as_generation": True})
    assert run_ga(cfg, f).evaluation_executions == 50


@pytest.mark.parametrize("algorithm", ["ga_binary", "ga_real", "pso", "sa"])
def test_determinism_and_history(algorithm):
    cfg = _cfg(algorithm, seed=12, ga={"population_size": 8, "generations": 5},
               pso={"swarm_size": 8, "iterations": 5}, sa={"iterations": 30})
    a, b = run(cfg, sphere_fitness), run(cfg, sphere_fitness)
    assert a.to_dict() == b.to_dict()
    assert all(x <= y for x, y in zip(a.history, a.history[1:]))
    assert np.all(np.asarray(a.best_x) >= -1) and np.all(np.asarray(a.best_x) <= 1)


def test_workers_do_not_change_results():
    cfg = _cfg("pso", seed=2, pso={"swarm_size": 10, "iterations": 5})
    assert run(cfg, sphere_fitness).to_dict() == run(cfg, sphere_fitness, workers=3).to_dict()


def test_stall_stop():
    cfg = _cfg("pso", seed=0, stall_evaluations=1, pso={"swarm_size": 5, "iterations": 50})
    rep = run(cfg, lambda x: 0.0)
    assert rep.stopped_early and rep.evaluation_executions < 5 * 51


def test_budget_overrides():
    f = CountingFitness()
    run(_cfg("sa", budget=7), f)
    assert f.calls == 8


def test_config_validation_and_round_trip():
    with pytest.raises(DomainError):
        _cfg("hill_climb").validate()
    with pytest.raises(DomainError):
        OptimizerConfig.from_dict({"algorithm": "sa", "dim": 2, "colour": "red"})
    with pytest.raises(DomainError):
        _cfg("ga_real", ga={"population_size": 0}).validate()
    cfg = _cfg("ga_real", ga={"selection": "tournament"})
    assert OptimizerConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()
    rep = run(_cfg("sa", sa={"iterations": 3}), sphere_fitness)
    assert RunReport.from_dict(rep.to_dict()).to_dict() == rep.to_dict()


def test_sa_sphere_within_02():
    cfg = dict(sa={"iterations": 100, "schedule": "boltzmann", "t0": 1.0})
    hits = sum(np.linalg.norm(run(_cfg("sa", seed=s, **cfg), sphere_fitness).best_x) < 0.2
               for s in range(10))
    assert hits >= 8
