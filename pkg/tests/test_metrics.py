import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fisopt.dataset import Dataset, DomainError, InteractionLabels, encode_labels
from fisopt.fis import SugenoFis
from fisopt.metrics import (
    ConfusionCounts, FitnessContext, accuracy_eq1, confusion, evaluate_classifier, fitness,
    sensitivity, specificity,
)

from .conftest import BLOB_LAYOUT, make_blobs


def test_perfect_counts():
    labels = [InteractionLabels("good", "no_transfer", "no_transfer", "attempt1", "low", "high",
                                True)] * 6
    c = confusion(labels, labels)
    # 7 groups -> 7 hot bits out of 21 per sample
    assert (c.tp, c.tn, c.fp, c.fn) == (6 * 7, 6 * 14, 0, 0)
    assert accuracy_eq1(ConfusionCounts(10, 10, 0, 0)) == 1.0


def test_shifted_predictions_brute_force():
    rng = np.random.default_rng(0)
    cls = rng.integers(0, 4, 5)
    target = np.eye(4)[cls]
    pred = np.eye(4)[(cls + 1) % 4]
    counts = {"tp": 0, "tn": 0, "fp": 0, "fn": 0}
    for prow, trow in zip(pred, target):
        for p, t in zip(prow, trow):
            key = ("t" if p == t else "f") + ("p" if p else "n")
            counts[key] += 1
    c = confusion(pred, target)
    assert (c.tp, c.tn, c.fp, c.fn) == (counts["tp"], counts["tn"], counts["fp"], counts["fn"])
    assert (c.tp, c.tn, c.fp, c.fn) == (0, 10, 5, 5)


def test_confusion_preconditions():
    with pytest.raises(DomainError):
        confusion([], [])
    with pytest.raises(DomainError):
        confusion(np.zeros((2, 3)), np.zeros((2, 4)))


def test_hand_values():
    assert accuracy_eq1(ConfusionCounts(tp=9, tn=8, fp=2, fn=1)) == pytest.approx(
        math.sqrt(0.72), abs=1e-15)
    assert accuracy_eq1(ConfusionCounts(tp=9, tn=8, fp=2, fn=1)) == pytest.approx(0.848528, abs=1e-6)
    assert sensitivity(ConfusionCounts(tp=94, tn=0, fp=0, fn=6)) == pytest.approx(0.94)
    assert sensitivity(ConfusionCounts(tp=3, tn=1, fp=1, fn=0)) == 1.0


def test_degenerate_counts():
    c = ConfusionCounts(tp=5, tn=0, fp=0, fn=1)
    assert c.degenerate
    assert specificity(c) == 0.0
    assert accuracy_eq1(c) == 0.0
    with pytest.raises(DomainError):
        ConfusionCounts(-1, 0, 0, 0)


def test_identity_on_random_tuples():
    rng = np.random.default_rng(1)
    for tp, tn, fp, fn in rng.integers(1, 10_000, size=(1000, 4)):
        c = ConfusionCounts(int(tp), int(tn), int(fp), int(fn))
        assert abs(accuracy_eq1(c) - math.sqrt(sensitivity(c) * specificity(c))) < 1e-12


@settings(max_examples=200)
@given(*[st.integers(0, 10**6)] * 4)
def test_bounds_property(tp, tn, fp, fn):
    c = ConfusionCounts(tp, tn, fp, fn)
    a = accuracy_eq1(c)
    assert 0.0 <= a <= 1.0
    if not c.degenerate:
        assert min(sensitivity(c), specificity(c)) - 1e-12 <= a <= max(sensitivity(c),
                                                                        specificity(c)) + 1e-12


def test_counter_contract(blobs):
    ctx = FitnessContext(blobs, memoize=True)
    fitness([0.3, 0.3], ctx)
    fitness([0.3, 0.3], ctx)
    assert ctx.evaluation_executions == 1
    ctx = FitnessContext(blobs, memoize=False)
    ctx([0.3, 0.3])
    ctx([0.3, 0.3])
    assert ctx.evaluation_executions == 2
    ctx.scores([0.3, 0.3])
    assert ctx.evaluation_executions == 2


def test_separable_fixture_fitness(blobs):
    assert fitness([0.3, 0.3], FitnessContext(blobs)) == 1.0


def test_constant_fis_floor():
    # identical inputs force one rule with a constant output, so every sample
    # gets the same class; on balanced two-class data the one-hot score is 0.5
    ds = make_blobs(100)
    ds = Dataset(np.full_like(ds.inputs, 0.5), ds.targets, ds.split, ds.layout)
    v = fitness([0.5, 0.5], FitnessContext(ds, use_test=False))
    y = ds.view("validation")[1]
    # the score equals the validation share of whichever class is predicted
    assert min(abs(v - share) for share in y.mean(axis=0)) < 1e-12
    assert v <= 0.6


def test_fitness_uses_min_of_val_and_test(blobs):
    ctx = FitnessContext(blobs)
    s = ctx.scores([1.0, 1.0])
    assert fitness([1.0, 1.0], ctx) == min(s["validation"].accuracy, s["test"].accuracy)


def test_radius_bounds_enforced(blobs):
    with pytest.raises(DomainError):
        fitness([0.01, 0.3], FitnessContext(blobs))


def _always_left():
    coefs = np.zeros((1, 2, 3))
    coefs[0, 0, -1] = 1.0
    return SugenoFis(np.array([[0.5, 0.5]]), np.array([[0.3, 0.3]]), coefs, BLOB_LAYOUT)


def test_evaluate_known_counts(blobs):
    y = blobs.view("validation")[1]
    n_left, n = int(y[:, 0].sum()), len(y)
    acc, sens, spec = evaluate_classifier(_always_left(), blobs, "validation")
    # tp = tn = n_left, fp = fn = n - n_left
    assert sens == pytest.approx(n_left / n) and spec == pytest.approx(n_left / n)
    assert acc == pytest.approx(n_left / n)
    assert evaluate_classifier(_always_left(), blobs, "validation") == (acc, sens, spec)


def test_evaluate_perfect(blobs):
    fis = FitnessContext(blobs).build([0.3, 0.3])
    assert evaluate_classifier(fis, blobs, "train") == (1.0, 1.0, 1.0)


def test_label_objects_accepted():
    a = InteractionLabels("good", "no_transfer", "no_transfer", "attempt1", "low", "high", True)
    b = InteractionLabels("bad", "no_transfer", "no_transfer", "attempt1", "low", "high", True)
    assert confusion([a], [b]) == confusion(encode_labels(a)[None], encode_labels(b)[None])
