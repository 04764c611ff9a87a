import numpy as np
import pytest

from fisopt.dataset import Dataset, Layout

BLOB_LAYOUT = Layout(("u", "v"), (("blob", ("left", "right")),), continuous=())


def make_blobs(n: int = 100, seed: int = 0, spread: float = 0.04) -> Dataset:
    """Two tight 2-D blobs in the unit square, one class each, split 60/20/20."""
    rng = np.random.default_rng(seed)
    half = n // 2
    left = rng.normal([0.2, 0.2], spread, size=(half, 2))
    right = rng.normal([0.8, 0.8], spread, size=(n - half, 2))
    inputs = np.clip(np.vstack([left, right]), 0.0, 1.0)
    targets = np.zeros((n, 2))
    targets[:half, 0] = 1.0
    targets[half:, 1] = 1.0
    tags = np.array(["train", "train", "train", "validation", "test"] * (n // 5 + 1))[:n]
    # interleave so both blobs appear in every split
    order = rng.permutation(n)
    split = np.empty(n, dtype=object)
    split[order] = tags
    return Dataset(inputs=inputs, targets=targets, split=split, layout=BLOB_LAYOUT)


@pytest.fixture
def blobs() -> Dataset:
    return make_blobs()


def sphere_fitness(x) -> float:
    return -float(np.sum(np.asarray(x) ** 2))


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for name, (passed, detail) in test_acceptance.RESULTS.items():
            terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
