"""Confusion counting, accuracy/sensitivity/specificity and the radius fitness."""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, DomainError, InteractionLabels, encode_labels
from .fis import SugenoFis, build_fis, predict_bits
from .subclust import RADIUS_BOUNDS, check_radii

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise DomainError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def degenerate(self) -> bool:
        """True when a class side is empty, so some ratio is undefined."""
        return self.tp + self.fn == 0 or self.fp + self.tn == 0

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.tn + other.tn,
                               self.fp + other.fp, self.fn + other.fn)


def _as_bits(rows) -> np.ndarray:
    if len(rows) and isinstance(rows[0], InteractionLabels):
        return np.array([encode_labels(r) for r in rows])
    return np.atleast_2d(np.asarray(rows, dtype=float))


def confusion(predicted, target) -> ConfusionCounts:
    """Micro-aggregated counts over every one-hot bit of every sample.

    Accepts sequences of :class:`InteractionLabels` or (N, B) bit arrays.
    """
    if len(predicted) == 0 or len(target) == 0:
        raise DomainError("empty prediction list")
    p, t = _as_bits(predicted), _as_bits(target)
    if p.shape != t.shape:
        raise DomainError(f"layout mismatch: {p.shape} vs {t.shape}")
    p, t = p > 0.5, t > 0.5
    return ConfusionCounts(
        tp=int(np.sum(p & t)),
        tn=int(np.sum(~p & ~t)),
        fp=int(np.sum(p & ~t)),
        fn=int(np.sum(~p & t)),
    )


def sensitivity(c: ConfusionCounts) -> float:
    if c.tp + c.fn == 0:
        log.debug("sensitivity undefined (no positives); reporting 0")
        return 0.0
    return c.tp / (c.tp + c.fn)


def specificity(c: ConfusionCounts) -> float:
    if c.tn + c.fp == 0:
        log.debug("specificity undefined (no negatives); reporting 0")
        return 0.0
    return c.tn / (c.tn + c.fp)


def accuracy_eq1(c: ConfusionCounts) -> float:
    """sqrt(TP*TN / ((TP+FN)(FP+TN))), the geometric mean of the two hit rates.

    Zero when either class side is empty (see ``ConfusionCounts.degenerate``).
    """
    if c.degenerate:
        log.debug("accuracy undefined for %s; reporting 0", c)
        return 0.0
    return math.sqrt((c.tp * c.tn) / ((c.tp + c.fn) * (c.fp + c.tn)))


@dataclass(frozen=True)
class SplitScore:
    accuracy: float
    sensitivity: float
    specificity: float
    counts: ConfusionCounts


def score_bits(predicted, target) -> SplitScore:
    c = confusion(predicted, target)
    return SplitScore(accuracy_eq1(c), sensitivity(c), specificity(c), c)


def evaluate_classifier(fis: SugenoFis, dataset: Dataset, split: str) -> tuple[float, float, float]:
    """(accuracy, sensitivity, specificity) of ``fis`` on one split."""
    if fis.layout != dataset.layout:
        raise DomainError("FIS layout does not match the dataset layout")
    x, y = dataset.view(split)
    if len(x) == 0:
        raise DomainError(f"split {split!r} is empty")
    s = score_bits(predict_bits(fis, x), y)
    return s.accuracy, s.sensitivity, s.specificity


@dataclass
class FitnessContext:
    """Dataset views plus the evaluation counter shared by an optimization run.

    Calling the context with a radius vector returns the fitness.  The counter
    and memo table are guarded by a lock, so population members may be
    evaluated from several threads.
    """

    dataset: Dataset
    use_test: bool = True
    memoize: bool = False
    bounds: tuple[float, float] = RADIUS_BOUNDS
    evaluation_executions: int = 0
    failures: int = 0
    _memo: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        self.train = self.dataset.view("train")
        self.validation = self.dataset.view("validation")
        self.test = self.dataset.view("test")
        if len(self.train[0]) < 2:
            raise DomainError("training split needs at least 2 samples")
        if len(self.validation[0]) == 0:
            raise DomainError("validation split is empty")
        if self.use_test and len(self.test[0]) == 0:
            raise DomainError("test split is empty; disable use_test for validation-only fitness")

    @property
    def dim(self) -> int:
        return self.dataset.layout.input_dim

    def __call__(self, radii) -> float:
        return fitness(radii, self)

    def build(self, radii) -> SugenoFis:
        return build_fis(*self.train, radii, layout=self.dataset.layout)

    def scores(self, radii) -> dict[str, SplitScore]:
        """Uncounted per-split scores, for reporting."""
        fis = self.build(radii)
        return {
            "validation": score_bits(predict_bits(fis, self.validation[0]), self.validation[1]),
            "test": score_bits(predict_bits(fis, self.test[0]), self.test[1])
            if len(self.test[0]) else None,
        }


def memo_key(radii) -> tuple:
    return tuple(np.round(np.asarray(radii, dtype=float), 12).tolist())


def fitness(radii, ctx: FitnessContext) -> float:
    """min(validation accuracy, test accuracy) of the FIS built from ``radii``.

    With ``ctx.use_test`` off only the validation accuracy is used.  A failed
    build scores 0 and still counts as an execution.
    """
    r = check_radii(radii, ctx.dim, ctx.bounds)
    key = memo_key(r) if ctx.memoize else None
    if key is not None:
        with ctx._lock:
            if key in ctx._memo:
                return ctx._memo[key]
    with ctx._lock:
        ctx.evaluation_executions += 1
    try:
        fis = ctx.build(r)
        acc = accuracy_eq1(confusion(predict_bits(fis, ctx.validation[0]), ctx.validation[1]))
        if ctx.use_test:
            acc_test = accuracy_eq1(confusion(predict_bits(fis, ctx.test[0]), ctx.test[1]))
            acc = min(acc, acc_test)
    except (np.linalg.LinAlgError, DomainError, FloatingPointError) as exc:
        log.warning("FIS build failed for radii %s: %s", r.tolist(), exc)
        with ctx._lock:
            ctx.failures += 1
        acc = 0.0
    if key is not None:
        with ctx._lock:
            ctx._memo[key] = acc
    return acc
