"""First-order Sugeno fuzzy inference systems seeded by subtractive clustering."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import IVR_LAYOUT, DomainError, InteractionLabels, Layout, decode_labels
from .subclust import ClusterModel, check_radii, subclust

log = logging.getLogger(__name__)

SQRT8 = math.sqrt(8.0)


@dataclass(frozen=True)
class FuzzyRule:
    center: np.ndarray
    sigma: np.ndarray
    # (n_outputs, D + 1): input weights followed by the bias
    consequent: np.ndarray

    def output(self, x: np.ndarray) -> np.ndarray:
        return self.consequent[:, :-1] @ x + self.consequent[:, -1]


@dataclass(frozen=True)
class SugenoFis:
    centers: np.ndarray      # (R, D)
    sigmas: np.ndarray       # (R, D)
    coefs: np.ndarray        # (R, n_outputs, D + 1)
    layout: Layout = IVR_LAYOUT
    build_info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.centers.ndim != 2 or len(self.centers) < 1:
            raise DomainError("a FIS needs at least one rule")
        if self.sigmas.shape != self.centers.shape:
            raise DomainError("one sigma per rule and dimension required")
        if not np.all(self.sigmas > 0):
            raise DomainError("all sigmas must be positive")
        r, d = self.centers.shape
        if self.coefs.shape != (r, self.layout.target_dim, d + 1):
            raise DomainError(f"consequent shape {self.coefs.shape} does not match layout")
        if d != self.layout.input_dim:
            raise DomainError("rule dimension does not match layout")

    @property
    def n_rules(self) -> int:
        return len(self.centers)

    @property
    def input_dim(self) -> int:
        return self.centers.shape[1]

    @property
    def rules(self) -> list[FuzzyRule]:
        return [FuzzyRule(c, s, k) for c, s, k in zip(self.centers, self.sigmas, self.coefs)]

    def to_dict(self) -> dict:
        return {
            "layout": self.layout.to_dict(),
            "rules": [
                {"center": c.tolist(), "sigma": s.tolist(), "consequent": k.tolist()}
                for c, s, k in zip(self.centers, self.sigmas, self.coefs)
            ],
            "build_info": self.build_info,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SugenoFis":
        rules = d["rules"]
        return cls(
            centers=np.array([r["center"] for r in rules], dtype=float),
            sigmas=np.array([r["sigma"] for r in rules], dtype=float),
            coefs=np.array([r["consequent"] for r in rules], dtype=float),
            layout=Layout.from_dict(d["layout"]),
            build_info=d.get("build_info", {}),
        )

    def save(self, path: str | Path) -> None:
        # repr-based float output in json round-trips every double exactly
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "SugenoFis":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SugenoFis):
            return NotImplemented
        return (
            self.layout == other.layout
            and np.array_equal(self.centers, other.centers)
            and np.array_equal(self.sigmas, other.sigmas)
            and np.array_equal(self.coefs, other.coefs)
        )


def firing_weights(centers: np.ndarray, sigmas: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, int]:
    """Normalized firing strengths, shape (N, R).

    Rows where every rule underflows to zero fall back to the rule with the
    largest log-strength (the nearest rule in sigma-scaled distance).  The
    second return value counts such rows.
    """
    x = np.atleast_2d(x)
    logw = np.zeros((len(x), len(centers)))
    for k in range(len(centers)):
        logw[:, k] = -0.5 * (((x - centers[k]) / sigmas[k]) ** 2).sum(axis=1)
    w = np.exp(logw)
    total = w.sum(axis=1)
    dead = total == 0.0
    if np.any(dead):
        w[dead] = 0.0
        w[np.flatnonzero(dead), np.argmax(logw[dead], axis=1)] = 1.0
        total = np.where(dead, 1.0, total)
    return w / total[:, None], int(dead.sum())


def _design_matrix(wn: np.ndarray, x: np.ndarray) -> np.ndarray:
    xe = np.hstack([x, np.ones((len(x), 1))])
    # column block k holds wn[:, k] * [x, 1]
    return (wn[:, :, None] * xe[:, None, :]).reshape(len(x), -1)


def build_fis(
    x_train,
    y_train,
    radii,
    layout: Layout | None = None,
    squash: float = 1.25,
    accept: float = 0.9,
    reject: float = 0.7,
) -> SugenoFis:
    """Cluster the training inputs and fit linear consequents by least squares.

    Gaussian widths follow sigma_d = r_d * range_d / sqrt(8) so the membership
    kernel matches the clustering kernel.  Dimensions with zero range in the
    training inputs use range 1 (the normalized domain width).
    """
    x = np.atleast_2d(np.asarray(x_train, dtype=float))
    y = np.asarray(y_train, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if len(x) < 2:
        raise DomainError("need at least 2 training samples")
    if len(y) != len(x):
        raise DomainError("inputs and targets differ in length")
    if layout is None:
        layout = _generic_layout(x.shape[1], y.shape[1])
    r = check_radii(radii, x.shape[1])

    clusters: ClusterModel = subclust(x, r, squash=squash, accept=accept, reject=reject)
    span = x.max(axis=0) - x.min(axis=0)
    span = np.where(span > 0, span, 1.0)
    sigma = r * span / SQRT8
    centers = clusters.centers
    sigmas = np.tile(sigma, (len(centers), 1))

    wn, dead = firing_weights(centers, sigmas, x)
    a = _design_matrix(wn, x)
    theta, _, rank, _ = np.linalg.lstsq(a, y, rcond=None)
    rank_deficient = bool(rank < a.shape[1])
    if rank_deficient:
        log.debug("consequent regression rank %d < %d columns; using minimum-norm solution",
                  rank, a.shape[1])
    n_rules, d = centers.shape
    coefs = theta.T.reshape(y.shape[1], n_rules, d + 1).transpose(1, 0, 2)
    info = {"n_rules": n_rules, "rank": int(rank), "columns": int(a.shape[1]),
            "rank_deficient": rank_deficient, "underflow_rows": dead}
    return SugenoFis(centers=centers, sigmas=sigmas, coefs=np.ascontiguousarray(coefs),
                     layout=layout, build_info=info)


def _generic_layout(d: int, b: int) -> Layout:
    return Layout(
        input_names=tuple(f"x{i}" for i in range(d)),
        target_groups=(("y", tuple(str(k) for k in range(b))),),
    )


def infer(fis: SugenoFis, x) -> np.ndarray:
    """Raw outputs for one point (shape (B,)) or a batch (shape (N, B))."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != fis.input_dim:
        raise DomainError(f"input has {arr.shape[1]} dims, FIS expects {fis.input_dim}")
    wn, dead = firing_weights(fis.centers, fis.sigmas, arr)
    if dead:
        log.debug("%d inputs fired no rule; used nearest-rule consequents", dead)
    xe = np.hstack([arr, np.ones((len(arr), 1))])
    # per-rule outputs (N, R, B), then the firing-weighted average
    per_rule = np.einsum("nd,rbd->nrb", xe, fis.coefs)
    out = np.einsum("nr,nrb->nb", wn, per_rule)
    return out[0] if single else out


def decode_outputs(raw, layout: Layout) -> np.ndarray:
    """One-hot argmax per target group; ties go to the lowest class index."""
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    bits = np.zeros_like(raw)
    rows = np.arange(len(raw))
    for sl in layout.group_slices():
        bits[rows, sl.start + np.argmax(raw[:, sl], axis=1)] = 1.0
    return bits


def predict_bits(fis: SugenoFis, x) -> np.ndarray:
    return decode_outputs(infer(fis, np.atleast_2d(x)), fis.layout)


def classify(fis: SugenoFis, x) -> InteractionLabels | dict[str, str]:
    """Decode one input row to labels.

    IVR-layout systems return :class:`InteractionLabels`; any other layout
    returns a ``{group: class}`` mapping.
    """
    raw = infer(fis, np.asarray(x, dtype=float).ravel())
    if fis.layout == IVR_LAYOUT:
        return decode_labels(raw, fis.layout)
    return {
        group: classes[int(np.argmax(raw[sl]))]
        for (group, classes), sl in zip(fis.layout.target_groups, fis.layout.group_slices())
    }
