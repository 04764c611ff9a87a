"""Subtractive clustering with an independent radius per input dimension."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import DomainError

RADIUS_BOUNDS = (0.05, 1.0)
# potentials within this relative gap of the maximum count as tied; absorbs the
# rounding of the Gram-matrix distance expansion on duplicated points
TIE_RTOL = 1e-12


def check_radii(radii, dim: int | None = None, bounds: tuple[float, float] | None = None) -> np.ndarray:
    r = np.asarray(radii, dtype=float).ravel()
    if dim is not None and r.size != dim:
        raise DomainError(f"expected {dim} radii, got {r.size}")
    if not np.all(np.isfinite(r)) or np.any(r <= 0):
        raise DomainError("radii must be finite and strictly positive")
    if bounds is not None and (np.any(r < bounds[0] - 1e-12) or np.any(r > bounds[1] + 1e-12)):
        raise DomainError(f"radii must lie in [{bounds[0]}, {bounds[1]}]")
    return r


@dataclass(frozen=True)
class ClusterModel:
    centers: np.ndarray
    center_indices: tuple[int, ...]
    chosen_potentials: tuple[float, ...]
    radii: np.ndarray
    squash_factor: float = 1.25
    accept_ratio: float = 0.9
    reject_ratio: float = 0.7

    @property
    def n_clusters(self) -> int:
        return len(self.center_indices)

    def to_dict(self) -> dict:
        return {
            "centers": self.centers.tolist(),
            "center_indices": list(self.center_indices),
            "chosen_potentials": list(self.chosen_potentials),
            "radii": self.radii.tolist(),
            "squash_factor": self.squash_factor,
            "accept_ratio": self.accept_ratio,
            "reject_ratio": self.reject_ratio,
        }


def _scaled_sqdist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # (n, m) squared Euclidean distances of already radius-scaled points
    d = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
    return np.maximum(d, 0.0)


def _argmax_lowest(values: np.ndarray, rtol: float = TIE_RTOL) -> int:
    top = values.max()
    return int(np.flatnonzero(values >= top - rtol * abs(top))[0])


def compute_potentials(points, radii) -> np.ndarray:
    """P_i = sum_j exp(-4 * sum_d ((x_id - x_jd) / r_d)^2)."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if len(x) == 0:
        raise DomainError("need at least one point")
    r = check_radii(radii, x.shape[1])
    z = x / r
    return np.exp(-4.0 * _scaled_sqdist(z, z)).sum(axis=1)


def subtract_potential(potentials, center_index: int, points, radii, squash: float = 1.25) -> np.ndarray:
    """Remove the influence of the chosen center from every potential."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    p = np.asarray(potentials, dtype=float)
    r = check_radii(radii, x.shape[1]) * squash
    if not 0 <= center_index < len(x):
        raise IndexError(f"center index {center_index} out of range")
    c = x[center_index]
    kernel = np.exp(-4.0 * (((x - c) / r) ** 2).sum(axis=1))
    out = np.maximum(0.0, p - p[center_index] * kernel)
    out[center_index] = 0.0
    return out


def subclust(points, radii, squash: float = 1.25, accept: float = 0.9, reject: float = 0.7) -> ClusterModel:
    """Select cluster centers among ``points`` by potential.

    Candidates above ``accept * P1`` are accepted, below ``reject * P1`` end the
    search.  In between, a candidate is accepted when its radius-scaled
    distance to the nearest existing center plus its relative potential is at
    least 1; otherwise its potential is zeroed and the next candidate is tried.
    Equal maxima go to the lowest index.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    n, dim = x.shape
    if n == 0:
        raise DomainError("need at least one point")
    if not 0 < reject < accept <= 1:
        raise DomainError(f"need 0 < reject < accept <= 1, got reject={reject}, accept={accept}")
    if squash <= 0:
        raise DomainError("squash factor must be positive")
    r = check_radii(radii, dim)

    z = x / r
    pot = np.exp(-4.0 * _scaled_sqdist(z, z)).sum(axis=1)
    zs = z / squash

    centers: list[int] = []
    chosen: list[float] = []
    first = None
    while len(centers) < n:
        k = _argmax_lowest(pot)
        p = float(pot[k])
        if p <= 0.0:
            break
        if first is None:
            first = p
        elif p < reject * first:
            break
        elif p <= accept * first:
            d_min = np.sqrt(_scaled_sqdist(z[k:k + 1], z[centers]).min())
            if d_min + p / first < 1.0:
                pot[k] = 0.0
                continue
        centers.append(k)
        chosen.append(p)
        kernel = np.exp(-4.0 * ((zs - zs[k]) ** 2).sum(axis=1))
        pot = np.maximum(0.0, pot - p * kernel)
        pot[k] = 0.0

    return ClusterModel(
        centers=x[centers].copy(),
        center_indices=tuple(centers),
        chosen_potentials=tuple(chosen),
        radii=r.copy(),
        squash_factor=squash,
        accept_ratio=accept,
        reject_ratio=reject,
    )
