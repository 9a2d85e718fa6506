"""Gaussian basis functions, their analytic output-space integrals, center
selection, and coordinate standardization.

Each basis function is a joint Gaussian bump centred at a training sample:

    basis_k(z, y) = exp(-(||z - u_k||^2 + ||y - v_k||^2) / (2 sigma^2))

with ``u_k = W @ cx_k`` the projection of the stored full-dimensional center
input. Projected centers are always recomputed from ``(W, cx)``, never cached
across projection updates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import cdist

from .data import Dataset
from .errors import ValidationError


@dataclass(frozen=True)
class StandardizationStats:
    """Per-coordinate shift/scale for inputs and outputs.

    Scales are population standard deviations; constant coordinates get
    scale 1 and are flagged in ``degenerate_x`` / ``degenerate_y``.
    """

    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: np.ndarray
    y_scale: np.ndarray
    degenerate_x: np.ndarray
    degenerate_y: np.ndarray

    @classmethod
    def identity(cls, d_x: int, d_y: int) -> "StandardizationStats":
        return cls(
            x_mean=np.zeros(d_x),
            x_scale=np.ones(d_x),
            y_mean=np.zeros(d_y),
            y_scale=np.ones(d_y),
            degenerate_x=np.zeros(d_x, dtype=bool),
            degenerate_y=np.zeros(d_y, dtype=bool),
        )

    @property
    def y_jacobian(self) -> float:
        """Volume change of the output standardization map."""
        return float(np.prod(self.y_scale))


def _column_stats(M: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mean = M.mean(axis=0)
    scale = M.std(axis=0)
    degenerate = scale == 0.0
    scale = np.where(degenerate, 1.0, scale)
    return mean, scale, degenerate


def fit_standardizer(dataset: Dataset) -> StandardizationStats:
    """Estimate shift/scale so every non-degenerate coordinate has mean 0, variance 1."""
    if dataset.n < 2:
        raise ValidationError("standardizer needs at least 2 samples")
    x_mean, x_scale, deg_x = _column_stats(dataset.x)
    y_mean, y_scale, deg_y = _column_stats(dataset.y)
    if deg_x.any() or deg_y.any():
        warnings.warn("constant coordinate(s) found; their scale is set to 1", stacklevel=2)
    return StandardizationStats(x_mean, x_scale, y_mean, y_scale, deg_x, deg_y)


def apply_standardizer(stats: StandardizationStats, dataset: Dataset) -> Dataset:
    xs = (dataset.x - stats.x_mean) / stats.x_scale
    ys = (dataset.y - stats.y_mean) / stats.y_scale
    return replace(dataset, x=xs, y=ys)


def invert_standardizer(stats: StandardizationStats, dataset: Dataset) -> Dataset:
    xr = dataset.x * stats.x_scale + stats.x_mean
    yr = dataset.y * stats.y_scale + stats.y_mean
    return replace(dataset, x=xr, y=yr)


def standardize_x(stats: StandardizationStats, x: np.ndarray) -> np.ndarray:
    return (np.asarray(x, dtype=float) - stats.x_mean) / stats.x_scale


def standardize_y(stats: StandardizationStats, y: np.ndarray) -> np.ndarray:
    return (np.asarray(y, dtype=float) - stats.y_mean) / stats.y_scale


@dataclass(frozen=True)
class BasisSpec:
    """Gaussian centers (full input space + output space) and shared bandwidth.

    ``sigma`` is ``None`` for a center-only skeleton awaiting model selection.
    """

    center_x: np.ndarray
    center_y: np.ndarray
    sigma: float | None = None
    indices: np.ndarray | None = None

    @property
    def b(self) -> int:
        return self.center_x.shape[0]

    @property
    def d_y(self) -> int:
        return self.center_y.shape[1]

    def with_sigma(self, sigma: float) -> "BasisSpec":
        return replace(self, sigma=float(sigma))


def _checked_sigma(basis: BasisSpec) -> float:
    if basis.sigma is None or basis.sigma <= 0:
        raise ValidationError(f"bandwidth must be positive, got {basis.sigma!r}")
    return float(basis.sigma)


def select_centers(dataset: Dataset, max_centers: int, seed) -> BasisSpec:
    """Draw ``min(n, max_centers)`` distinct sample rows as Gaussian centers."""
    if dataset.n < 1:
        raise ValidationError("cannot select centers from an empty dataset")
    if max_centers < 1:
        raise ValidationError("max_centers must be >= 1")
    rng = np.random.default_rng(seed)
    b = min(dataset.n, max_centers)
    idx = rng.choice(dataset.n, size=b, replace=False)
    return BasisSpec(center_x=dataset.x[idx].copy(), center_y=dataset.y[idx].copy(), indices=idx)


def projected_centers(basis: BasisSpec, W: np.ndarray) -> np.ndarray:
    """Centers mapped into the current subspace: ``u_k = W @ cx_k``."""
    return basis.center_x @ np.asarray(W, dtype=float).T


def input_sq_dists(X: np.ndarray, basis: BasisSpec, W: np.ndarray) -> np.ndarray:
    """``n x b`` squared distances between projected inputs and projected centers."""
    Z = np.atleast_2d(X) @ np.asarray(W, dtype=float).T
    return cdist(Z, projected_centers(basis, W), "sqeuclidean")


def output_sq_dists(Y: np.ndarray, basis: BasisSpec) -> np.ndarray:
    """``n x b`` squared distances between outputs and output centers."""
    return cdist(np.atleast_2d(Y), basis.center_y, "sqeuclidean")


def center_output_sq_dists(basis: BasisSpec) -> np.ndarray:
    """``b x b`` squared distances among output centers."""
    return cdist(basis.center_y, basis.center_y, "sqeuclidean")


def eval_basis(z: np.ndarray, y: np.ndarray, basis: BasisSpec, W: np.ndarray) -> np.ndarray:
    """All basis functions at one ``(z, y)`` point; entries in (0, 1]."""
    sigma = _checked_sigma(basis)
    z = np.asarray(z, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    u = projected_centers(basis, W)
    dz = ((u - z) ** 2).sum(axis=1)
    dy = ((basis.center_y - y) ** 2).sum(axis=1)
    return np.exp(-(dz + dy) / (2.0 * sigma**2))


def eval_output_gram(z: np.ndarray, basis: BasisSpec, W: np.ndarray) -> np.ndarray:
    """Output-integrated Gram matrix of the basis at projected input ``z``.

    Entry ``(k, k')`` integrates ``basis_k * basis_k'`` over the whole output
    space, which has the closed form

        (sqrt(pi) sigma)^{d_y}
        * exp(-(2||z-u_k||^2 + 2||z-u_k'||^2 + ||v_k-v_k'||^2) / (4 sigma^2)).

    Symmetric positive semidefinite.
    """
    sigma = _checked_sigma(basis)
    z = np.asarray(z, dtype=float).ravel()
    u = projected_centers(basis, W)
    dz = ((u - z) ** 2).sum(axis=1)
    dvv = center_output_sq_dists(basis)
    expo = (2.0 * dz[:, None] + 2.0 * dz[None, :] + dvv) / (4.0 * sigma**2)
    return (math.sqrt(math.pi) * sigma) ** basis.d_y * np.exp(-expo)


def eval_normalizer(
    z: np.ndarray, weights: np.ndarray, basis: BasisSpec, W: np.ndarray
) -> float:
    """Total output-space mass of the weighted basis mixture at input ``z``.

    Closed form: ``(sqrt(2 pi) sigma)^{d_y} * sum_k w_k exp(-||z-u_k||^2 / (2 sigma^2))``.
    Weights must be non-negative.
    """
    sigma = _checked_sigma(basis)
    weights = np.asarray(weights, dtype=float).ravel()
    if weights.shape[0] != basis.b:
        raise ValidationError(f"expected {basis.b} weights, got {weights.shape[0]}")
    if np.any(weights < 0):
        raise ValidationError("normalizer weights must be non-negative")
    z = np.asarray(z, dtype=float).ravel()
    u = projected_centers(basis, W)
    dz = ((u - z) ** 2).sum(axis=1)
    mass = float(weights @ np.exp(-dz / (2.0 * sigma**2)))
    return (math.sqrt(2.0 * math.pi) * sigma) ** basis.d_y * mass
