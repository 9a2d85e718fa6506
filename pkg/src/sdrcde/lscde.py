"""Least-squares fit of the conditional density ratio in the projected space.

The fitted object models ``p(y | z)`` with ``z = W x`` as a non-negative
combination of Gaussian basis functions. The quadratic system

    gram       = mean over samples of the output-integrated basis Gram
    basis_mean = mean over samples of the basis vector at (z_i, y_i)

has the ridge solution ``alpha = (gram + lam I)^{-1} basis_mean``, and the
objective value ``0.5 alpha' gram alpha - basis_mean' alpha`` estimates the
(shifted, negated) concentration of the conditional density: lower means a
sharper, better-explained conditional law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .basis import (
    BasisSpec,
    StandardizationStats,
    center_output_sq_dists,
    input_sq_dists,
    output_sq_dists,
    standardize_x,
    standardize_y,
)
from .data import Dataset
from .errors import DegenerateDensityError, SolverError, ValidationError

# Below this normalizer value a query point is reported as degenerate
# (effectively infinitely far from every center) instead of returning 0/0.
EPS_NORMALIZER = 1e-12


@dataclass(frozen=True)
class SystemMatrices:
    """Quadratic-form data of the least-squares problem.

    ``gram`` is symmetric positive semidefinite; ``basis_mean`` entries are
    averages of Gaussian values and therefore non-negative.
    """

    gram: np.ndarray
    basis_mean: np.ndarray
    n: int


def _gauss_factors(dzu: np.ndarray, sigma: float) -> np.ndarray:
    return np.exp(-dzu / (2.0 * sigma**2))


def assemble_system(dataset_std: Dataset, basis: BasisSpec, W: np.ndarray) -> SystemMatrices:
    """Build the quadratic system from a standardized dataset.

    Uses the factorization of the output-integrated Gram into per-sample
    input kernels and a center-output kernel, so cost is O(n b) kernel
    evaluations plus one (b x n)(n x b) product.
    """
    if dataset_std.n < 1:
        raise ValidationError("cannot assemble a system from an empty dataset")
    sigma = basis.sigma
    if sigma is None or sigma <= 0:
        raise ValidationError(f"bandwidth must be positive, got {sigma!r}")
    n = dataset_std.n
    dzu = input_sq_dists(dataset_std.x, basis, W)
    dyv = output_sq_dists(dataset_std.y, basis)
    kz = _gauss_factors(dzu, sigma)
    kv = np.exp(-center_output_sq_dists(basis) / (4.0 * sigma**2))
    const = (math.sqrt(math.pi) * sigma) ** basis.d_y
    gram = (const / n) * (kz.T @ kz) * kv
    gram = 0.5 * (gram + gram.T)
    phi = np.exp(-(dzu + dyv) / (2.0 * sigma**2))
    return SystemMatrices(gram=gram, basis_mean=phi.mean(axis=0), n=n)


def solve_alpha(sys: SystemMatrices, lam: float) -> np.ndarray:
    """Ridge solution of the quadratic system via SPD factorization."""
    if lam < 0:
        raise ValidationError(f"regularizer must be >= 0, got {lam}")
    b = sys.gram.shape[0]
    M = sys.gram + lam * np.eye(b)
    try:
        c, low = cho_factor(M, lower=True)
    except LinAlgError as exc:
        raise SolverError(f"system is singular or indefinite at lam={lam:g}: {exc}") from exc
    return cho_solve((c, low), sys.basis_mean)


def sce_score(sys: SystemMatrices, alpha: np.ndarray) -> float:
    """Objective value ``0.5 a' G a - h' a`` of the least-squares fit."""
    alpha = np.asarray(alpha, dtype=float).ravel()
    if alpha.shape[0] != sys.gram.shape[0]:
        raise ValidationError(
            f"weight length {alpha.shape[0]} != system size {sys.gram.shape[0]}"
        )
    return float(0.5 * alpha @ sys.gram @ alpha - sys.basis_mean @ alpha)


@dataclass(frozen=True)
class CdeModel:
    """Fitted conditional density estimator.

    ``alpha`` is the signed ridge solution; ``alpha_nonneg`` its elementwise
    clip at zero used for density evaluation. ``sce`` stores the objective
    value of the stored system.
    """

    projection: np.ndarray
    basis: BasisSpec
    lam: float
    alpha: np.ndarray
    alpha_nonneg: np.ndarray
    stats: StandardizationStats
    sce: float

    @property
    def d_z(self) -> int:
        return self.projection.shape[0]

    @property
    def d_x(self) -> int:
        return self.projection.shape[1]

    @property
    def d_y(self) -> int:
        return self.basis.d_y

    # -- standardized-space evaluation ------------------------------------

    def _mixture_parts(self, X_std: np.ndarray, Y_std: np.ndarray | None):
        """Input kernels, normalizers, and (optionally) joint numerators."""
        sigma = self.basis.sigma
        X_std = np.atleast_2d(np.asarray(X_std, dtype=float))
        kz = _gauss_factors(input_sq_dists(X_std, self.basis, self.projection), sigma)
        w = self.alpha_nonneg
        norm_const = (math.sqrt(2.0 * math.pi) * sigma) ** self.d_y
        normalizer = norm_const * (kz @ w)
        num = None
        if Y_std is not None:
            Y_std = np.atleast_2d(np.asarray(Y_std, dtype=float))
            ky = _gauss_factors(output_sq_dists(Y_std, self.basis), sigma)
            num = (kz * ky) @ w
        return kz, normalizer, num

    def _l2_numerator(self, kz: np.ndarray) -> np.ndarray:
        """Quadratic form of the output-integrated Gram at each query."""
        sigma = self.basis.sigma
        kv = np.exp(-center_output_sq_dists(self.basis) / (4.0 * sigma**2))
        const = (math.sqrt(math.pi) * sigma) ** self.d_y
        A = kz * self.alpha_nonneg
        return const * np.einsum("ik,ik->i", A, A @ kv)

    def conditional_density_std(self, X_std: np.ndarray, Y_std: np.ndarray) -> np.ndarray:
        """Normalized density values in standardized coordinates, row-paired."""
        _, normalizer, num = self._mixture_parts(X_std, Y_std)
        bad = normalizer < EPS_NORMALIZER
        if bad.any():
            i = int(np.argmax(bad))
            raise DegenerateDensityError(
                f"density normalizer vanished at query row {i}",
                query=np.atleast_2d(X_std)[i],
            )
        return num / normalizer

    def density_l2_std(self, X_std: np.ndarray) -> np.ndarray:
        """Integral of the squared conditional density over standardized outputs."""
        kz, normalizer, _ = self._mixture_parts(X_std, None)
        bad = normalizer < EPS_NORMALIZER
        if bad.any():
            i = int(np.argmax(bad))
            raise DegenerateDensityError(
                f"density normalizer vanished at query row {i}",
                query=np.atleast_2d(X_std)[i],
            )
        return self._l2_numerator(kz) / normalizer**2

    def score_terms_std(
        self, X_std: np.ndarray, Y_std: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, int]:
        """Pointwise density and squared-density-integral terms for scoring.

        Queries with a vanished normalizer fall back to the unconditional
        mixture (all input kernels set to 1) and are counted, never dropped.
        """
        kz, normalizer, num = self._mixture_parts(X_std, Y_std)
        bad = normalizer < EPS_NORMALIZER
        n_fallback = int(bad.sum())
        if n_fallback:
            total = float(self.alpha_nonneg.sum())
            if total <= 0.0:
                raise DegenerateDensityError("all mixture weights are zero")
            kz = kz.copy()
            kz[bad] = 1.0  # unconditional mixture: every center equally near
            norm_fb, num_fb = self._fallback_parts(Y_std, bad)
            normalizer = normalizer.copy()
            num = num.copy()
            normalizer[bad] = norm_fb
            num[bad] = num_fb
        dens = num / normalizer
        l2 = self._l2_numerator(kz) / normalizer**2
        return dens, l2, n_fallback

    def _fallback_parts(self, Y_std, mask):
        sigma = self.basis.sigma
        w = self.alpha_nonneg
        Y_bad = np.atleast_2d(np.asarray(Y_std, dtype=float))[mask]
        ky = _gauss_factors(output_sq_dists(Y_bad, self.basis), sigma)
        norm_const = (math.sqrt(2.0 * math.pi) * sigma) ** self.d_y
        norm_fb = np.full(int(mask.sum()), norm_const * float(w.sum()))
        num_fb = ky @ w
        return norm_fb, num_fb

    # -- raw-space evaluation ----------------------------------------------

    def conditional_density(self, x: np.ndarray, y: np.ndarray) -> float | np.ndarray:
        """Density of raw outputs given raw inputs (standardizes internally)."""
        xs = np.atleast_2d(standardize_x(self.stats, x))
        ys = np.atleast_2d(standardize_y(self.stats, y))
        vals = self.conditional_density_std(xs, ys) / self.stats.y_jacobian
        return float(vals[0]) if np.asarray(x).ndim == 1 else vals

    def density_l2(self, x: np.ndarray) -> float | np.ndarray:
        """Integral of the squared raw-output density at raw input ``x``."""
        xs = np.atleast_2d(standardize_x(self.stats, x))
        vals = self.density_l2_std(xs) / self.stats.y_jacobian
        return float(vals[0]) if np.asarray(x).ndim == 1 else vals


def build_model(
    dataset_std: Dataset,
    basis: BasisSpec,
    W: np.ndarray,
    lam: float,
    stats: StandardizationStats,
) -> CdeModel:
    """Assemble, solve, and package a model at a fixed projection and bandwidth."""
    sys = assemble_system(dataset_std, basis, W)
    alpha = solve_alpha(sys, lam)
    return CdeModel(
        projection=np.asarray(W, dtype=float).copy(),
        basis=basis,
        lam=float(lam),
        alpha=alpha,
        alpha_nonneg=np.maximum(alpha, 0.0),
        stats=stats,
        sce=sce_score(sys, alpha),
    )
