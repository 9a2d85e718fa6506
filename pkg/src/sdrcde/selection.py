"""K-fold cross-validation for (bandwidth, regularizer) pairs and for the
subspace dimension.

The held-out score of a fitted coefficient vector ``a`` on fold ``S`` is

    (1 / (2|S|)) sum_{z in S} a' bargram(z) a  -  (1 / |S|) sum_{(z,y) in S} a' basis(z, y)

i.e. the same quadratic objective evaluated on unseen samples; the model
minimizing the fold average wins, with ties broken toward the smoother
model (larger bandwidth, then larger regularizer).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import (
    BasisSpec,
    center_output_sq_dists,
    input_sq_dists,
    output_sq_dists,
)
from .data import Dataset
from .errors import ValidationError
from .lscde import assemble_system, solve_alpha

DEFAULT_SIGMAS = tuple(np.logspace(-1.0, 1.0, 9))
DEFAULT_LAMBDAS = (1e-3, 1e-2, 1e-1, 1.0, 10.0)


@dataclass(frozen=True)
class ModelGrid:
    """Candidate bandwidths and regularizers plus the fold count."""

    sigmas: tuple = DEFAULT_SIGMAS
    lambdas: tuple = DEFAULT_LAMBDAS
    n_folds: int = 5

    def __post_init__(self):
        if len(self.sigmas) == 0 or len(self.lambdas) == 0:
            raise ValidationError("model grid must be non-empty")
        if self.n_folds < 2:
            raise ValidationError("need at least 2 folds")
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        object.__setattr__(self, "lambdas", tuple(float(l) for l in self.lambdas))


def make_folds(n: int, n_folds: int, seed) -> list[np.ndarray]:
    """Disjoint covering fold index sets with sizes differing by at most 1."""
    if n_folds > n:
        raise ValidationError(f"cannot split {n} samples into {n_folds} folds")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    return [np.sort(part) for part in np.array_split(perm, n_folds)]


def _check_folds(folds, n: int) -> None:
    seen = np.concatenate([np.asarray(f) for f in folds]) if folds else np.array([])
    if any(len(f) < 1 for f in folds):
        raise ValidationError("every fold needs at least one sample")
    if len(seen) != n or len(np.unique(seen)) != n:
        raise ValidationError("folds must cover all samples disjointly")


def heldout_quadratic(
    dataset_std: Dataset, idx: np.ndarray, basis: BasisSpec, W: np.ndarray, alpha: np.ndarray
) -> float:
    """Average quadratic score of coefficients ``alpha`` on the given rows."""
    sigma = basis.sigma
    Xh, Yh = dataset_std.x[idx], dataset_std.y[idx]
    kz = np.exp(-input_sq_dists(Xh, basis, W) / (2.0 * sigma**2))
    ky = np.exp(-output_sq_dists(Yh, basis) / (2.0 * sigma**2))
    kv = np.exp(-center_output_sq_dists(basis) / (4.0 * sigma**2))
    const = (math.sqrt(math.pi) * sigma) ** basis.d_y
    A = kz * alpha[None, :]
    quad = const * np.einsum("ik,ik->i", A, A @ kv)
    lin = (kz * ky) @ alpha
    m = len(idx)
    return float(quad.sum() / (2.0 * m) - lin.sum() / m)


def cv_score(
    dataset_std: Dataset,
    basis_skeleton: BasisSpec,
    W: np.ndarray,
    sigma: float,
    lam: float,
    folds: list[np.ndarray],
) -> float:
    """Mean held-out quadratic score over folds for one (sigma, lam) pair."""
    _check_folds(folds, dataset_std.n)
    basis = basis_skeleton.with_sigma(sigma)
    n = dataset_std.n
    scores = []
    for fold in folds:
        mask = np.ones(n, dtype=bool)
        mask[fold] = False
        train = Dataset(dataset_std.x[mask], dataset_std.y[mask], name="cv-train")
        sys = assemble_system(train, basis, W)
        alpha = solve_alpha(sys, lam)
        scores.append(heldout_quadratic(dataset_std, np.asarray(fold), basis, W, alpha))
    return float(np.mean(scores))


def select_model(
    dataset_std: Dataset,
    basis_skeleton: BasisSpec,
    W: np.ndarray,
    grid: ModelGrid,
    folds: list[np.ndarray] | None = None,
    seed=0,
) -> tuple[float, float, float]:
    """Exhaustive grid argmin of the CV score; returns (sigma, lam, score)."""
    if folds is None:
        folds = make_folds(dataset_std.n, grid.n_folds, seed)
    best = None
    for sigma in grid.sigmas:
        for lam in grid.lambdas:
            score = cv_score(dataset_std, basis_skeleton, W, sigma, lam, folds)
            key = (score, -sigma, -lam)  # ties prefer the smoother model
            if best is None or key < best[0]:
                best = (key, sigma, lam, score)
    return best[1], best[2], best[3]


@dataclass
class DimensionSelection:
    """Outcome of subspace-dimension selection."""

    d_z: int
    cv_scores: dict[int, float] = field(default_factory=dict)
    models: dict = field(default_factory=dict)
    reports: dict = field(default_factory=dict)


def select_dimension(dataset_std: Dataset, stats, candidates, grid: ModelGrid, cfg) -> DimensionSelection:
    """Optimize the projection at every candidate dimension and pick the one
    whose final model attains the lowest held-out CV score.

    Each candidate reuses the same seed (common random numbers).
    """
    from .optimizer import optimize_projection

    candidates = sorted(set(int(c) for c in candidates))
    if not candidates:
        raise ValidationError("no candidate dimensions given")
    if candidates[0] < 1 or candidates[-1] > dataset_std.d_x:
        raise ValidationError(f"candidates must lie in [1, {dataset_std.d_x}]")
    result = DimensionSelection(d_z=candidates[0])
    best = None
    for d_z in candidates:
        model, report = optimize_projection(dataset_std, stats, d_z, grid, cfg)
        folds = make_folds(dataset_std.n, grid.n_folds, cfg.seed)
        skeleton = BasisSpec(model.basis.center_x, model.basis.center_y,
                             indices=model.basis.indices)
        score = cv_score(dataset_std, skeleton, model.projection,
                         model.basis.sigma, model.lam, folds)
        result.cv_scores[d_z] = score
        result.models[d_z] = model
        result.reports[d_z] = report
        if best is None or score < best:
            best = score
            result.d_z = d_z
    return result
