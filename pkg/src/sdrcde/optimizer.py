"""Subspace search: natural-gradient descent with geodesic line search,
random restarts, and periodic refresh of the (bandwidth, regularizer) pair.

Each restart draws a random starting projection, picks hyperparameters by
cross-validation, then repeatedly steps along the descent geodesic, taking
the grid point with the lowest re-solved objective. Objective values are
non-increasing between hyperparameter refreshes (a refresh changes the
objective itself and may move it up). Convergence is declared on the
subspace, i.e. on ``W.T @ W``, not on the representative ``W``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ._parallel import run_ordered
from .basis import BasisSpec, StandardizationStats, select_centers
from .data import Dataset
from .errors import OptimizerStalledError, ValidationError
from .gradient import grad_sce, gradient_workspace
from .lscde import CdeModel, assemble_system, build_model, sce_score, solve_alpha
from .manifold import (
    complete_basis,
    geodesic_point,
    natural_gradient,
    orthonormalize_rows,
    random_orthonormal,
    row_gram_deviation,
)
from .selection import ModelGrid, make_folds, select_model

ZERO_GRADIENT_TOL = 1e-12
REORTHONORMALIZE_DRIFT = 1e-10

DEFAULT_LINE_SEARCH_GRID = tuple(2.0**k for k in range(-9, 4))


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs of the outer optimization loop."""

    restarts: int = 20
    cv_every: int = 5
    max_iters: int = 100
    convergence_tol: float = 1e-6
    line_search_grid: tuple = DEFAULT_LINE_SEARCH_GRID
    line_search_halvings: int = 10
    max_centers: int = 100
    seed: int = 0
    restart_seeds: tuple | None = None

    def __post_init__(self):
        if self.restarts < 1 or self.cv_every < 1 or self.max_iters < 1:
            raise ValidationError("restarts, cv_every, and max_iters must be >= 1")
        if self.convergence_tol <= 0:
            raise ValidationError("convergence_tol must be positive")
        if not self.line_search_grid:
            raise ValidationError("line-search grid must be non-empty")

    def seeds_for_restarts(self) -> list:
        if self.restart_seeds is not None:
            if len(self.restart_seeds) != self.restarts:
                raise ValidationError("restart_seeds length must equal restarts")
            return list(self.restart_seeds)
        return list(np.random.SeedSequence(self.seed).spawn(self.restarts))


@dataclass
class RestartTrace:
    """Objective trajectory of one restart.

    ``sce_path[i]`` is the objective after the i-th accepted change
    (index 0 is the starting value); ``refresh_points`` marks path indices
    where a hyperparameter refresh reset the objective.
    """

    restart: int
    sce_path: list = field(default_factory=list)
    refresh_points: list = field(default_factory=list)
    hyper_history: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    stalled_first_iter: bool = False
    grad_norm_first_iter: float = 0.0
    final_sigma: float = 0.0
    final_lambda: float = 0.0
    final_sce: float = 0.0


@dataclass
class FitReport:
    """Restart traces plus the deterministic merge decision."""

    traces: list
    chosen_restart: int
    wall_s: float
    d_z: int
    n: int


def _objective(dataset_std, basis, W, lam):
    ws = gradient_workspace(dataset_std, basis, W, lam)
    return ws


def _line_search(dataset_std, basis, W, Wperp, grad, lam, current_sce, cfg):
    """Best geodesic point over the scaled grid, or None if nothing improves.

    The grid is rescaled by halving up to ``cfg.line_search_halvings`` times
    before giving up.
    """
    nat = natural_gradient(grad, W, Wperp)
    gnorm = float(np.linalg.norm(nat))
    scale = 1.0 / gnorm
    for halving in range(cfg.line_search_halvings + 1):
        best = None
        for t in cfg.line_search_grid:
            Wt = geodesic_point(W, Wperp, grad, t * scale * 0.5**halving)
            sys = assemble_system(dataset_std, basis, Wt)
            alpha = solve_alpha(sys, lam)
            sce_t = sce_score(sys, alpha)
            if best is None or sce_t < best[0]:
                best = (sce_t, Wt)
        if best[0] < current_sce:
            return best
    return None


def _run_restart(dataset_std, skeleton, d_z, grid, folds, cfg, restart_index, restart_seed):
    d_x = dataset_std.d_x
    W = random_orthonormal(d_z, d_x, restart_seed)
    sigma, lam, _ = select_model(dataset_std, skeleton, W, grid, folds)
    basis = skeleton.with_sigma(sigma)
    ws = _objective(dataset_std, basis, W, lam)
    trace = RestartTrace(restart=restart_index)
    trace.sce_path.append(ws.sce)
    trace.hyper_history.append((0, sigma, lam))
    accepted = 0
    for it in range(cfg.max_iters):
        trace.iterations = it + 1
        grad = grad_sce(ws)
        Wperp = complete_basis(W)
        nat = natural_gradient(grad, W, Wperp)
        gnorm = float(np.linalg.norm(nat))
        if it == 0:
            trace.grad_norm_first_iter = gnorm
        if gnorm < ZERO_GRADIENT_TOL:
            trace.converged = True
            break
        found = _line_search(dataset_std, basis, W, Wperp, grad, lam, ws.sce, cfg)
        if found is None:
            trace.converged = True
            if it == 0:
                trace.stalled_first_iter = True
            break
        sce_new, W_new = found
        if row_gram_deviation(W_new) > REORTHONORMALIZE_DRIFT:
            W_new = orthonormalize_rows(W_new)
        subspace_shift = float(np.linalg.norm(W_new.T @ W_new - W.T @ W))
        W = W_new
        accepted += 1
        trace.sce_path.append(sce_new)
        ws = _objective(dataset_std, basis, W, lam)
        if subspace_shift < cfg.convergence_tol:
            trace.converged = True
            break
        if accepted % cfg.cv_every == 0:
            sigma, lam, _ = select_model(dataset_std, skeleton, W, grid, folds)
            basis = skeleton.with_sigma(sigma)
            ws = _objective(dataset_std, basis, W, lam)
            trace.refresh_points.append(len(trace.sce_path))
            trace.sce_path.append(ws.sce)
            trace.hyper_history.append((it + 1, sigma, lam))
    trace.final_sigma = sigma
    trace.final_lambda = lam
    trace.final_sce = ws.sce
    return trace, W, sigma, lam


def optimize_projection(
    dataset_std: Dataset,
    stats: StandardizationStats,
    d_z: int,
    grid: ModelGrid,
    cfg: OptimizerConfig,
) -> tuple[CdeModel, FitReport]:
    """Fit the projection and conditional density on a standardized dataset.

    Runs ``cfg.restarts`` independent descents and keeps the one with the
    lowest final objective (ties broken by restart index). The returned
    model has its coefficient clip applied and carries the standardization
    used to map raw queries.
    """
    if not 1 <= d_z <= dataset_std.d_x:
        raise ValidationError(f"need 1 <= d_z <= {dataset_std.d_x}, got {d_z}")
    t0 = time.perf_counter()
    seed_root = np.random.SeedSequence(cfg.seed)
    centers_seed, folds_seed = seed_root.spawn(2)
    skeleton = select_centers(dataset_std, cfg.max_centers, centers_seed)
    folds = make_folds(dataset_std.n, grid.n_folds, folds_seed)
    restart_seeds = cfg.seeds_for_restarts()
    results = run_ordered(
        _run_restart,
        [
            (dataset_std, skeleton, d_z, grid, folds, cfg, i, restart_seeds[i])
            for i in range(cfg.restarts)
        ],
    )
    traces = [r[0] for r in results]
    if all(t.stalled_first_iter for t in traces):
        raise OptimizerStalledError(
            "no restart improved on its first step despite a nonzero gradient",
            diagnostics={
                "grad_norms": [t.grad_norm_first_iter for t in traces],
                "sce_values": [t.final_sce for t in traces],
            },
        )
    chosen = min(range(len(results)), key=lambda i: (traces[i].final_sce, i))
    _, W, sigma, lam = results[chosen]
    model = build_model(dataset_std, skeleton.with_sigma(sigma), W, lam, stats)
    report = FitReport(
        traces=traces,
        chosen_restart=chosen,
        wall_s=time.perf_counter() - t0,
        d_z=d_z,
        n=dataset_std.n,
    )
    return model, report


def fit_fixed_projection(
    dataset_std: Dataset,
    stats: StandardizationStats,
    W: np.ndarray,
    grid: ModelGrid,
    max_centers: int = 100,
    seed=0,
) -> CdeModel:
    """Fit the density at a frozen projection (no subspace search).

    With ``W = I`` this is the no-reduction scheme.
    """
    seed_root = np.random.SeedSequence(seed)
    centers_seed, folds_seed = seed_root.spawn(2)
    skeleton = select_centers(dataset_std, max_centers, centers_seed)
    folds = make_folds(dataset_std.n, grid.n_folds, folds_seed)
    sigma, lam, _ = select_model(dataset_std, skeleton, W, grid, folds)
    return build_model(dataset_std, skeleton.with_sigma(sigma), W, lam, stats)
