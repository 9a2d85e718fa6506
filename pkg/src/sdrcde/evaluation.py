"""Error metrics, the subspace-monotonicity Monte-Carlo check, and the
benchmark runner.

Subspace recovery error compares projections through their symmetric
projectors: ``error_dr = || What' What - Wstar' Wstar ||_F``. Conditional
density error is the held-out squared-loss surrogate

    0.5 * mean_i integral of p(y | x_i)^2 dy  -  mean_i p(y_i | x_i)

computed in standardized coordinates so different estimators are directly
comparable; lower is better.
"""

from __future__ import annotations

import sys as _sys
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as spstats

from ._parallel import run_ordered
from .basis import apply_standardizer, fit_standardizer, select_centers, standardize_x, standardize_y
from .data import Dataset, GENERATORS, load_csv, split
from .ekde import DEFAULT_BANDWIDTHS, default_epsilon_grid, fit_ekde
from .errors import ValidationError
from .lscde import assemble_system, sce_score, solve_alpha
from .manifold import random_orthonormal, validate_projection
from .optimizer import OptimizerConfig, fit_fixed_projection, optimize_projection
from .selection import ModelGrid, make_folds, select_dimension, select_model

SIGNIFICANCE_LEVEL = 0.05


def error_dr(W_hat: np.ndarray, W_star: np.ndarray) -> float:
    """Frobenius distance between the subspace projectors of two projections."""
    W_hat = validate_projection(W_hat)
    W_star = validate_projection(W_star)
    if W_hat.shape[1] != W_star.shape[1]:
        raise ValidationError(
            f"ambient dimensions differ: {W_hat.shape[1]} vs {W_star.shape[1]}"
        )
    return float(np.linalg.norm(W_hat.T @ W_hat - W_star.T @ W_star))


@dataclass(frozen=True)
class CdeError:
    """Held-out squared-loss score with degenerate-query diagnostics."""

    score: float
    n_degenerate: int = 0

    def __float__(self) -> float:
        return self.score


def error_cde(model, test: Dataset) -> CdeError:
    """Squared-loss score of a fitted model on raw held-out samples.

    Test points are standardized with the model's own statistics; queries
    with a vanished density normalizer contribute the model's unconditional
    fallback and are counted, never dropped.
    """
    if test.n < 1:
        raise ValidationError("test set is empty")
    X = standardize_x(model.stats, test.x)
    Y = standardize_y(model.stats, test.y)
    dens, l2, n_fallback = model.score_terms_std(X, Y)
    return CdeError(score=float(0.5 * l2.mean() - dens.mean()), n_degenerate=n_fallback)


@dataclass
class MonotonicityReport:
    """Objective at the generating subspace versus random subspaces."""

    sce_true: float
    sce_random: np.ndarray
    tolerance: float
    sigma: float
    lam: float

    @property
    def fraction_above(self) -> float:
        return float(np.mean(self.sce_random >= self.sce_true - self.tolerance))


def sce_monotonicity_check(
    dataset: Dataset,
    W_true: np.ndarray,
    trials: int,
    seed,
    grid: ModelGrid | None = None,
    max_centers: int = 100,
    tolerance: float = 0.01,
) -> MonotonicityReport:
    """Estimate how often a random subspace scores no better than the true one.

    Hyperparameters are chosen once by cross-validation at the true
    subspace and shared by every random draw.
    """
    grid = grid or ModelGrid()
    W_true = validate_projection(W_true)
    stats = fit_standardizer(dataset)
    ds = apply_standardizer(stats, dataset)
    root = np.random.SeedSequence(seed)
    centers_seed, folds_seed, draws_seed = root.spawn(3)
    skeleton = select_centers(ds, max_centers, centers_seed)
    folds = make_folds(ds.n, grid.n_folds, folds_seed)
    sigma, lam, _ = select_model(ds, skeleton, W_true, grid, folds)
    basis = skeleton.with_sigma(sigma)

    def objective(W):
        sys = assemble_system(ds, basis, W)
        return sce_score(sys, solve_alpha(sys, lam))

    sce_true = objective(W_true)
    d_z, d_x = W_true.shape
    draw_seeds = draws_seed.spawn(trials)
    sce_random = np.array(
        [objective(random_orthonormal(d_z, d_x, s)) for s in draw_seeds]
    )
    return MonotonicityReport(
        sce_true=sce_true, sce_random=sce_random, tolerance=tolerance,
        sigma=sigma, lam=lam,
    )


# ---------------------------------------------------------------------------
# Benchmark harness
# ---------------------------------------------------------------------------

RESULT_COLUMNS = (
    "dataset", "scheme", "estimator", "n", "seed",
    "d_z", "sigma", "lambda", "error_dr", "error_cde", "wall_s",
)


@dataclass
class BenchmarkRecord:
    """One experimental run. ``sigma``/``lam`` hold the neighborhood KDE's
    bandwidth/radius when the estimator is the baseline."""

    dataset: str
    scheme: str
    estimator: str
    n: int
    seed: int
    d_z: int | None = None
    sigma: float | None = None
    lam: float | None = None
    error_dr: float | None = None
    error_cde: float | None = None
    wall_s: float | None = None
    n_degenerate: int = 0
    failure: str | None = None

    def csv_row(self) -> list[str]:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return repr(v)
            return str(v)

        return [
            self.dataset, self.scheme, self.estimator, str(self.n), str(self.seed),
            fmt(self.d_z), fmt(self.sigma), fmt(self.lam),
            fmt(self.error_dr), fmt(self.error_cde), fmt(self.wall_s),
        ]


@dataclass
class BenchmarkPlan:
    """Cross product of datasets, scheme/estimator pairs, and seeds."""

    datasets: list
    schemes: list
    seeds: list
    d_z: int | str = 1
    n_test: int = 1000
    grid: ModelGrid = field(default_factory=ModelGrid)
    optimizer: dict = field(default_factory=dict)
    max_centers: int = 100

    @classmethod
    def from_dict(cls, raw: dict) -> "BenchmarkPlan":
        datasets = raw.get("datasets")
        schemes = [tuple(s) for s in raw.get("schemes", [])]
        seeds = list(raw.get("seeds", []))
        if not datasets or not schemes or not seeds:
            raise ValidationError("plan needs datasets, schemes, and seeds")
        for scheme, estimator in schemes:
            if scheme not in ("none", "lsce") or estimator not in ("lscde", "ekde"):
                raise ValidationError(f"unknown scheme/estimator pair ({scheme}, {estimator})")
        grid_kwargs = {}
        if "sigma_grid" in raw:
            grid_kwargs["sigmas"] = tuple(raw["sigma_grid"])
        if "lambda_grid" in raw:
            grid_kwargs["lambdas"] = tuple(raw["lambda_grid"])
        if "folds" in raw:
            grid_kwargs["n_folds"] = int(raw["folds"])
        return cls(
            datasets=datasets,
            schemes=schemes,
            seeds=seeds,
            d_z=raw.get("dz", 1),
            n_test=int(raw.get("n_test", 1000)),
            grid=ModelGrid(**grid_kwargs),
            optimizer=dict(raw.get("optimizer", {})),
            max_centers=int(raw.get("max_centers", 100)),
        )


def _materialize(ds_spec: dict, n_train: int, seed: int, n_test: int):
    """Deterministic train/test pair for one benchmark cell."""
    root = np.random.SeedSequence([int(seed), int(n_train)])
    train_seed, test_seed = root.spawn(2)
    if "generator" in ds_spec:
        gen_name = ds_spec["generator"]
        if gen_name not in GENERATORS:
            raise ValidationError(f"unknown generator {gen_name!r}")
        gen = GENERATORS[gen_name]
        kwargs = {}
        if "noise_std" in ds_spec:
            kwargs["noise_std"] = float(ds_spec["noise_std"])
        train = gen(n_train, train_seed, **kwargs)
        test = gen(n_test, test_seed, **kwargs)
        return train, test
    if "csv" in ds_spec:
        full = load_csv(ds_spec["csv"], name=ds_spec.get("name", ds_spec["csv"]))
        return split(full, n_train, train_seed)
    raise ValidationError("dataset spec needs a 'generator' or 'csv' key")


def _dataset_label(ds_spec: dict) -> str:
    return ds_spec.get("name") or ds_spec.get("generator") or str(ds_spec.get("csv"))


def run_cell(plan: BenchmarkPlan, ds_spec: dict, scheme: str, estimator: str,
             n_train: int, seed: int) -> BenchmarkRecord:
    rec = BenchmarkRecord(
        dataset=_dataset_label(ds_spec), scheme=scheme, estimator=estimator,
        n=n_train, seed=seed,
    )
    t0 = time.perf_counter()
    try:
        train_raw, test_raw = _materialize(ds_spec, n_train, seed, plan.n_test)
        stats = fit_standardizer(train_raw)
        train = apply_standardizer(stats, train_raw)
        cfg = OptimizerConfig(seed=seed, max_centers=plan.max_centers, **plan.optimizer)

        if scheme == "lsce":
            if plan.d_z == "auto":
                candidates = range(1, min(train.d_x, 10) + 1)
                sel = select_dimension(train, stats, candidates, plan.grid, cfg)
                lsce_model = sel.models[sel.d_z]
            else:
                lsce_model, _ = optimize_projection(train, stats, int(plan.d_z), plan.grid, cfg)
            W = lsce_model.projection
            if estimator == "lscde":
                model = lsce_model
                rec.sigma, rec.lam = model.basis.sigma, model.lam
            else:
                model = fit_ekde(
                    train, default_epsilon_grid(train, W), DEFAULT_BANDWIDTHS,
                    n_folds=plan.grid.n_folds, seed=seed, stats=stats, projection=W,
                )
                rec.sigma, rec.lam = model.bandwidth, model.epsilon
            rec.d_z = W.shape[0]
        else:
            W = np.eye(train.d_x)
            if estimator == "lscde":
                model = fit_fixed_projection(train, stats, W, plan.grid,
                                             plan.max_centers, seed)
                rec.sigma, rec.lam = model.basis.sigma, model.lam
            else:
                model = fit_ekde(
                    train, default_epsilon_grid(train), DEFAULT_BANDWIDTHS,
                    n_folds=plan.grid.n_folds, seed=seed, stats=stats,
                )
                rec.sigma, rec.lam = model.bandwidth, model.epsilon
            rec.d_z = train.d_x

        if train_raw.true_projection is not None:
            rec.error_dr = error_dr(W, train_raw.true_projection)
        err = error_cde(model, test_raw)
        rec.error_cde = err.score
        rec.n_degenerate = err.n_degenerate
    except Exception as exc:  # record the failure, never abort the batch
        rec.failure = f"{type(exc).__name__}: {exc}"
        print(f"benchmark cell failed ({rec.dataset}/{scheme}/{estimator}, "
              f"n={n_train}, seed={seed}): {rec.failure}", file=_sys.stderr)
    rec.wall_s = time.perf_counter() - t0
    return rec


def run_benchmark(plan: BenchmarkPlan) -> list[BenchmarkRecord]:
    """Run every (dataset, n, scheme, estimator, seed) cell of the plan."""
    cells = []
    for ds_spec in plan.datasets:
        n_values = ds_spec.get("n_train", 100)
        if isinstance(n_values, (int, float)):
            n_values = [int(n_values)]
        for n_train in n_values:
            for scheme, estimator in plan.schemes:
                for seed in plan.seeds:
                    cells.append((plan, ds_spec, scheme, estimator, int(n_train), int(seed)))
    return run_ordered(run_cell, cells)


@dataclass
class AggregateRow:
    """Per-cell mean and standard error over seeds, with t-test marking."""

    dataset: str
    scheme: str
    estimator: str
    n: int
    runs: int
    error_cde_mean: float | None
    error_cde_stderr: float | None
    error_dr_mean: float | None
    error_dr_stderr: float | None
    mark: str = ""  # "best", "comparable", or ""


def _mean_stderr(values: list[float]):
    if not values:
        return None, None
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    stderr = float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else None
    return mean, stderr


def aggregate_records(records: list[BenchmarkRecord]) -> list[AggregateRow]:
    """Group by (dataset, n, scheme, estimator); mark the best method and any
    method statistically comparable to it under a paired two-sided t-test."""
    groups: dict = {}
    for rec in records:
        groups.setdefault((rec.dataset, rec.n), {}).setdefault(
            (rec.scheme, rec.estimator), []
        ).append(rec)

    rows = []
    for (dataset, n), methods in groups.items():
        stats_by_method = {}
        for (scheme, estimator), recs in methods.items():
            ok = [r for r in recs if r.error_cde is not None]
            cde_mean, cde_se = _mean_stderr([r.error_cde for r in ok])
            dr_vals = [r.error_dr for r in ok if r.error_dr is not None]
            dr_mean, dr_se = _mean_stderr(dr_vals)
            stats_by_method[(scheme, estimator)] = (ok, cde_mean, cde_se, dr_mean, dr_se)
        scored = {m: v for m, v in stats_by_method.items() if v[1] is not None}
        best_method = min(scored, key=lambda m: scored[m][1]) if scored else None
        for (scheme, estimator), (ok, cde_mean, cde_se, dr_mean, dr_se) in stats_by_method.items():
            mark = ""
            if best_method is not None and cde_mean is not None:
                if (scheme, estimator) == best_method:
                    mark = "best"
                else:
                    mark = "comparable" if _comparable_to_best(
                        ok, stats_by_method[best_method][0]
                    ) else ""
            rows.append(AggregateRow(
                dataset=dataset, scheme=scheme, estimator=estimator, n=n,
                runs=len(ok), error_cde_mean=cde_mean, error_cde_stderr=cde_se,
                error_dr_mean=dr_mean, error_dr_stderr=dr_se, mark=mark,
            ))
    rows.sort(key=lambda r: (r.dataset, r.n, r.scheme, r.estimator))
    return rows


def _comparable_to_best(recs, best_recs) -> bool:
    by_seed = {r.seed: r.error_cde for r in recs}
    best_by_seed = {r.seed: r.error_cde for r in best_recs}
    common = sorted(set(by_seed) & set(best_by_seed))
    if len(common) < 2:
        return False
    a = np.array([by_seed[s] for s in common])
    b = np.array([best_by_seed[s] for s in common])
    if np.allclose(a, b):
        return True
    pvalue = spstats.ttest_rel(a, b).pvalue
    return bool(np.isnan(pvalue) or pvalue >= SIGNIFICANCE_LEVEL)


def write_records_csv(records: list[BenchmarkRecord], path) -> None:
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for rec in records:
            writer.writerow(rec.csv_row())


AGGREGATE_COLUMNS = (
    "dataset", "scheme", "estimator", "n", "runs",
    "error_cde_mean", "error_cde_stderr", "error_dr_mean", "error_dr_stderr",
    "mark", "scale",
)


def write_aggregate_csv(rows: list[AggregateRow], path, scale: float = 1.0) -> None:
    import csv

    def fmt(v):
        return "" if v is None else repr(float(v) * scale)

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_COLUMNS)
        for r in rows:
            writer.writerow([
                r.dataset, r.scheme, r.estimator, str(r.n), str(r.runs),
                fmt(r.error_cde_mean), fmt(r.error_cde_stderr),
                fmt(r.error_dr_mean), fmt(r.error_dr_stderr),
                r.mark, repr(float(scale)),
            ])


def format_aggregate_table(rows: list[AggregateRow], scale: float = 1.0) -> str:
    """Aligned plain-text table; '*' marks the best and comparable methods."""

    def cell(mean, stderr, mark):
        if mean is None:
            return "failed"
        se = "n/a" if stderr is None else f"{stderr * scale:.2f}"
        star = "*" if mark else " "
        return f"{star}{mean * scale:.2f}({se})"

    header = ["dataset", "n", "scheme", "estimator", "runs", "error_cde", "error_dr", "scale"]
    lines = [header]
    for r in rows:
        dr = "" if r.error_dr_mean is None else cell(r.error_dr_mean, r.error_dr_stderr, "")
        lines.append([
            r.dataset, str(r.n), r.scheme, r.estimator, str(r.runs),
            cell(r.error_cde_mean, r.error_cde_stderr, r.mark), dr, f"x {scale:g}",
        ])
    widths = [max(len(row[i]) for row in lines) for i in range(len(header))]
    out = []
    for i, row in enumerate(lines):
        out.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if i == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out) + "\n"
