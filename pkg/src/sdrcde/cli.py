"""Command-line interface.

Subcommands: ``generate`` (synthetic CSV + metadata sidecar), ``fit``
(model + fit-report JSON), ``eval`` (metrics JSON), ``benchmark`` (records
CSV, aggregate CSV/text, and figures).

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .basis import apply_standardizer, fit_standardizer
from .data import (
    Dataset,
    gen_artificial_a,
    gen_artificial_b,
    gen_illustration,
    load_csv,
    save_csv,
)
from .errors import (
    DataError,
    DegenerateDensityError,
    OptimizerStalledError,
    SolverError,
    ValidationError,
)
from .evaluation import (
    BenchmarkPlan,
    aggregate_records,
    error_cde,
    error_dr,
    format_aggregate_table,
    run_benchmark,
    write_aggregate_csv,
    write_records_csv,
)
from .modelio import (
    file_fingerprint,
    load_model,
    load_sidecar,
    save_model,
    save_report,
    save_sidecar,
)
from .optimizer import OptimizerConfig, optimize_projection
from .selection import ModelGrid, select_dimension

GENERATOR_CHOICES = (
    "artificial-a",
    "artificial-b",
    "illustration-bimodal",
    "illustration-heteroscedastic",
)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats: {exc}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdrcde",
        description="Joint dimension reduction and conditional density estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="write a synthetic dataset CSV plus sidecar")
    p_gen.add_argument("--dataset", required=True, choices=GENERATOR_CHOICES)
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--noise-std", type=float, default=0.25)
    p_gen.add_argument("--out", required=True)

    p_fit = sub.add_parser("fit", help="fit a conditional density model to a CSV")
    p_fit.add_argument("data", help="training CSV")
    p_fit.add_argument("--dz", default="1", help="subspace dimension or 'auto'")
    p_fit.add_argument("--restarts", type=int, default=20)
    p_fit.add_argument("--cv-every", type=int, default=5)
    p_fit.add_argument("--max-iters", type=int, default=100)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--sigma-grid", type=_float_list, default=None)
    p_fit.add_argument("--lambda-grid", type=_float_list, default=None)
    p_fit.add_argument("--folds", type=int, default=5)
    p_fit.add_argument("--max-centers", type=int, default=100)
    p_fit.add_argument("--out", default=None, help="model JSON (default: <data>.model.json)")
    p_fit.add_argument("--report", default=None, help="fit report JSON (default: <data>.report.json)")

    p_eval = sub.add_parser("eval", help="evaluate a saved model on a CSV")
    p_eval.add_argument("model", help="model JSON from 'fit'")
    p_eval.add_argument("data", help="evaluation CSV")
    p_eval.add_argument("--out", default=None, help="metrics JSON (default: stdout)")

    p_bench = sub.add_parser("benchmark", help="run a benchmark plan")
    p_bench.add_argument("--plan", required=True, help="plan JSON")
    p_bench.add_argument("--out-dir", required=True)
    p_bench.add_argument("--scale", type=float, default=1.0,
                         help="display multiplier for aggregate errors")
    p_bench.add_argument("--no-figures", action="store_true")
    return parser


def cmd_generate(args, parser) -> int:
    if args.n < 1:
        parser.error("--n must be >= 1")
    if args.dataset == "artificial-a":
        ds = gen_artificial_a(args.n, args.seed, noise_std=args.noise_std)
        extra = {"noise_std": args.noise_std}
    elif args.dataset == "artificial-b":
        ds = gen_artificial_b(args.n, args.seed, noise_std=args.noise_std)
        extra = {"noise_std": args.noise_std}
    else:
        family = args.dataset.split("illustration-", 1)[1]
        ds = gen_illustration(args.n, args.seed, family)
        extra = {"family": family}
    save_csv(ds, args.out)
    save_sidecar(ds, args.out, generator=args.dataset, extra=extra)
    print(f"wrote {args.out} and {args.out}.meta.json ({ds.n} rows, "
          f"d_x={ds.d_x}, d_y={ds.d_y})")
    return 0


def _parse_dz(value: str, d_x: int, parser) -> int | str:
    if value == "auto":
        return "auto"
    try:
        dz = int(value)
    except ValueError:
        parser.error(f"--dz must be an integer or 'auto', got {value!r}")
    if not 1 <= dz <= d_x:
        parser.error(f"--dz must lie in [1, {d_x}] for this dataset, got {dz}")
    return dz


def cmd_fit(args, parser) -> int:
    dataset = load_csv(args.data)
    dz = _parse_dz(args.dz, dataset.d_x, parser)
    grid_kwargs = {"n_folds": args.folds}
    if args.sigma_grid:
        grid_kwargs["sigmas"] = tuple(args.sigma_grid)
    if args.lambda_grid:
        grid_kwargs["lambdas"] = tuple(args.lambda_grid)
    grid = ModelGrid(**grid_kwargs)
    cfg = OptimizerConfig(
        restarts=args.restarts, cv_every=args.cv_every, max_iters=args.max_iters,
        max_centers=args.max_centers, seed=args.seed,
    )
    stats = fit_standardizer(dataset)
    train = apply_standardizer(stats, dataset)
    if dz == "auto":
        selection = select_dimension(train, stats, range(1, min(dataset.d_x, 10) + 1), grid, cfg)
        model = selection.models[selection.d_z]
        report = selection.reports[selection.d_z]
        chosen_dz = selection.d_z
    else:
        model, report = optimize_projection(train, stats, dz, grid, cfg)
        chosen_dz = dz

    config_echo = {
        "dz": args.dz, "restarts": args.restarts, "cv_every": args.cv_every,
        "max_iters": args.max_iters, "seed": args.seed, "folds": args.folds,
        "max_centers": args.max_centers,
        "sigma_grid": list(grid.sigmas), "lambda_grid": list(grid.lambdas),
    }
    out = args.out or f"{args.data}.model.json"
    report_path = args.report or f"{args.data}.report.json"
    save_model(model, out, fingerprint=file_fingerprint(args.data),
               seed=args.seed, config=config_echo)
    save_report(report, report_path, config=config_echo)
    print(f"fitted d_z={chosen_dz} model (sigma={model.basis.sigma:g}, "
          f"lambda={model.lam:g}, objective={model.sce:.6g}); wrote {out}")
    return 0


def cmd_eval(args, parser) -> int:
    model_path = Path(args.model)
    if not model_path.exists():
        print(f"error: model file not found: {model_path}", file=sys.stderr)
        return 3
    model, meta = load_model(model_path)
    dataset = load_csv(args.data)
    fingerprint = file_fingerprint(args.data)
    fingerprint_match = bool(meta.get("dataset_fingerprint")) and (
        meta["dataset_fingerprint"] == fingerprint
    )
    if meta.get("dataset_fingerprint") and not fingerprint_match:
        print("warning: evaluation data differs from the data the model was "
              "standardized on (fingerprint mismatch)", file=sys.stderr)
    err = error_cde(model, dataset)
    metrics = {
        "model": str(args.model),
        "data": str(args.data),
        "n_test": dataset.n,
        "error_cde": err.score,
        "n_degenerate": err.n_degenerate,
        "fingerprint_match": fingerprint_match,
    }
    sidecar = load_sidecar(args.data)
    if sidecar and sidecar.get("true_projection") is not None:
        true_w = np.asarray(sidecar["true_projection"], dtype=float)
        metrics["error_dr"] = error_dr(model.projection, true_w)
    text = json.dumps(metrics, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_benchmark(args, parser) -> int:
    plan_path = Path(args.plan)
    if not plan_path.exists():
        print(f"error: plan file not found: {plan_path}", file=sys.stderr)
        return 3
    try:
        raw = json.loads(plan_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{plan_path}: invalid JSON: {exc}") from exc
    plan = BenchmarkPlan.from_dict(raw)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = run_benchmark(plan)
    rows = aggregate_records(records)
    write_records_csv(records, out_dir / "records.csv")
    write_aggregate_csv(rows, out_dir / "aggregate.csv", scale=args.scale)
    table = format_aggregate_table(rows, scale=args.scale)
    (out_dir / "aggregate.txt").write_text(table, encoding="utf-8")
    sys.stdout.write(table)
    figures = []
    if not args.no_figures:
        from .plots import benchmark_figures

        figures = benchmark_figures(rows, out_dir, scale=args.scale)
    n_failed = sum(1 for r in records if r.failure is not None)
    print(f"wrote {len(records)} records ({n_failed} failed), "
          f"{len(rows)} aggregate rows, {len(figures)} figures to {out_dir}")
    return 0


_DISPATCH = {
    "generate": cmd_generate,
    "fit": cmd_fit,
    "eval": cmd_eval,
    "benchmark": cmd_benchmark,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _DISPATCH[args.command](args, parser)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (SolverError, DegenerateDensityError, OptimizerStalledError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
