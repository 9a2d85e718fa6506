"""Figure rendering for benchmark reports.

Renders mean +/- standard-error curves (or bars, for a single sample size)
of the error metrics per method, written as PNG files next to the delimited
output. Uses the non-interactive backend so it is safe headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_METRICS = (
    ("error_cde", "conditional density error"),
    ("error_dr", "subspace recovery error"),
)


def _method_label(scheme: str, estimator: str) -> str:
    names = {"lscde": "LSCDE", "ekde": "eps-KDE", "none": "None", "lsce": "LSCE"}
    return f"{names.get(scheme, scheme)}/{names.get(estimator, estimator)}"


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


def benchmark_figures(rows, out_dir, scale: float = 1.0) -> list[Path]:
    """One figure per (dataset, metric) from aggregate rows; returns paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    datasets = sorted({r.dataset for r in rows})
    written = []
    for dataset in datasets:
        subset = [r for r in rows if r.dataset == dataset]
        for metric, label in _METRICS:
            fig_path = out_dir / f"{_safe_name(dataset)}_{metric}.png"
            if _plot_metric(subset, metric, label, dataset, fig_path, scale):
                written.append(fig_path)
    return written


def _plot_metric(rows, metric, label, dataset, path, scale) -> bool:
    methods = sorted({(r.scheme, r.estimator) for r in rows})
    series = {}
    for method in methods:
        pts = []
        for r in rows:
            if (r.scheme, r.estimator) != method:
                continue
            mean = getattr(r, f"{metric}_mean")
            if mean is None:
                continue
            stderr = getattr(r, f"{metric}_stderr") or 0.0
            pts.append((r.n, mean * scale, stderr * scale))
        if pts:
            series[method] = sorted(pts)
    if not series:
        return False

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    n_values = sorted({n for pts in series.values() for n, _, _ in pts})
    if len(n_values) > 1:
        for method, pts in series.items():
            ns = [p[0] for p in pts]
            means = [p[1] for p in pts]
            errs = [p[2] for p in pts]
            ax.errorbar(ns, means, yerr=errs, marker="o", capsize=3,
                        label=_method_label(*method))
        ax.set_xlabel("training samples")
    else:
        labels = [_method_label(*m) for m in series]
        means = [pts[0][1] for pts in series.values()]
        errs = [pts[0][2] for pts in series.values()]
        ax.bar(labels, means, yerr=errs, capsize=3)
        ax.set_xlabel("method")
    suffix = f" (x {scale:g})" if scale != 1.0 else ""
    ax.set_ylabel(label + suffix)
    ax.set_title(dataset)
    ax.grid(True, alpha=0.3)
    if len(n_values) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata={"Software": None})
    plt.close(fig)
    return True
