"""JSON persistence for fitted models, fit reports, and dataset sidecars.

Floats are serialized through Python's shortest-repr encoder, which
round-trips IEEE doubles exactly, so a reloaded model reproduces every
density value bit for bit.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .basis import BasisSpec, StandardizationStats
from .data import Dataset
from .errors import DataError
from .lscde import CdeModel
from .optimizer import FitReport

MODEL_FORMAT_VERSION = 1
SIDECAR_FORMAT_VERSION = 1


def file_fingerprint(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _arr(a: np.ndarray) -> list:
    return np.asarray(a, dtype=float).tolist()


def model_to_dict(model: CdeModel, fingerprint: str = "", seed=None, config: dict | None = None) -> dict:
    s = model.stats
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "lscde",
        "standardization": {
            "x_mean": _arr(s.x_mean), "x_scale": _arr(s.x_scale),
            "y_mean": _arr(s.y_mean), "y_scale": _arr(s.y_scale),
            "degenerate_x": [bool(v) for v in s.degenerate_x],
            "degenerate_y": [bool(v) for v in s.degenerate_y],
        },
        "projection": _arr(model.projection),
        "basis": {
            "center_x": _arr(model.basis.center_x),
            "center_y": _arr(model.basis.center_y),
            "sigma": float(model.basis.sigma),
            "indices": None if model.basis.indices is None
            else [int(i) for i in model.basis.indices],
        },
        "lambda": float(model.lam),
        "alpha": _arr(model.alpha),
        "alpha_nonneg": _arr(model.alpha_nonneg),
        "sce": float(model.sce),
        "dataset_fingerprint": fingerprint,
        "fit_seed": seed,
        "config": config or {},
    }


def save_model(model: CdeModel, path, fingerprint: str = "", seed=None, config: dict | None = None) -> None:
    payload = model_to_dict(model, fingerprint, seed, config)
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_model(path) -> tuple[CdeModel, dict]:
    """Reconstruct a model and return it with the file's metadata dict."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: cannot read model file: {exc}") from exc
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataError(f"{path}: unsupported model format {payload.get('format_version')!r}")
    sd = payload["standardization"]
    stats = StandardizationStats(
        x_mean=np.asarray(sd["x_mean"], dtype=float),
        x_scale=np.asarray(sd["x_scale"], dtype=float),
        y_mean=np.asarray(sd["y_mean"], dtype=float),
        y_scale=np.asarray(sd["y_scale"], dtype=float),
        degenerate_x=np.asarray(sd["degenerate_x"], dtype=bool),
        degenerate_y=np.asarray(sd["degenerate_y"], dtype=bool),
    )
    bd = payload["basis"]
    basis = BasisSpec(
        center_x=np.asarray(bd["center_x"], dtype=float),
        center_y=np.asarray(bd["center_y"], dtype=float),
        sigma=float(bd["sigma"]),
        indices=None if bd.get("indices") is None else np.asarray(bd["indices"], dtype=int),
    )
    model = CdeModel(
        projection=np.asarray(payload["projection"], dtype=float),
        basis=basis,
        lam=float(payload["lambda"]),
        alpha=np.asarray(payload["alpha"], dtype=float),
        alpha_nonneg=np.asarray(payload["alpha_nonneg"], dtype=float),
        stats=stats,
        sce=float(payload["sce"]),
    )
    meta = {
        "dataset_fingerprint": payload.get("dataset_fingerprint", ""),
        "fit_seed": payload.get("fit_seed"),
        "config": payload.get("config", {}),
    }
    return model, meta


def report_to_dict(report: FitReport, config: dict | None = None) -> dict:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "d_z": report.d_z,
        "n": report.n,
        "chosen_restart": report.chosen_restart,
        "wall_s": report.wall_s,
        "config": config or {},
        "restarts": [
            {
                "restart": t.restart,
                "sce_path": [float(v) for v in t.sce_path],
                "refresh_points": list(t.refresh_points),
                "hyper_history": [
                    {"iteration": it, "sigma": float(s), "lambda": float(l)}
                    for it, s, l in t.hyper_history
                ],
                "iterations": t.iterations,
                "converged": t.converged,
                "final_sigma": float(t.final_sigma),
                "final_lambda": float(t.final_lambda),
                "final_sce": float(t.final_sce),
            }
            for t in report.traces
        ],
    }


def save_report(report: FitReport, path, config: dict | None = None) -> None:
    Path(path).write_text(
        json.dumps(report_to_dict(report, config), indent=2) + "\n", encoding="utf-8"
    )


def sidecar_path(csv_path) -> Path:
    return Path(str(csv_path) + ".meta.json")


def save_sidecar(dataset: Dataset, csv_path, generator: str, extra: dict | None = None) -> None:
    payload = {
        "format_version": SIDECAR_FORMAT_VERSION,
        "generator": generator,
        "name": dataset.name,
        "n": dataset.n,
        "d_x": dataset.d_x,
        "d_y": dataset.d_y,
        "seed": dataset.seed,
        "true_projection": None if dataset.true_projection is None
        else _arr(dataset.true_projection),
    }
    payload.update(extra or {})
    sidecar_path(csv_path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_sidecar(csv_path) -> dict | None:
    p = sidecar_path(csv_path)
    if not p.exists():
        return None
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{p}: cannot read sidecar: {exc}") from exc
