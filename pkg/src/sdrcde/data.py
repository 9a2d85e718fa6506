"""Dataset container, synthetic generators, CSV ingestion, and splitting.

The CSV interchange format is UTF-8, comma-separated, decimal point ``.``,
one header row ``x1,...,x{d_x},y1,...,y{d_y}``, no thousands separators.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError, ValidationError


@dataclass(frozen=True)
class Dataset:
    """Paired input/output sample matrices with provenance metadata.

    ``true_projection`` holds the generating subspace (synthetic data only)
    as a row-orthonormal matrix.
    """

    x: np.ndarray
    y: np.ndarray
    name: str = ""
    true_projection: np.ndarray | None = None
    seed: int | None = None

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.atleast_2d(np.asarray(self.y, dtype=float))
        if x.shape[0] != y.shape[0]:
            raise ValidationError(
                f"row mismatch: x has {x.shape[0]} rows, y has {y.shape[0]}"
            )
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValidationError("dataset contains non-finite entries")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d_x(self) -> int:
        return self.x.shape[1]

    @property
    def d_y(self) -> int:
        return self.y.shape[1]


def gen_artificial_a(n: int, seed, noise_std: float = 0.25) -> Dataset:
    """Two relevant coordinates: y = x1^2 + x2^2 + noise, x ~ N(0, I_5)."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 5))
    eps = noise_std * rng.standard_normal(n)
    y = x[:, 0] ** 2 + x[:, 1] ** 2 + eps
    true_w = np.zeros((2, 5))
    true_w[0, 0] = 1.0
    true_w[1, 1] = 1.0
    return Dataset(x, y[:, None], name="artificial-a", true_projection=true_w, seed=seed)


def gen_artificial_b(n: int, seed, noise_std: float = 0.25) -> Dataset:
    """One relevant coordinate: y = x2 + x2^2 + x2^3 + noise, x ~ N(0, I_5)."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 5))
    eps = noise_std * rng.standard_normal(n)
    t = x[:, 1]
    y = t + t**2 + t**3 + eps
    true_w = np.zeros((1, 5))
    true_w[0, 1] = 1.0
    return Dataset(x, y[:, None], name="artificial-b", true_projection=true_w, seed=seed)


ILLUSTRATION_FAMILIES = ("bimodal", "heteroscedastic")


def gen_illustration(n: int, seed, family: str) -> Dataset:
    """1-D conditional shapes on x1 plus four pure-noise input coordinates.

    bimodal:        y = 0.8 * sign(u) * (1 + 0.2 * x1) + 0.3 * g
    heteroscedastic: y = sin(2 * x1) + (0.1 + 0.4 * |x1|) * g

    with u ~ Uniform(-1, 1), g ~ N(0, 1), and x ~ N(0, I_5).
    """
    if family not in ILLUSTRATION_FAMILIES:
        raise ValidationError(f"unknown family {family!r}; choose from {ILLUSTRATION_FAMILIES}")
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 5))
    g = rng.standard_normal(n)
    x1 = x[:, 0]
    if family == "bimodal":
        u = rng.uniform(-1.0, 1.0, size=n)
        y = 0.8 * np.sign(u) * (1.0 + 0.2 * x1) + 0.3 * g
    else:
        y = np.sin(2.0 * x1) + (0.1 + 0.4 * np.abs(x1)) * g
    true_w = np.zeros((1, 5))
    true_w[0, 0] = 1.0
    return Dataset(
        x, y[:, None], name=f"illustration-{family}", true_projection=true_w, seed=seed
    )


GENERATORS = {
    "artificial-a": gen_artificial_a,
    "artificial-b": gen_artificial_b,
}


def csv_header(d_x: int, d_y: int) -> list[str]:
    return [f"x{j + 1}" for j in range(d_x)] + [f"y{j + 1}" for j in range(d_y)]


def save_csv(dataset: Dataset, path) -> None:
    """Write a dataset in the interchange format with round-trip-exact floats."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_header(dataset.d_x, dataset.d_y))
        for xi, yi in zip(dataset.x, dataset.y):
            writer.writerow([repr(float(v)) for v in xi] + [repr(float(v)) for v in yi])


def load_csv(path, d_x: int | None = None, d_y: int | None = None, name: str = "") -> Dataset:
    """Load a dataset CSV; dimensions are inferred from the header if omitted."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        n_cols = len(header)
        if d_x is None or d_y is None:
            n_x = sum(1 for c in header if c.strip().startswith("x"))
            n_y = n_cols - n_x
            d_x = n_x if d_x is None else d_x
            d_y = n_y if d_y is None else d_y
        if d_x < 1 or d_y < 1:
            raise DataError(f"{path}: could not infer column split from header {header}")
        if n_cols != d_x + d_y:
            raise DataError(
                f"{path}: expected {d_x + d_y} columns (d_x={d_x}, d_y={d_y}), found {n_cols}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n_cols:
                raise DataError(f"{path}:{lineno}: expected {n_cols} fields, found {len(row)}")
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            for j, v in enumerate(vals):
                if not np.isfinite(v):
                    raise DataError(f"{path}:{lineno}: non-finite value in column {header[j]}")
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=float)
    return Dataset(arr[:, :d_x], arr[:, d_x:], name=name or str(path))


def split(dataset: Dataset, n_train: int, seed) -> tuple[Dataset, Dataset]:
    """Seeded permutation split into disjoint train/test parts."""
    if not 0 < n_train < dataset.n:
        raise ValidationError(f"n_train must be in (0, {dataset.n}), got {n_train}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(dataset.n)
    tr, te = perm[:n_train], perm[n_train:]
    train = replace(dataset, x=dataset.x[tr], y=dataset.y[tr], name=dataset.name + "/train")
    test = replace(dataset, x=dataset.x[te], y=dataset.y[te], name=dataset.name + "/test")
    return train, test
