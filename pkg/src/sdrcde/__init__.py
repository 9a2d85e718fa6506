"""Joint sufficient dimension reduction and conditional density estimation.

The estimator searches for a low-dimensional projection of the inputs that
preserves everything the inputs say about the outputs, while simultaneously
fitting a Gaussian-basis least-squares model of the conditional density in
that subspace. A neighborhood-KDE baseline, error metrics, and a benchmark
harness round out the toolkit.
"""

from .basis import (
    BasisSpec,
    StandardizationStats,
    apply_standardizer,
    eval_basis,
    eval_normalizer,
    eval_output_gram,
    fit_standardizer,
    invert_standardizer,
    select_centers,
)
from .data import (
    Dataset,
    gen_artificial_a,
    gen_artificial_b,
    gen_illustration,
    load_csv,
    save_csv,
    split,
)
from .ekde import EkdeModel, default_epsilon_grid, fit_ekde
from .errors import (
    DataError,
    DegenerateDensityError,
    OptimizerStalledError,
    SolverError,
    ValidationError,
)
from .evaluation import (
    BenchmarkPlan,
    BenchmarkRecord,
    CdeError,
    aggregate_records,
    error_cde,
    error_dr,
    run_benchmark,
    sce_monotonicity_check,
)
from .gradient import compute_beta, grad_sce, gradient_workspace
from .lscde import (
    CdeModel,
    SystemMatrices,
    assemble_system,
    build_model,
    sce_score,
    solve_alpha,
)
from .manifold import (
    complete_basis,
    geodesic_point,
    natural_gradient,
    random_orthonormal,
    skew_block_exponential,
)
from .optimizer import (
    FitReport,
    OptimizerConfig,
    fit_fixed_projection,
    optimize_projection,
)
from .selection import ModelGrid, cv_score, make_folds, select_dimension, select_model

__version__ = "0.1.0"

__all__ = [
    "BasisSpec",
    "BenchmarkPlan",
    "BenchmarkRecord",
    "CdeError",
    "CdeModel",
    "DataError",
    "Dataset",
    "DegenerateDensityError",
    "EkdeModel",
    "FitReport",
    "ModelGrid",
    "OptimizerConfig",
    "OptimizerStalledError",
    "SolverError",
    "StandardizationStats",
    "SystemMatrices",
    "ValidationError",
    "aggregate_records",
    "apply_standardizer",
    "assemble_system",
    "build_model",
    "complete_basis",
    "compute_beta",
    "cv_score",
    "default_epsilon_grid",
    "error_cde",
    "error_dr",
    "eval_basis",
    "eval_normalizer",
    "eval_output_gram",
    "fit_ekde",
    "fit_fixed_projection",
    "fit_standardizer",
    "gen_artificial_a",
    "gen_artificial_b",
    "gen_illustration",
    "geodesic_point",
    "grad_sce",
    "gradient_workspace",
    "invert_standardizer",
    "load_csv",
    "make_folds",
    "natural_gradient",
    "optimize_projection",
    "random_orthonormal",
    "run_benchmark",
    "save_csv",
    "sce_monotonicity_check",
    "sce_score",
    "select_centers",
    "select_dimension",
    "select_model",
    "skew_block_exponential",
    "solve_alpha",
    "split",
]
