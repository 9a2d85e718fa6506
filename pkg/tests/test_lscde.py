import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import quad

from sdrcde.basis import (
    BasisSpec,
    StandardizationStats,
    apply_standardizer,
    eval_basis,
    eval_output_gram,
    fit_standardizer,
    select_centers,
)
from sdrcde.data import Dataset, gen_artificial_b
from sdrcde.errors import DegenerateDensityError, SolverError, ValidationError
from sdrcde.lscde import (
    CdeModel,
    SystemMatrices,
    assemble_system,
    build_model,
    sce_score,
    solve_alpha,
)
from sdrcde.manifold import random_orthonormal


def random_problem(seed, n=20, b=5, d_x=4, d_z=2, d_y=1, sigma=0.9):
    rng = np.random.default_rng(seed)
    ds = Dataset(rng.standard_normal((n, d_x)), rng.standard_normal((n, d_y)))
    basis = select_centers(ds, b, seed=seed).with_sigma(sigma)
    W = random_orthonormal(d_z, d_x, seed)
    return ds, basis, W


class TestAssembleSystem:
    def test_single_sample_at_center(self):
        sigma = 0.7
        x = np.array([[0.3, -0.2]])
        y = np.array([[1.5]])
        ds = Dataset(x, y)
        basis = BasisSpec(center_x=x.copy(), center_y=y.copy(), sigma=sigma)
        W = random_orthonormal(1, 2, 0)
        sys = assemble_system(ds, basis, W)
        assert abs(sys.basis_mean[0] - 1.0) < 1e-15
        assert abs(sys.gram[0, 0] - math.sqrt(math.pi) * sigma) < 1e-14

    def test_duplicated_dataset_invariant(self):
        ds, basis, W = random_problem(0)
        doubled = Dataset(np.vstack([ds.x, ds.x]), np.vstack([ds.y, ds.y]))
        a = assemble_system(ds, basis, W)
        b = assemble_system(doubled, basis, W)
        assert np.allclose(a.gram, b.gram, atol=1e-14)
        assert np.allclose(a.basis_mean, b.basis_mean, atol=1e-14)

    @pytest.mark.parametrize("seed", range(4))
    def test_naive_double_loop_oracle(self, seed):
        ds, basis, W = random_problem(seed, n=20, b=5)
        sys = assemble_system(ds, basis, W)
        gram = np.zeros((5, 5))
        mean = np.zeros(5)
        for i in range(ds.n):
            z = W @ ds.x[i]
            gram += eval_output_gram(z, basis, W)
            mean += eval_basis(z, ds.y[i], basis, W)
        gram /= ds.n
        mean /= ds.n
        assert np.abs(sys.gram - gram).max() < 1e-12
        assert np.abs(sys.basis_mean - mean).max() < 1e-12

    def test_gram_psd_and_mean_nonneg(self):
        ds, basis, W = random_problem(5, n=40, b=8)
        sys = assemble_system(ds, basis, W)
        assert np.linalg.norm(sys.gram - sys.gram.T) < 1e-12
        assert np.linalg.eigvalsh(sys.gram).min() > -1e-10
        assert np.all(sys.basis_mean >= 0)

    def test_empty_dataset_rejected(self):
        ds, basis, W = random_problem(0)
        empty = Dataset(np.zeros((0, 4)), np.zeros((0, 1)))
        with pytest.raises(ValidationError):
            assemble_system(empty, basis, W)

    def test_noise_coordinate_invariance(self):
        # Appending a pure-noise input column and a zero projection column
        # leaves the projected problem untouched.
        ds, basis, W = random_problem(7, n=25, b=6, d_x=4, d_z=2)
        rng = np.random.default_rng(99)
        noise = rng.standard_normal((ds.n, 1))
        ds_ext = Dataset(np.hstack([ds.x, noise]), ds.y)
        basis_ext = BasisSpec(
            center_x=ds_ext.x[basis.indices],
            center_y=basis.center_y,
            sigma=basis.sigma,
            indices=basis.indices,
        )
        W_ext = np.hstack([W, np.zeros((2, 1))])
        a = assemble_system(ds, basis, W)
        b = assemble_system(ds_ext, basis_ext, W_ext)
        assert np.array_equal(a.gram, b.gram)
        assert np.array_equal(a.basis_mean, b.basis_mean)
        alpha = solve_alpha(a, 0.1)
        assert sce_score(a, alpha) == sce_score(b, solve_alpha(b, 0.1))


class TestSolveAlpha:
    def test_identity_gram(self):
        h = np.array([0.3, 0.1, 0.7])
        sys = SystemMatrices(gram=np.eye(3), basis_mean=h, n=10)
        assert np.allclose(solve_alpha(sys, 0.0), h, atol=1e-14)

    def test_huge_regularizer_shrinks(self):
        ds, basis, W = random_problem(1)
        sys = assemble_system(ds, basis, W)
        alpha = solve_alpha(sys, 1e12)
        assert np.linalg.norm(alpha) < 1e-5 * np.linalg.norm(sys.basis_mean)

    @pytest.mark.parametrize("seed", range(4))
    def test_residual(self, seed):
        ds, basis, W = random_problem(seed, n=30, b=8)
        sys = assemble_system(ds, basis, W)
        lam = 0.1
        alpha = solve_alpha(sys, lam)
        resid = (sys.gram + lam * np.eye(8)) @ alpha - sys.basis_mean
        assert np.abs(resid).max() < 1e-8

    def test_singular_system_raises(self):
        sys = SystemMatrices(gram=np.ones((2, 2)), basis_mean=np.ones(2), n=4)
        with pytest.raises(SolverError):
            solve_alpha(sys, 0.0)

    def test_negative_lambda_rejected(self):
        sys = SystemMatrices(gram=np.eye(2), basis_mean=np.ones(2), n=4)
        with pytest.raises(ValidationError):
            solve_alpha(sys, -1.0)


class TestSceScore:
    def test_zero_weights(self):
        sys = SystemMatrices(gram=np.eye(3), basis_mean=np.ones(3), n=5)
        assert sce_score(sys, np.zeros(3)) == 0.0

    def test_identity_closed_form(self):
        h = np.array([0.4, 0.2])
        sys = SystemMatrices(gram=np.eye(2), basis_mean=h, n=5)
        alpha = solve_alpha(sys, 0.0)
        assert abs(sce_score(sys, alpha) + 0.5 * h @ h) < 1e-14

    def test_termwise_recomputation(self):
        ds, basis, W = random_problem(3)
        sys = assemble_system(ds, basis, W)
        alpha = solve_alpha(sys, 0.05)
        direct = 0.0
        for k in range(len(alpha)):
            direct -= sys.basis_mean[k] * alpha[k]
            for kp in range(len(alpha)):
                direct += 0.5 * alpha[k] * sys.gram[k, kp] * alpha[kp]
        assert abs(sce_score(sys, alpha) - direct) < 1e-12

    def test_two_evaluation_paths_at_lambda_zero(self):
        ds, basis, W = random_problem(4, n=40, b=6)
        sys = assemble_system(ds, basis, W)
        alpha = solve_alpha(sys, 0.0)
        direct = -0.5 * sys.basis_mean @ np.linalg.solve(sys.gram, sys.basis_mean)
        assert abs(sce_score(sys, alpha) - direct) < 1e-10

    def test_monotone_in_lambda(self):
        ds, basis, W = random_problem(6, n=50, b=8)
        sys = assemble_system(ds, basis, W)
        lams = [0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0]
        scores = [sce_score(sys, solve_alpha(sys, lam)) for lam in lams]
        assert all(s2 >= s1 - 1e-14 for s1, s2 in zip(scores, scores[1:]))


def single_kernel_model(sigma=0.8, y_scale=2.0, y_mean=1.0, weight=2.0):
    stats = StandardizationStats(
        x_mean=np.zeros(2), x_scale=np.ones(2),
        y_mean=np.array([y_mean]), y_scale=np.array([y_scale]),
        degenerate_x=np.zeros(2, dtype=bool), degenerate_y=np.zeros(1, dtype=bool),
    )
    basis = BasisSpec(center_x=np.zeros((1, 2)), center_y=np.array([[0.5]]), sigma=sigma)
    return CdeModel(
        projection=random_orthonormal(1, 2, 0),
        basis=basis,
        lam=0.0,
        alpha=np.array([weight]),
        alpha_nonneg=np.array([weight]),
        stats=stats,
        sce=0.0,
    )


class TestConditionalDensity:
    def test_single_kernel_is_gaussian_in_raw_units(self):
        model = single_kernel_model()
        x = np.array([0.2, -0.4])
        mu_raw = 0.5 * 2.0 + 1.0
        sd_raw = model.basis.sigma * 2.0
        for y in (-1.0, 1.0, 2.3):
            dens = model.conditional_density(x, np.array([y]))
            expected = math.exp(-((y - mu_raw) ** 2) / (2 * sd_raw**2)) / (
                math.sqrt(2 * math.pi) * sd_raw
            )
            assert abs(dens - expected) < 1e-12
        total, _ = quad(
            lambda yv: model.conditional_density(x, np.array([yv])), -20.0, 25.0
        )
        assert abs(total - 1.0) < 1e-6

    def test_zero_weights_degenerate(self):
        model = single_kernel_model(weight=0.0)
        with pytest.raises(DegenerateDensityError):
            model.conditional_density(np.zeros(2), np.zeros(1))

    def test_far_query_degenerate(self):
        model = single_kernel_model()
        with pytest.raises(DegenerateDensityError):
            model.conditional_density(np.array([1e4, 0.0]), np.zeros(1))

    def test_fitted_model_normalizes(self):
        ds = gen_artificial_b(150, seed=0)
        stats = fit_standardizer(ds)
        std = apply_standardizer(stats, ds)
        basis = select_centers(std, 40, seed=1).with_sigma(0.6)
        W = ds.true_projection
        model = build_model(std, basis, W, 0.01, stats)
        rng = np.random.default_rng(3)
        grid = np.linspace(-10.0, 10.0, 4001)
        for _ in range(5):
            x_std = std.x[rng.integers(0, std.n)]
            vals = model.conditional_density_std(
                np.tile(x_std, (grid.size, 1)), grid[:, None]
            )
            mass = np.trapezoid(vals, grid)
            assert abs(mass - 1.0) < 1e-3

    def test_scale_invariance_of_weights(self):
        model = single_kernel_model()
        ds, basis, W = random_problem(9, n=30, b=6, d_x=2, d_z=1)
        stats = StandardizationStats.identity(2, 1)
        fitted = build_model(ds, basis, W, 0.05, stats)
        doubled = replace(
            fitted, alpha=2 * fitted.alpha, alpha_nonneg=2 * fitted.alpha_nonneg
        )
        x = np.array([0.1, 0.2])
        y = np.array([0.3])
        assert fitted.conditional_density(x, y) == doubled.conditional_density(x, y)
        assert fitted.density_l2(x) == doubled.density_l2(x)


class TestDensityL2:
    def test_single_kernel_closed_form(self):
        model = single_kernel_model()
        sd_raw = model.basis.sigma * 2.0
        val = model.density_l2(np.array([0.4, 0.1]))
        assert abs(val - 1.0 / (2 * math.sqrt(math.pi) * sd_raw)) < 1e-12

    @pytest.mark.parametrize("seed", range(3))
    def test_quadrature_oracle(self, seed):
        ds = gen_artificial_b(120, seed=seed)
        stats = fit_standardizer(ds)
        std = apply_standardizer(stats, ds)
        basis = select_centers(std, 30, seed=seed).with_sigma(0.7)
        model = build_model(std, basis, ds.true_projection, 0.05, stats)
        x_std = std.x[seed]
        grid = np.linspace(-12.0, 12.0, 6001)
        vals = model.conditional_density_std(np.tile(x_std, (grid.size, 1)), grid[:, None])
        direct = np.trapezoid(vals**2, grid)
        reported = model.density_l2_std(np.atleast_2d(x_std))[0]
        assert abs(reported - direct) <= 1e-4 * abs(direct)
