import math

import numpy as np
import pytest
from scipy.integrate import quad

from sdrcde.basis import (
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
from sdrcde.data import Dataset
from sdrcde.errors import ValidationError
from sdrcde.manifold import random_orthonormal


def random_basis(rng, b=3, d_x=4, d_y=1, sigma=0.8):
    return BasisSpec(
        center_x=rng.standard_normal((b, d_x)),
        center_y=rng.standard_normal((b, d_y)),
        sigma=sigma,
    )


class TestStandardizer:
    def test_constant_column_flagged(self):
        x = np.column_stack([np.full(10, 3.0), np.arange(10.0)])
        y = np.arange(10.0)[:, None]
        ds = Dataset(x, y)
        with pytest.warns(UserWarning):
            stats = fit_standardizer(ds)
        assert stats.degenerate_x[0] and not stats.degenerate_x[1]
        assert stats.x_scale[0] == 1.0
        out = apply_standardizer(stats, ds)
        assert np.allclose(out.x[:, 0], 0.0)

    def test_already_standard_column_unchanged(self):
        x = np.array([[-1.0], [1.0]])
        y = np.array([[-1.0], [1.0]])
        ds = Dataset(x, y)
        out = apply_standardizer(fit_standardizer(ds), ds)
        assert np.linalg.norm(out.x - x) < 1e-12
        assert np.linalg.norm(out.y - y) < 1e-12

    @pytest.mark.parametrize("seed", range(3))
    def test_transformed_moments(self, seed):
        rng = np.random.default_rng(seed)
        ds = Dataset(rng.standard_normal((100, 3)) * 5 + 2, rng.standard_normal((100, 2)))
        out = apply_standardizer(fit_standardizer(ds), ds)
        assert np.all(np.abs(out.x.mean(axis=0)) < 1e-12)
        assert np.all(np.abs(out.x.var(axis=0) - 1.0) < 1e-10)
        assert np.all(np.abs(out.y.var(axis=0) - 1.0) < 1e-10)

    def test_round_trip(self):
        rng = np.random.default_rng(1)
        ds = Dataset(rng.standard_normal((30, 2)) * 3 + 1, rng.standard_normal((30, 1)) - 4)
        stats = fit_standardizer(ds)
        back = invert_standardizer(stats, apply_standardizer(stats, ds))
        assert np.linalg.norm(back.x - ds.x) < 1e-12
        assert np.linalg.norm(back.y - ds.y) < 1e-12

    def test_needs_two_samples(self):
        with pytest.raises(ValidationError):
            fit_standardizer(Dataset(np.ones((1, 2)), np.ones((1, 1))))


class TestSelectCenters:
    def _ds(self, n, seed=0):
        rng = np.random.default_rng(seed)
        return Dataset(rng.standard_normal((n, 3)), rng.standard_normal((n, 1)))

    def test_cap_inactive(self):
        ds = self._ds(50)
        spec = select_centers(ds, 100, seed=0)
        assert spec.b == 50

    def test_deterministic(self):
        ds = self._ds(500)
        a = select_centers(ds, 100, seed=9)
        b = select_centers(ds, 100, seed=9)
        assert np.array_equal(a.indices, b.indices)

    def test_indices_distinct_in_range(self):
        ds = self._ds(500)
        spec = select_centers(ds, 100, seed=1)
        assert spec.b == 100
        assert len(np.unique(spec.indices)) == 100
        assert spec.indices.min() >= 0 and spec.indices.max() < 500
        assert np.array_equal(spec.center_x, ds.x[spec.indices])

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValidationError):
            select_centers(Dataset(np.zeros((0, 2)), np.zeros((0, 1))), 10, seed=0)


class TestEvalBasis:
    def test_unit_at_center(self):
        rng = np.random.default_rng(0)
        basis = random_basis(rng, d_x=4, d_y=1)
        W = random_orthonormal(2, 4, 0)
        z = basis.center_x[1] @ W.T
        y = basis.center_y[1]
        vals = eval_basis(z, y, basis, W)
        assert abs(vals[1] - 1.0) < 1e-15

    def test_unit_exponent(self):
        basis = BasisSpec(center_x=np.zeros((1, 2)), center_y=np.zeros((1, 1)), sigma=0.7)
        W = np.eye(2)
        # distance split so that total squared distance equals 2 sigma^2
        z = np.array([basis.sigma * math.sqrt(2.0), 0.0])
        y = np.zeros(1)
        vals = eval_basis(z, y, basis, W)
        assert abs(vals[0] - math.exp(-1.0)) < 1e-14

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_direct_formula(self, seed):
        rng = np.random.default_rng(seed)
        basis = random_basis(rng, b=4, d_x=5, d_y=2)
        W = random_orthonormal(2, 5, seed)
        z = rng.standard_normal(2)
        y = rng.standard_normal(2)
        vals = eval_basis(z, y, basis, W)
        for k in range(basis.b):
            u = W @ basis.center_x[k]
            expo = ((z - u) ** 2).sum() + ((y - basis.center_y[k]) ** 2).sum()
            assert abs(vals[k] - math.exp(-expo / (2 * basis.sigma**2))) < 1e-14

    def test_monotone_in_distance(self):
        rng = np.random.default_rng(2)
        basis = random_basis(rng, b=5, d_x=3, d_y=1)
        W = random_orthonormal(2, 3, 2)
        y = rng.standard_normal(1)
        # walk straight away beyond all centers: every value must shrink
        far = np.full(2, 6.0)
        farther = np.full(2, 7.0)
        v1 = eval_basis(far, y, basis, W)
        v2 = eval_basis(farther, y, basis, W)
        assert np.all(v2 < v1)

    def test_sigma_required(self):
        basis = BasisSpec(center_x=np.zeros((1, 2)), center_y=np.zeros((1, 1)))
        with pytest.raises(ValidationError):
            eval_basis(np.zeros(2), np.zeros(1), basis, np.eye(2))


class TestEvalOutputGram:
    def test_all_distances_zero(self):
        sigma = 1.3
        basis = BasisSpec(center_x=np.zeros((2, 3)), center_y=np.zeros((2, 1)), sigma=sigma)
        W = random_orthonormal(1, 3, 0)
        G = eval_output_gram(np.zeros(1), basis, W)
        assert np.allclose(G, math.sqrt(math.pi) * sigma, atol=1e-14)

    @pytest.mark.parametrize("seed", range(3))
    def test_symmetric(self, seed):
        rng = np.random.default_rng(seed)
        basis = random_basis(rng, b=5, d_x=4, d_y=2)
        W = random_orthonormal(2, 4, seed)
        G = eval_output_gram(rng.standard_normal(2), basis, W)
        assert np.linalg.norm(G - G.T) < 1e-14

    @pytest.mark.parametrize("seed", range(4))
    def test_quadrature_oracle_1d(self, seed):
        rng = np.random.default_rng(100 + seed)
        basis = random_basis(rng, b=3, d_x=3, d_y=1, sigma=0.6 + 0.3 * seed)
        W = random_orthonormal(2, 3, seed)
        z = rng.standard_normal(2)
        G = eval_output_gram(z, basis, W)
        u = basis.center_x @ W.T
        dz2 = ((z - u) ** 2).sum(axis=1)
        lo = basis.center_y.min() - 10 * basis.sigma
        hi = basis.center_y.max() + 10 * basis.sigma
        for k in range(3):
            for kp in range(3):
                def integrand(yv, k=k, kp=kp):
                    s2 = 2 * basis.sigma**2
                    fk = math.exp(-(dz2[k] + (yv - basis.center_y[k, 0]) ** 2) / s2)
                    fkp = math.exp(-(dz2[kp] + (yv - basis.center_y[kp, 0]) ** 2) / s2)
                    return fk * fkp

                val, _ = quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-11)


                assert abs(G[k, kp] - val) <= 1e-6 * abs(val)

    @pytest.mark.parametrize("seed", range(5))
    def test_positive_semidefinite(self, seed):
        rng = np.random.default_rng(seed)
        basis = random_basis(rng, b=6, d_x=4, d_y=2)
        W = random_orthonormal(3, 4, seed)
        G = eval_output_gram(rng.standard_normal(3), basis, W)
        for _ in range(10):
            v = rng.standard_normal(6)
            assert v @ G @ v >= -1e-12

    def test_diagonal_closed_form(self):
        rng = np.random.default_rng(8)
        basis = random_basis(rng, b=4, d_x=3, d_y=2, sigma=1.1)
        W = random_orthonormal(2, 3, 8)
        z = rng.standard_normal(2)
        G = eval_output_gram(z, basis, W)
        u = basis.center_x @ W.T
        for k in range(4):
            expected = (math.sqrt(math.pi) * basis.sigma) ** 2 * math.exp(
                -((z - u[k]) ** 2).sum() / basis.sigma**2
            )
            assert abs(G[k, k] - expected) < 1e-14


class TestEvalNormalizer:
    def test_zero_weights(self):
        rng = np.random.default_rng(0)
        basis = random_basis(rng)
        W = random_orthonormal(2, 4, 0)
        assert eval_normalizer(np.zeros(2), np.zeros(3), basis, W) == 0.0

    def test_single_center_at_query(self):
        sigma = 0.9
        basis = BasisSpec(center_x=np.ones((1, 3)), center_y=np.zeros((1, 1)), sigma=sigma)
        W = random_orthonormal(2, 3, 1)
        z = W @ basis.center_x[0]
        val = eval_normalizer(z, np.ones(1), basis, W)
        assert abs(val - math.sqrt(2 * math.pi) * sigma) < 1e-14

    @pytest.mark.parametrize("seed", range(3))
    def test_quadrature_oracle_2d(self, seed):
        rng = np.random.default_rng(200 + seed)
        basis = random_basis(rng, b=3, d_x=3, d_y=2, sigma=0.8)
        W = random_orthonormal(2, 3, seed)
        z = rng.standard_normal(2)
        weights = rng.uniform(0.0, 2.0, size=3)
        val = eval_normalizer(z, weights, basis, W)
        u = basis.center_x @ W.T
        dz2 = ((z - u) ** 2).sum(axis=1)
        # integrate each mixture component over both output coordinates
        total = 0.0
        s2 = 2 * basis.sigma**2
        for k in range(3):
            comp = weights[k] * math.exp(-dz2[k] / s2)
            for j in range(2):
                c = basis.center_y[k, j]
                part, _ = quad(
                    lambda yv: math.exp(-((yv - c) ** 2) / s2),
                    c - 12 * basis.sigma,
                    c + 12 * basis.sigma,
                    epsabs=1e-13,
                )
                comp *= part
            total += comp
        assert abs(val - total) <= 1e-5 * abs(total)

    def test_negative_weight_rejected(self):
        rng = np.random.default_rng(0)
        basis = random_basis(rng)
        W = random_orthonormal(2, 4, 0)
        with pytest.raises(ValidationError):
            eval_normalizer(np.zeros(2), np.array([1.0, -0.1, 0.0]), basis, W)
