"""Exact derivatives of the least-squares objective with respect to the
projection matrix.

Every derivative follows from differentiating the Gaussian kernels through
``z_i = W x_i`` and ``u_k = W cx_k``:

    d gram[k,k'] / d W[l,l'] = -(1 / (sigma^2 n)) * sum_i bargram[k,k'](z_i)
        * ((z_i - u_k)[l] (x_i - cx_k)[l'] + (z_i - u_k')[l] (x_i - cx_k')[l'])

    d mean[k] / d W[l,l']   = -(1 / (sigma^2 n)) * sum_i basis_k(z_i, y_i)
        * (z_i - u_k)[l] (x_i - cx_k)[l']

and the objective gradient contracts these with the ridge solution ``alpha``
and the smoothed vector ``beta = (gram + lam I)^{-1} gram alpha``:

    d objective / d W = alpha' (d gram) (1.5 alpha - beta) + (d mean)' (beta - 2 alpha).

These are derivatives of the unconstrained function of ``W``; manifold
structure is applied afterwards by projecting onto the tangent space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .basis import BasisSpec, center_output_sq_dists, input_sq_dists, output_sq_dists
from .data import Dataset
from .errors import SolverError, ValidationError
from .lscde import SystemMatrices, sce_score, solve_alpha


@dataclass(frozen=True)
class GradientWorkspace:
    """All per-sample quantities needed by the derivative formulas.

    Built once per ``(W, sigma, lam)`` state so every consumer sees a
    consistent snapshot. ``kz``/``ky`` are the input/output Gaussian factors,
    ``kv`` the center-output kernel, ``phi`` the joint basis values.
    """

    X: np.ndarray
    Z: np.ndarray
    U: np.ndarray
    center_x: np.ndarray
    kz: np.ndarray
    kv: np.ndarray
    phi: np.ndarray
    sigma: float
    lam: float
    d_y: int
    sys: SystemMatrices
    alpha: np.ndarray
    beta: np.ndarray

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def b(self) -> int:
        return self.center_x.shape[0]

    @property
    def sce(self) -> float:
        return sce_score(self.sys, self.alpha)


def compute_beta(sys: SystemMatrices, alpha: np.ndarray, lam: float) -> np.ndarray:
    """Smoothed coefficient vector ``(gram + lam I)^{-1} gram alpha``."""
    if lam < 0:
        raise ValidationError(f"regularizer must be >= 0, got {lam}")
    b = sys.gram.shape[0]
    try:
        c, low = cho_factor(sys.gram + lam * np.eye(b), lower=True)
    except LinAlgError as exc:
        raise SolverError(f"system is singular or indefinite at lam={lam:g}: {exc}") from exc
    return cho_solve((c, low), sys.gram @ np.asarray(alpha, dtype=float).ravel())


def gradient_workspace(
    dataset_std: Dataset, basis: BasisSpec, W: np.ndarray, lam: float
) -> GradientWorkspace:
    """Assemble the system and solve for ``alpha``/``beta`` at one state."""
    sigma = basis.sigma
    if sigma is None or sigma <= 0:
        raise ValidationError(f"bandwidth must be positive, got {sigma!r}")
    W = np.asarray(W, dtype=float)
    X = dataset_std.x
    Z = X @ W.T
    U = basis.center_x @ W.T
    n = X.shape[0]
    # Same distance path as assemble_system so objective values match bitwise.
    dzu = input_sq_dists(X, basis, W)
    kz = np.exp(-dzu / (2.0 * sigma**2))
    kv = np.exp(-center_output_sq_dists(basis) / (4.0 * sigma**2))
    const = (math.sqrt(math.pi) * sigma) ** basis.d_y
    gram = (const / n) * (kz.T @ kz) * kv
    gram = 0.5 * (gram + gram.T)
    phi = kz * np.exp(-output_sq_dists(dataset_std.y, basis) / (2.0 * sigma**2))
    sys = SystemMatrices(gram=gram, basis_mean=phi.mean(axis=0), n=n)
    alpha = solve_alpha(sys, lam)
    beta = compute_beta(sys, alpha, lam)
    return GradientWorkspace(
        X=X, Z=Z, U=U, center_x=basis.center_x, kz=kz, kv=kv, phi=phi,
        sigma=float(sigma), lam=float(lam), d_y=basis.d_y, sys=sys,
        alpha=alpha, beta=beta,
    )


def _check_index(name: str, value: int, limit: int) -> None:
    if not 0 <= value < limit:
        raise ValidationError(f"{name}={value} out of range [0, {limit})")


def _bargram_samples(ws: GradientWorkspace, k: int, kp: int) -> np.ndarray:
    const = (math.sqrt(math.pi) * ws.sigma) ** ws.d_y
    return const * ws.kz[:, k] * ws.kz[:, kp] * ws.kv[k, kp]


def grad_gram_entry(ws: GradientWorkspace, k: int, kp: int, l: int, lp: int) -> float:
    """One entry of the gram-matrix derivative tensor."""
    _check_index("k", k, ws.b)
    _check_index("kp", kp, ws.b)
    _check_index("l", l, ws.Z.shape[1])
    _check_index("lp", lp, ws.X.shape[1])
    pb = _bargram_samples(ws, k, kp)
    term = (ws.Z[:, l] - ws.U[k, l]) * (ws.X[:, lp] - ws.center_x[k, lp])
    term = term + (ws.Z[:, l] - ws.U[kp, l]) * (ws.X[:, lp] - ws.center_x[kp, lp])
    return float(-(pb @ term) / (ws.sigma**2 * ws.n))


def grad_mean_entry(ws: GradientWorkspace, k: int, l: int, lp: int) -> float:
    """One entry of the basis-mean derivative tensor."""
    _check_index("k", k, ws.b)
    _check_index("l", l, ws.Z.shape[1])
    _check_index("lp", lp, ws.X.shape[1])
    term = (ws.Z[:, l] - ws.U[k, l]) * (ws.X[:, lp] - ws.center_x[k, lp])
    return float(-(ws.phi[:, k] @ term) / (ws.sigma**2 * ws.n))


def grad_gram_tensor(ws: GradientWorkspace) -> np.ndarray:
    """Full ``(b, b, d_z, d_x)`` derivative tensor of the gram matrix.

    Intended for small instances and tests; the optimizer path contracts
    without materializing this tensor.
    """
    d_z, d_x = ws.Z.shape[1], ws.X.shape[1]
    Dz = ws.Z[:, None, :] - ws.U[None, :, :]
    Dx = ws.X[:, None, :] - ws.center_x[None, :, :]
    const = (math.sqrt(math.pi) * ws.sigma) ** ws.d_y
    out = np.zeros((ws.b, ws.b, d_z, d_x))
    # half[k, kp, l, lp] = sum_i bargram_i[k, kp] * Dz[i, k, l] * Dx[i, k, lp]
    for k in range(ws.b):
        pb = const * ws.kz[:, k][:, None] * ws.kz * ws.kv[k, :][None, :]  # n x b (kp)
        half_k = np.einsum("ij,il,im->jlm", pb, Dz[:, k, :], Dx[:, k, :])
        out[k, :, :, :] += half_k
        out[:, k, :, :] += half_k
    return -out / (ws.sigma**2 * ws.n)


def grad_mean_tensor(ws: GradientWorkspace) -> np.ndarray:
    """Full ``(b, d_z, d_x)`` derivative tensor of the basis mean."""
    Dz = ws.Z[:, None, :] - ws.U[None, :, :]
    Dx = ws.X[:, None, :] - ws.center_x[None, :, :]
    out = np.einsum("ik,ikl,ikm->klm", ws.phi, Dz, Dx)
    return -out / (ws.sigma**2 * ws.n)


def contract_gradient(
    alpha: np.ndarray,
    beta: np.ndarray,
    grad_gram: np.ndarray,
    grad_mean: np.ndarray,
) -> np.ndarray:
    """Objective gradient from explicit derivative tensors."""
    alpha = np.asarray(alpha, dtype=float).ravel()
    beta = np.asarray(beta, dtype=float).ravel()
    c = 1.5 * alpha - beta
    d = beta - 2.0 * alpha
    out = np.einsum("k,kplm,p->lm", alpha, grad_gram, c)
    out += np.einsum("klm,k->lm", grad_mean, d)
    return out


def grad_sce(ws: GradientWorkspace) -> np.ndarray:
    """Objective gradient ``d objective / d W`` without materializing tensors.

    Accumulates per-sample rank-one contributions through four matrix
    products; the reduction order is fixed, so results are deterministic.
    """
    a = ws.alpha
    c = 1.5 * a - ws.beta
    d = ws.beta - 2.0 * a
    const = (math.sqrt(math.pi) * ws.sigma) ** ws.d_y
    # (bargram_i v)_k = const * kz[i,k] * (kz @ (kv * v).T)[i,k]
    Mc = ws.kz @ (ws.kv * c[None, :]).T
    Ma = ws.kz @ (ws.kv * a[None, :]).T
    R = const * ws.kz * (a[None, :] * Mc + c[None, :] * Ma)
    M = R + ws.phi * d[None, :]
    rs = M.sum(axis=1)
    cs = M.sum(axis=0)
    T = (ws.Z * rs[:, None]).T @ ws.X
    T -= ws.Z.T @ (M @ ws.center_x)
    T -= ws.U.T @ (M.T @ ws.X)
    T += (ws.U * cs[:, None]).T @ ws.center_x
    return -T / (ws.sigma**2 * ws.n)
