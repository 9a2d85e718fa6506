"""Grassmann-manifold primitives for row-orthonormal projection matrices.

A projection is a ``d_z x d_x`` ndarray ``W`` with orthonormal rows
(``W @ W.T == I`` within 1e-10). Two projections represent the same
manifold point when their rows span the same subspace, so consumers
compare subspaces through ``W.T @ W``, never through ``W`` itself.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .errors import ValidationError

ORTHONORMAL_TOL = 1e-8


def row_gram_deviation(W: np.ndarray) -> float:
    """Frobenius distance of ``W @ W.T`` from the identity."""
    W = np.asarray(W, dtype=float)
    d_z = W.shape[0]
    return float(np.linalg.norm(W @ W.T - np.eye(d_z)))


def validate_projection(W: np.ndarray, tol: float = ORTHONORMAL_TOL) -> np.ndarray:
    """Check that ``W`` is a valid row-orthonormal projection matrix."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2:
        raise ValidationError(f"projection must be a matrix, got ndim={W.ndim}")
    d_z, d_x = W.shape
    if not 1 <= d_z <= d_x:
        raise ValidationError(f"projection needs 1 <= d_z <= d_x, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise ValidationError("projection contains non-finite entries")
    dev = row_gram_deviation(W)
    if dev > tol:
        raise ValidationError(f"rows are not orthonormal (gram deviation {dev:.3e} > {tol:g})")
    return W


def orthonormalize_rows(M: np.ndarray) -> np.ndarray:
    """Return a matrix with orthonormal rows spanning the row space of ``M``."""
    M = np.asarray(M, dtype=float)
    q, _ = np.linalg.qr(M.T)
    return np.ascontiguousarray(q[:, : M.shape[0]].T)


def complete_basis(W: np.ndarray) -> np.ndarray:
    """Orthonormal completion: rows spanning the orthogonal complement of ``W``.

    The returned ``(d_x - d_z) x d_x`` matrix ``Wp`` satisfies
    ``Wp @ Wp.T == I`` and ``W @ Wp.T == 0``, so stacking ``[W; Wp]``
    yields a full orthogonal matrix. Empty (0 x d_x) when d_z == d_x.
    """
    W = validate_projection(W)
    d_z, d_x = W.shape
    if d_z == d_x:
        return np.empty((0, d_x))
    q, _ = np.linalg.qr(W.T, mode="complete")
    Wp = q[:, d_z:].T
    # QR may flip the orientation of the complement; only orthogonality matters.
    return np.ascontiguousarray(Wp)


def natural_gradient(G: np.ndarray, W: np.ndarray, Wperp: np.ndarray) -> np.ndarray:
    """Project an ambient gradient onto the tangent space at ``W``.

    Returns ``G @ Wperp.T @ Wperp``, which removes the components of the
    gradient rows lying inside the row space of ``W``. Equals
    ``G @ (I - W.T @ W)`` for an exact completion.
    """
    G = np.asarray(G, dtype=float)
    W = np.asarray(W, dtype=float)
    Wperp = np.asarray(Wperp, dtype=float)
    if G.shape != W.shape:
        raise ValidationError(f"gradient shape {G.shape} != projection shape {W.shape}")
    if Wperp.shape != (W.shape[1] - W.shape[0], W.shape[1]):
        raise ValidationError(f"completion shape {Wperp.shape} inconsistent with {W.shape}")
    return (G @ Wperp.T) @ Wperp


def skew_block_exponential(
    G: np.ndarray, W: np.ndarray, Wperp: np.ndarray, t: float
) -> np.ndarray:
    """Matrix exponential ``exp(-t * A)`` of the skew block built from ``G``.

    ``A = [[0, G @ Wperp.T], [-(G @ Wperp.T).T, 0]]`` is skew-symmetric,
    so the result is orthogonal for every finite ``t``.
    """
    G = np.asarray(G, dtype=float)
    t = float(t)
    if not np.isfinite(t) or not np.all(np.isfinite(G)):
        raise ValidationError("non-finite step or gradient")
    d_z, d_x = W.shape
    B = G @ np.asarray(Wperp, dtype=float).T
    A = np.zeros((d_x, d_x))
    A[:d_z, d_z:] = B
    A[d_z:, :d_z] = -B.T
    return expm(-t * A)


def geodesic_point(
    W: np.ndarray, Wperp: np.ndarray, G: np.ndarray, t: float
) -> np.ndarray:
    """Point reached after time ``t`` along the descent geodesic from ``W``.

    ``W_t = [I, 0] @ exp(-t A) @ [W; Wp]``; the tangent at ``t = 0`` is the
    negative of :func:`natural_gradient`, so increasing ``t`` descends.
    ``W_0 == W`` exactly and every ``W_t`` is row-orthonormal.
    """
    E = skew_block_exponential(G, W, Wperp, t)
    d_z = W.shape[0]
    stacked = np.vstack([W, Wperp])
    return E[:d_z, :] @ stacked


def random_orthonormal(d_z: int, d_x: int, seed) -> np.ndarray:
    """Seeded random projection: orthonormalized standard-normal rows."""
    if not 1 <= d_z <= d_x:
        raise ValidationError(f"need 1 <= d_z <= d_x, got d_z={d_z}, d_x={d_x}")
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((d_z, d_x))
    return orthonormalize_rows(M)
