"""Geometry of the compact Stiefel manifold St(p, n) in the embedded Euclidean metric.

Points are n x p matrices with orthonormal columns. The object API
(:class:`StiefelPoint`, :class:`TangentVector`) validates its inputs; the
``*_array`` kernels operate on stacks of shape ``(..., n, p)`` without
validation and back the integrator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotOrthonormal, RankDeficient, ShapeError

ORTHO_TOL = 1e-10
TANGENT_TOL = 1e-10
# |R_jj| below this (relative to the column scale) means S + tV dropped rank.
RANK_TOL = 1e-12


def sym(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def skew(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A - np.swapaxes(A, -1, -2))


def orthonormality_defect(M: np.ndarray) -> np.ndarray:
    """||M^T M - I||_F over the trailing two axes."""
    p = M.shape[-1]
    G = np.swapaxes(M, -1, -2) @ M
    return np.linalg.norm(G - np.eye(p), axis=(-2, -1))


@dataclass(frozen=True, eq=False)
class StiefelPoint:
    """An n x p matrix with orthonormal columns."""

    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __repr__(self):
        return f"StiefelPoint(n={self.n}, p={self.p})"


@dataclass(frozen=True, eq=False)
class TangentVector:
    """An n x p matrix in the tangent space at ``base``."""

    data: np.ndarray
    base: StiefelPoint

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.shape != self.base.data.shape:
            raise ShapeError(f"tangent shape {data.shape} != base shape {self.base.data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def tangency_defect(self) -> float:
        return float(np.linalg.norm(sym(self.base.data.T @ self.data)))


def _as_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2:
        raise ShapeError(f"expected a 2-d matrix, got shape {M.shape}")
    return M


def validate(M, tol: float = ORTHO_TOL) -> StiefelPoint:
    """Wrap ``M`` as a :class:`StiefelPoint` after checking orthonormality.

    A 1-d input is read as a single column.
    """
    M = _as_matrix(M)
    n, p = M.shape
    if p > n or p < 1:
        raise ShapeError(f"need 1 <= p <= n, got n={n}, p={p}")
    deviation = float(orthonormality_defect(M))
    if not deviation <= tol:
        raise NotOrthonormal(deviation, tol)
    return StiefelPoint(M)


def project_array(X: np.ndarray, S: np.ndarray) -> np.ndarray:
    """S skew(S^T X) + (I - S S^T) X, batched over leading axes."""
    StX = np.swapaxes(S, -1, -2) @ X
    return X - S @ sym(StX)


def tangent_project(X, S: StiefelPoint) -> TangentVector:
    """Orthogonal projection of the ambient matrix ``X`` onto the tangent space at ``S``."""
    X = _as_matrix(X)
    if X.shape != S.data.shape:
        raise ShapeError(f"cannot project {X.shape} onto tangent space at {S.data.shape}")
    return TangentVector(project_array(X, S.data), S)


def qr_retract_array(Y: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Q factor of the thin QR of each matrix in ``Y`` with diag(R) >= 0."""
    if not np.all(np.isfinite(Y)):
        raise RankDeficient("non-finite state before retraction; reduce the step size")
    if Y.shape[-1] == 1:
        norms = np.linalg.norm(Y, axis=-2, keepdims=True)
        if np.any(norms <= rank_tol):
            raise RankDeficient("column collapsed to zero during retraction; reduce the step size")
        return Y / norms
    Q, R = np.linalg.qr(Y)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    scale = np.linalg.norm(Y, axis=-2)
    if np.any(np.abs(d) <= rank_tol * np.maximum(scale, 1.0)):
        raise RankDeficient("S + tV lost full column rank during retraction; reduce the step size")
    signs = np.where(d < 0, -1.0, 1.0)
    return Q * signs[..., None, :]


def retract(S: StiefelPoint, V: TangentVector, t: float) -> StiefelPoint:
    """QR retraction: Q factor of S + t V, sign-fixed so that R has a nonnegative diagonal."""
    if V.base is not S and not np.array_equal(V.base.data, S.data):
        raise ValueError("tangent vector is not based at S")
    if t == 0:
        return S
    return StiefelPoint(qr_retract_array(S.data + t * V.data))


def haar_array(rng: np.random.Generator, n: int, p: int, size: tuple[int, ...] = ()) -> np.ndarray:
    """Stack of Haar-distributed Stiefel matrices of shape ``size + (n, p)``."""
    G = rng.standard_normal(size + (n, p))
    return qr_retract_array(G)


def haar_sample(n: int, p: int, rng: np.random.Generator) -> StiefelPoint:
    """Uniform (Haar) sample from St(p, n) by Gaussian QR with sign fix."""
    if not 1 <= p <= n:
        raise ShapeError(f"need 1 <= p <= n, got n={n}, p={p}")
    return StiefelPoint(haar_array(rng, n, p))


def chordal_distance(S1: StiefelPoint, S2: StiefelPoint) -> float:
    if S1.data.shape != S2.data.shape:
        raise ShapeError(f"shape mismatch {S1.data.shape} vs {S2.data.shape}")
    return float(np.linalg.norm(S1.data - S2.data))
