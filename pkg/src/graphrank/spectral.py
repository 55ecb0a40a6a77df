"""Laplacian pseudoinverses and spectral diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels
from .errors import IdentifiabilityError

EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class SpectralSummary:
    eigenvalues: np.ndarray
    lambda2: float
    fiedler: np.ndarray
    pinv_trace: float
    pinv_max_eigenvalue: float
    tol: float

    @property
    def connected(self) -> bool:
        return self.lambda2 > self.tol


def rank_tol(w: np.ndarray, dim: int) -> float:
    """Numerical-rank cutoff dim * eps * max|eigenvalue|."""
    return dim * EPS * (float(np.max(np.abs(w))) if w.size else 0.0)


def laplacian_components(N: np.ndarray) -> list[list[int]]:
    """Connected components read off the off-diagonal sparsity pattern of N."""
    K = N.shape[0]
    ei, ej = np.nonzero(np.triu(N, 1))
    labels = _kernels.component_labels(K, ei, ej)
    out = [[] for _ in range(int(labels.max()) + 1)] if K else []
    for v, c in enumerate(labels.tolist()):
        out[c].append(v)
    return out


def _shifted_factor(N: np.ndarray):
    K = N.shape[0]
    comps = laplacian_components(N)
    if len(comps) > 1:
        raise IdentifiabilityError(
            f"Laplacian is disconnected into {len(comps)} components: {comps}",
            components=comps,
        )
    return scipy.linalg.cho_factor(N + 1.0 / K, lower=True, check_finite=False)


def pinv_laplacian(N: np.ndarray) -> np.ndarray:
    """Moore-Penrose inverse of a connected-graph Laplacian.

    Uses N+ = (N + J/K)^-1 - J/K, i.e. one Cholesky factorization and no
    eigensolve.
    """
    N = np.asarray(N, dtype=np.float64)
    K = N.shape[0]
    factor = _shifted_factor(N)
    P = scipy.linalg.cho_solve(factor, np.eye(K), check_finite=False)
    P = 0.5 * (P + P.T) - 1.0 / K
    return P


def solve_laplacian(N: np.ndarray, b: np.ndarray) -> np.ndarray:
    """N+ b without forming N+ (connected graphs only)."""
    N = np.asarray(N, dtype=np.float64)
    K = N.shape[0]
    x = scipy.linalg.cho_solve(_shifted_factor(N), b, check_finite=False)
    return x - np.sum(b, axis=0) / K


def pinv_symmetric(A: np.ndarray, known_kernel: np.ndarray | None = None) -> np.ndarray:
    """Pseudoinverse of a symmetric matrix.

    With ``known_kernel`` (a vector spanning the one-dimensional null space)
    this is (A + qq')^-1 - qq' for the unit vector q. Otherwise eigenvalues
    above ``dim * eps * max|lambda|`` are inverted.
    """
    A = np.asarray(A, dtype=np.float64)
    scale = np.max(np.abs(A)) if A.size else 0.0
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-10 * max(scale, EPS):
        raise ValueError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    if known_kernel is not None:
        q = np.asarray(known_kernel, dtype=np.float64)
        q = q / np.linalg.norm(q)
        Q = np.outer(q, q)
        P = np.linalg.inv(A + Q) - Q
        return 0.5 * (P + P.T)
    w, U = np.linalg.eigh(A)
    tol = rank_tol(w, A.shape[0])
    keep = np.abs(w) > tol
    Uk = U[:, keep]
    return (Uk / w[keep]) @ Uk.T


def _sign_fix(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def spectral_summary(N: np.ndarray) -> SpectralSummary:
    N = np.asarray(N, dtype=np.float64)
    K = N.shape[0]
    w, U = np.linalg.eigh(0.5 * (N + N.T))
    tol = rank_tol(w, K)
    pos = w > tol
    lam2 = float(w[1]) if K > 1 else 0.0
    return SpectralSummary(
        eigenvalues=w,
        lambda2=lam2,
        fiedler=_sign_fix(U[:, 1]) if K > 1 else np.zeros(K),
        pinv_trace=float(np.sum(1.0 / w[pos])),
        pinv_max_eigenvalue=1.0 / lam2 if lam2 > tol else float("inf"),
        tol=tol,
    )


def algebraic_connectivity(N: np.ndarray) -> float:
    w = np.linalg.eigvalsh(np.asarray(N, dtype=np.float64))
    return float(w[1]) if w.size > 1 else 0.0


def orthonormal_basis(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    tol = max(A.shape) * EPS * (s[0] if s.size else 0.0)
    return U[:, s > tol]


def principal_angle(A: np.ndarray, B: np.ndarray) -> float:
    """Smallest principal angle between the column spans of A and B."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if not np.any(A) or not np.any(B):
        raise ValueError("principal angle undefined for a zero matrix")
    Qa = orthonormal_basis(A)
    Qb = orthonormal_basis(B)
    s = np.linalg.svd(Qa.T @ Qb, compute_uv=False)
    return float(np.arccos(np.clip(s.max(), 0.0, 1.0)))
