"""Constrained least-squares merit estimation without covariates."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import DataError
from .graph import ComparisonGraph, EdgeWeights, bottleneck_m, laplacian, require_connected
from .spectral import algebraic_connectivity, pinv_laplacian


@dataclass(frozen=True)
class Constraint:
    """Identifiability constraint v'mu = 0 with v'1 != 0.

    Build with :meth:`sum_zero`, :meth:`anchor` or :meth:`custom`.
    """

    kind: str
    item: int | None = None
    v: tuple[float, ...] | None = None

    @classmethod
    def sum_zero(cls) -> Constraint:
        return cls("sum-zero")

    @classmethod
    def anchor(cls, item: int) -> Constraint:
        return cls("anchor", item=int(item))

    @classmethod
    def custom(cls, v: Sequence[float]) -> Constraint:
        v = np.asarray(v, dtype=np.float64)
        if abs(v.sum()) <= 1e-12 * np.linalg.norm(v) * np.sqrt(v.size) or not np.any(v):
            raise DataError("constraint vector must not be a contrast (need v'1 != 0)")
        return cls("custom", v=tuple(v.tolist()))

    def vector(self, K: int) -> np.ndarray:
        if self.kind == "sum-zero":
            return np.ones(K)
        if self.kind == "anchor":
            if not 0 <= self.item < K:
                raise DataError(f"anchor item {self.item} out of range for K={K}")
            v = np.zeros(K)
            v[self.item] = 1.0
            return v
        v = np.asarray(self.v)
        if v.size != K:
            raise DataError(f"constraint vector has length {v.size}, expected {K}")
        return v

    def projector(self, K: int) -> np.ndarray:
        """C_v = I - 1 v' / (v'1); maps any merit vector onto {v'mu = 0}."""
        v = self.vector(K)
        return np.eye(K) - np.outer(np.ones(K), v) / v.sum()


@dataclass(frozen=True)
class FitDiagnostics:
    connected: bool
    lambda2: float
    bottleneck_m: int
    bottleneck_tree: tuple[tuple[int, int], ...]


@dataclass(frozen=True, eq=False)
class MeritFit:
    mu_hat: np.ndarray
    constraint: Constraint
    sigma2_hat: float
    cov: np.ndarray
    n: int
    diagnostics: FitDiagnostics
    ranks: np.ndarray
    laplacian: np.ndarray
    pinv: np.ndarray
    rss: float

    @property
    def K(self) -> int:
        return self.mu_hat.shape[0]


def objective(g: ComparisonGraph, mu: np.ndarray, weights: EdgeWeights | None = None) -> float:
    """Sum of squares Q(mu) over all comparisons, from per-edge sufficient statistics."""
    mu = np.asarray(mu, dtype=np.float64)
    d = mu[g.ei] - mu[g.ej]
    per_edge = g.sumsq - 2.0 * d * g.sums + g.count * d * d
    w = 1.0 if weights is None else weights.aligned(g)
    q = float(np.sum(w * per_edge))
    # below the resolution of the expanded form the residual is exactly zero
    floor = 1e-12 * float(np.sum(w * g.sumsq))
    return 0.0 if q <= floor else q


def ranks(mu) -> np.ndarray:
    """r_i = #{j : mu_i <= mu_j}; the largest merit gets rank 1, ties share the larger rank."""
    return _kernels.rank_vector(np.asarray(mu, dtype=np.float64))


def fit(g: ComparisonGraph, constraint: Constraint | None = None,
        weights: EdgeWeights | None = None, sigma_divisor: str = "n") -> MeritFit:
    """Least-squares merits mu = N+S - (v'N+S / v'1) 1.

    ``sigma_divisor`` is ``"n"`` (Q/n) or ``"dof"`` (Q/(n - K + 1)).
    """
    constraint = constraint or Constraint.sum_zero()
    if g.n == 0:
        raise DataError("no comparisons to fit")
    require_connected(g)
    K = g.K
    N = laplacian(g, weights)
    S = g.score(weights)
    P = pinv_laplacian(N)
    base = P @ S
    v = constraint.vector(K)
    mu = base - (v @ base) / v.sum()

    rss = objective(g, mu, weights)
    if sigma_divisor == "n":
        denom = g.n
    elif sigma_divisor == "dof":
        denom = g.n - (K - 1)
        if denom <= 0:
            raise DataError(f"not enough comparisons ({g.n}) for the degrees-of-freedom divisor")
    else:
        raise ValueError(f"unknown sigma_divisor {sigma_divisor!r}")
    sigma2 = rss / denom

    C = constraint.projector(K)
    cov = sigma2 * (C @ P @ C.T)
    m, tree = bottleneck_m(g)
    diag = FitDiagnostics(True, algebraic_connectivity(N), m, tuple(tree))
    return MeritFit(mu, constraint, sigma2, 0.5 * (cov + cov.T), g.n, diag,
                    ranks(mu), N, P, rss)


def reconstrain(f: MeritFit, u: Constraint) -> MeritFit:
    """Re-express a fit under another constraint: mu(u) = C_u C_v+ mu(v)."""
    K = f.K
    v = f.constraint.vector(K)
    Cv_pinv = np.eye(K) - np.outer(v, v) / (v @ v)
    Cu = u.projector(K)
    T = Cu @ Cv_pinv
    mu = T @ f.mu_hat
    cov = Cu @ f.cov @ Cu.T
    return replace(f, mu_hat=mu, constraint=u, cov=0.5 * (cov + cov.T), ranks=ranks(mu))


def pairwise_difference_variance(f: MeritFit, i: int, j: int) -> float:
    """Estimated Var(mu_i - mu_j); the same under every constraint."""
    if i == j:
        raise ValueError("pairwise difference needs two distinct items")
    c = np.zeros(f.K)
    c[i], c[j] = 1.0, -1.0
    return float(c @ f.cov @ c)


def row_sum_estimate(g: ComparisonGraph) -> np.ndarray:
    """Inversion-free estimate S_i / N_ii."""
    deg = g.degrees()
    if np.any(deg == 0):
        raise DataError(f"item {int(np.flatnonzero(deg == 0)[0])} has no comparisons")
    return g.score() / deg
