"""Paired-comparison linear models with comparison-level covariates.

The model is Y = M mu + X beta + eps with M the signed incidence matrix
(one row per comparison, +1 at i, -1 at j) and X the combined covariates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import DataError, IdentifiabilityError
from .estimator import Constraint, ranks
from .graph import ComparisonRecord
from .spectral import EPS, pinv_laplacian, pinv_symmetric, principal_angle, laplacian_components


def difference(u, v):
    return np.asarray(u, dtype=np.float64) - np.asarray(v, dtype=np.float64)


PSI: dict[str, Callable] = {"diff": difference}


def register_psi(name: str, fn: Callable, dim: int = 3, trials: int = 5) -> None:
    """Register a covariate combination rule after checking psi(u, v) = -psi(v, u)."""
    rng = np.random.default_rng(0)
    for _ in range(trials):
        u, v = rng.normal(size=dim), rng.normal(size=dim)
        if not np.allclose(fn(u, v), -np.asarray(fn(v, u)), rtol=1e-12, atol=1e-12):
            raise ValueError(f"combination rule {name!r} is not antisymmetric")
    PSI[name] = fn


def combine(xi, xj, psi: str = "diff") -> tuple[float, ...]:
    try:
        rule = PSI[psi]
    except KeyError:
        raise DataError(f"unknown combination rule {psi!r}; known: {sorted(PSI)}") from None
    return tuple(np.atleast_1d(rule(xi, xj)).tolist())


@dataclass(frozen=True, eq=False)
class CovariateDesign:
    M: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    K: int
    psi: str = "diff"

    @property
    def n(self) -> int:
        return self.M.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def H(self) -> np.ndarray:
        return np.hstack([self.M, self.X])

    def laplacian(self) -> np.ndarray:
        return self.M.T @ self.M

    def score(self) -> np.ndarray:
        return self.M.T @ self.Y


def build_design(records: Iterable[ComparisonRecord], K: int, psi: str = "diff",
                 center: bool = False, require_covariates: bool = True) -> CovariateDesign:
    """Stack records into (M, X, Y) with rows in lexicographic (i, j, k) order.

    Record covariates are taken as already combined; records with ``i > j``
    are flipped, which negates the covariates under any antisymmetric rule.
    ``center`` subtracts column means from X.
    """
    if psi not in PSI:
        raise DataError(f"unknown combination rule {psi!r}")
    recs = []
    for r in records:
        if r.i == r.j:
            raise DataError("an item cannot be compared with itself")
        if not (0 <= r.i < K and 0 <= r.j < K):
            raise DataError(f"item index out of range for K={K}")
        recs.append(r if r.i < r.j else r.flipped())
    if not recs:
        raise DataError("no comparisons")
    has_x = [r.x is not None for r in recs]
    if any(has_x) and not all(has_x):
        raise DataError(f"record {has_x.index(False)} is missing covariates")
    if not any(has_x):
        if require_covariates:
            raise DataError("records carry no covariates")
        p = 0
    else:
        p = len(recs[0].x)
        for k, r in enumerate(recs):
            if len(r.x) != p:
                raise DataError(f"record {k} has {len(r.x)} covariates, expected {p}")
    i = np.array([r.i for r in recs], dtype=np.int64)
    j = np.array([r.j for r in recs], dtype=np.int64)
    y = np.array([r.y for r in recs], dtype=np.float64)
    X = np.array([r.x for r in recs], dtype=np.float64) if p else np.zeros((len(recs), 0))
    return design_from_arrays(i, j, y, X, K, psi=psi, center=center)


def design_from_arrays(i, j, y, X, K: int, psi: str = "diff", center: bool = False) -> CovariateDesign:
    """Array form of :func:`build_design`; rows with i > j are flipped, then sorted."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    y = np.asarray(y, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64).reshape(i.size, -1)
    flip = i > j
    a, b = np.where(flip, j, i), np.where(flip, i, j)
    sign = np.where(flip, -1.0, 1.0)
    order = np.lexsort((b, a))
    n = i.size
    rows = np.arange(n)
    M = np.zeros((n, K))
    M[rows, a[order]] = 1.0
    M[rows, b[order]] = -1.0
    Y = (sign * y)[order]
    X = (sign[:, None] * X)[order]
    if center and X.shape[1]:
        X = X - X.mean(axis=0)
    return CovariateDesign(M, X, Y, K, psi)


@dataclass(frozen=True, eq=False)
class IdentifiabilityReport:
    rank_M: int
    rank_residual_X: int
    p: int
    K: int
    identifiable: bool
    connected: bool
    components: list
    directions: np.ndarray
    angle_phi: float | None


def check_identifiability(d: CovariateDesign) -> IdentifiabilityReport:
    """Check rank(M) = K-1 and rank((I - MM+)X) = p.

    Ranks come from singular values with cutoff max(n, K+p) * eps * sigma_max.
    The residual rank is rank(H) - rank(M), H = (M, X). ``directions`` holds
    an orthonormal basis of coefficient vectors c with Xc in im(M).
    """
    n, K, p = d.n, d.K, d.p
    comps = laplacian_components(d.laplacian())
    sM = np.linalg.svd(d.M, compute_uv=False)
    rank_M = int(np.sum(sM > max(n, K) * EPS * sM[0]))
    H = d.H
    _, sH, Vt = np.linalg.svd(H, full_matrices=True)
    tol = max(n, K + p) * EPS * sH[0]
    rank_H = int(np.sum(sH > tol))
    rank_res = rank_H - rank_M
    directions = np.zeros((p, 0))
    if p and rank_res < p:
        null = Vt[rank_H:].T
        q = np.concatenate([np.ones(K), np.zeros(p)]) / np.sqrt(K)
        null = null - np.outer(q, q @ null)
        cpart = null[K:]
        U, s, _ = np.linalg.svd(cpart, full_matrices=False)
        directions = U[:, s > 1e-8]
    angle = None
    if p and np.any(d.X):
        angle = principal_angle(d.M, d.X)
    return IdentifiabilityReport(
        rank_M=rank_M,
        rank_residual_X=rank_res,
        p=p,
        K=K,
        identifiable=rank_M == K - 1 and rank_res == p,
        connected=len(comps) == 1,
        components=comps,
        directions=directions,
        angle_phi=angle,
    )


@dataclass(frozen=True, eq=False)
class CovariateFit:
    mu_hat: np.ndarray
    beta_hat: np.ndarray
    sigma2_hat: float
    cov: np.ndarray
    n: int
    constraint: Constraint
    diagnostics: IdentifiabilityReport
    ranks: np.ndarray
    rss: float
    perfect_fit: bool

    @property
    def K(self) -> int:
        return self.mu_hat.shape[0]

    @property
    def merit_cov(self) -> np.ndarray:
        return self.cov[: self.K, : self.K]


def _raise_unidentifiable(rep: IdentifiabilityReport):
    if not rep.connected:
        raise IdentifiabilityError(
            f"comparison graph is disconnected into {len(rep.components)} components",
            components=rep.components,
        )
    raise IdentifiabilityError(
        f"covariates are confounded with merits: rank of the residual covariates is "
        f"{rep.rank_residual_X} < p={rep.p}",
        directions=rep.directions,
    )


def fit_with_covariates(d: CovariateDesign, constraint: Constraint | None = None,
                        sigma_divisor: str = "n") -> CovariateFit:
    """Joint least squares for (mu, beta).

    beta = (X'(I - M N+ M')X)^-1 X'(I - M N+ M')Y and mu = N+(S - M'X beta),
    then mu is moved onto the requested constraint.
    """
    constraint = constraint or Constraint.sum_zero()
    rep = check_identifiability(d)
    if not rep.identifiable:
        _raise_unidentifiable(rep)
    K, p, n = d.K, d.p, d.n
    M, X, Y = d.M, d.X, d.Y
    N = d.laplacian()
    P = pinv_laplacian(N)
    if p:
        Xt = X - M @ (P @ (M.T @ X))
        beta = np.linalg.solve(Xt.T @ Xt, Xt.T @ Y)
    else:
        beta = np.zeros(0)
    mu = P @ (M.T @ Y - M.T @ (X @ beta))
    v = constraint.vector(K)
    mu = mu - (v @ mu) / v.sum()

    resid = Y - M @ mu - X @ beta
    rss = float(resid @ resid)
    if rss <= 1e-24 * max(float(Y @ Y), 1.0):
        rss = 0.0
    denom = n if sigma_divisor == "n" else n - (K + p - 1)
    if denom <= 0:
        raise DataError("not enough comparisons for the requested variance divisor")
    sigma2 = rss / denom

    HtH = d.H.T @ d.H
    kernel = np.concatenate([np.ones(K), np.zeros(p)])
    Sigma_pinv = pinv_symmetric(HtH, known_kernel=kernel)
    T = np.eye(K + p)
    T[:K, :K] = constraint.projector(K)
    cov = sigma2 * (T @ Sigma_pinv @ T.T)
    return CovariateFit(mu, beta, sigma2, 0.5 * (cov + cov.T), n, constraint, rep,
                        ranks(mu), rss, rss == 0.0)


def misspecification_bias(d: CovariateDesign, beta) -> np.ndarray:
    """N+ M'X beta: the shift absorbed into merits when covariates are omitted."""
    beta = np.asarray(beta, dtype=np.float64)
    P = pinv_laplacian(d.laplacian())
    return P @ (d.M.T @ (d.X @ beta))


def akl_normal(d: CovariateDesign, mu_t, beta, mu_m, sigma2: float) -> float:
    """Average Kullback-Leibler divergence (per comparison, given X) between the
    normal model with covariates (mu_t, beta) and the one without (mu_m)."""
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    delta = np.asarray(mu_t, dtype=np.float64) - np.asarray(mu_m, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    N = d.laplacian()
    Xb = d.X @ beta
    val = delta @ N @ delta + 2.0 * Xb @ (d.M @ delta) + Xb @ Xb
    return float(val / (2.0 * d.n * sigma2))


def hajek_sidak_ratio(d: CovariateDesign) -> float:
    """max_i |h_i|^2 / lambda_2(H'H); small values support the normal approximation."""
    H = d.H
    lead = float(np.max(np.sum(H * H, axis=1)))
    w = np.linalg.eigvalsh(H.T @ H)
    return lead / float(w[1])
