"""Tests on merits, rank distances and bootstrap rank uncertainty."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.stats

from . import _kernels
from .covariates import CovariateFit, design_from_arrays, fit_with_covariates
from .errors import DataError, DegenerateFitError, GraphRankError, IdentifiabilityError
from .estimator import Constraint, MeritFit, fit
from .graph import ComparisonRecord, from_arrays
from .spectral import pinv_symmetric

MC_BLOCK = 1000
_MC_TAG = 0x7E57
_BOOT_TAG = 0xB007


@dataclass(frozen=True, eq=False)
class TestResult:
    name: str
    statistic: float
    null: dict
    p_value: float
    alpha: float
    reject: bool
    null_sample: np.ndarray | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {"test": self.name, "statistic": self.statistic, "null": dict(self.null),
                "p_value": self.p_value, "alpha": self.alpha, "reject": self.reject}


# the class name starts with "Test"; keep pytest from collecting it
TestResult.__test__ = False


def _variance_factor(f) -> tuple[np.ndarray, np.ndarray, float]:
    """(V, mu, sigma2) with Var(mu_hat) ~ sigma2 * V, both on the sum-zero scale."""
    if f.sigma2_hat <= 0:
        raise DegenerateFitError("estimated error variance is zero (perfect fit); "
                                 "test statistics are undefined")
    K = f.K
    mu = f.mu_hat - f.mu_hat.mean()
    if isinstance(f, MeritFit):
        V = f.pinv
    elif isinstance(f, CovariateFit):
        C = np.eye(K) - 1.0 / K
        V = C @ f.merit_cov @ C / f.sigma2_hat
        V = 0.5 * (V + V.T)
    else:
        raise TypeError(f"unsupported fit type {type(f).__name__}")
    return V, mu, f.sigma2_hat


def _subset(subset, K) -> np.ndarray:
    idx = np.asarray(subset, dtype=np.int64)
    if idx.ndim != 1 or idx.size < 2:
        raise DataError("a subset needs at least two items")
    if np.unique(idx).size != idx.size:
        raise DataError("subset items must be distinct")
    if idx.min() < 0 or idx.max() >= K:
        raise DataError(f"subset item out of range for K={K}")
    return idx


def _chi2_result(name, stat, df, alpha) -> TestResult:
    p = float(scipy.stats.chi2.sf(stat, df))
    return TestResult(name, float(stat), {"law": "chi2", "df": int(df)}, p, alpha, p < alpha)


def test_all_equal(f, subset: Sequence[int] | None = None, alpha: float = 0.05) -> TestResult:
    """Quadratic-form test of mu_1 = ... = mu_K (or equality to zero on a subset).

    Full set: mu'N mu / sigma2 against chi2(K-1). Subset R: mu_R' (V_RR)^-1 mu_R /
    sigma2 against chi2(|R|), where V_RR is the R-block of the variance factor.
    """
    V, mu, s2 = _variance_factor(f)
    K = f.K
    if subset is not None and len(subset) < K:
        idx = _subset(subset, K)
        block = V[np.ix_(idx, idx)]
        m = mu[idx]
        stat = m @ np.linalg.solve(block, m) / s2
        return _chi2_result("all_equal", stat, idx.size, alpha)
    if subset is not None:
        _subset(subset, K)
    prec = f.laplacian if isinstance(f, MeritFit) else pinv_symmetric(V, known_kernel=np.ones(K))
    stat = mu @ prec @ mu / s2
    return _chi2_result("all_equal", stat, K - 1, alpha)


def adjacent_contrasts(idx: Sequence[int], K: int) -> np.ndarray:
    """(R-1) x K matrix with rows e_{idx[r]} - e_{idx[r+1]}."""
    idx = list(idx)
    C = np.zeros((len(idx) - 1, K))
    for r in range(len(idx) - 1):
        C[r, idx[r]] = 1.0
        C[r, idx[r + 1]] = -1.0
    return C


def pairwise_contrasts(K: int) -> np.ndarray:
    """All C(K,2) contrasts e_i - e_j, i < j, in lexicographic order."""
    a, b = np.triu_indices(K, 1)
    D = np.zeros((a.size, K))
    D[np.arange(a.size), a] = 1.0
    D[np.arange(a.size), b] = -1.0
    return D


def versus_item_contrasts(item: int, K: int) -> np.ndarray:
    """(K-1) x K matrix whose r-th row is e_item minus the r-th other item."""
    others = [j for j in range(K) if j != item]
    E = np.zeros((K - 1, K))
    E[:, item] = 1.0
    E[np.arange(K - 1), others] = -1.0
    return E


def test_contrasts(f, subset: Sequence[int], alpha: float = 0.05) -> TestResult:
    """Wald test that all merits in ``subset`` are equal, chi2(R-1) null."""
    V, mu, s2 = _variance_factor(f)
    idx = _subset(subset, f.K)
    C = adjacent_contrasts(idx, f.K)
    c = C @ mu
    stat = c @ np.linalg.solve(C @ V @ C.T, c) / s2
    return _chi2_result("contrasts", stat, idx.size - 1, alpha)


def _gaussian_factor(cov: np.ndarray) -> np.ndarray:
    w, U = np.linalg.eigh(0.5 * (cov + cov.T))
    return U * np.sqrt(np.clip(w, 0.0, None))


def _mc_blocks(L: np.ndarray, B: int, seed: int, reducer, workers: int) -> np.ndarray:
    """B draws of reducer(z @ L') in fixed blocks, block b seeded by (seed, b)."""
    sizes = [min(MC_BLOCK, B - s) for s in range(0, B, MC_BLOCK)]

    def block(b):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_MC_TAG, b)))
        z = rng.standard_normal((sizes[b], L.shape[1]))
        return reducer(z @ L.T)

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(block, range(len(sizes))))
    else:
        parts = [block(b) for b in range(len(sizes))]
    return np.concatenate(parts)


def _mc_result(name, stat, sample, B, seed, alpha) -> TestResult:
    p = float((1 + np.count_nonzero(sample >= stat)) / (B + 1))
    return TestResult(name, float(stat), {"law": "monte-carlo", "B": int(B), "seed": int(seed)},
                      p, alpha, p < alpha, sample)


def test_all_distinct(f, alpha: float = 0.05, B: int = 10000, seed: int = 0,
                      workers: int = 1) -> TestResult:
    """T = n * min_{i<j} (mu_i - mu_j)^2; large values indicate all merits differ.

    The null law is min_k W_k^2 with W ~ N(0, sigma2 * n * D V D'), simulated
    as the minimal squared gap of G ~ N(0, sigma2 * n * V).
    """
    V, mu, s2 = _variance_factor(f)
    if f.K < 2:
        raise DataError("need at least two items")
    stat = f.n * float(_kernels.min_gap_sq(mu[None, :])[0])
    L = _gaussian_factor(s2 * f.n * V)
    sample = _mc_blocks(L, B, seed, _kernels.min_gap_sq, workers)
    return _mc_result("all_distinct", stat, sample, B, seed, alpha)


def test_item_not_worst(f, item: int, alpha: float = 0.05, B: int = 10000, seed: int = 0,
                        workers: int = 1) -> TestResult:
    """T = sqrt(n) * (mu_item - min_{j != item} mu_j); large values reject "item is worst".

    T equals the largest coordinate of sqrt(n) E mu, so the null draws are
    maxima of N(0, sigma2 * n * E V E').
    """
    V, mu, s2 = _variance_factor(f)
    K = f.K
    if not 0 <= item < K:
        raise DataError(f"item {item} out of range for K={K}")
    E = versus_item_contrasts(item, K)
    stat = np.sqrt(f.n) * float(np.max(E @ mu))
    L = _gaussian_factor(s2 * f.n * (E @ V @ E.T))
    sample = _mc_blocks(L, B, seed, lambda W: W.max(axis=1), workers)
    return _mc_result("item_not_worst", stat, sample, B, seed, alpha)


def _as_permutation(r, name) -> np.ndarray:
    r = np.asarray(r, dtype=np.int64)
    K = r.size
    if np.unique(r).size != K or r.min() != 1 or r.max() != K:
        raise DataError(f"{name} is not a tie-free ranking of 1..{K}")
    return r - 1


def rank_distance(r1, r2, metric: str = "cayley") -> int:
    """Cayley (K minus cycles) or Kendall (inversions) distance of r2 composed with r1^-1."""
    if len(r1) != len(r2):
        raise DataError("rank vectors differ in length")
    p1 = _as_permutation(r1, "first ranking")
    p2 = _as_permutation(r2, "second ranking")
    inv1 = np.empty_like(p1)
    inv1[p1] = np.arange(p1.size)
    comp = p2[inv1]
    if metric == "cayley":
        return int(p1.size - _kernels.cycle_count(comp))
    if metric == "kendall":
        return int(_kernels.inversion_count(comp))
    raise ValueError(f"unknown metric {metric!r}")


@dataclass(frozen=True, eq=False)
class BootstrapReport:
    B: int
    rank_samples: np.ndarray
    quartiles: np.ndarray
    skipped: int
    seed: int

    @property
    def successes(self) -> int:
        return self.rank_samples.shape[0]


def _records_to_arrays(records):
    i = np.array([r.i for r in records], dtype=np.int64)
    j = np.array([r.j for r in records], dtype=np.int64)
    y = np.array([r.y for r in records], dtype=np.float64)
    has_x = [r.x is not None for r in records]
    X = np.array([r.x for r in records], dtype=np.float64) if all(has_x) else None
    return i, j, y, X


def bootstrap_ranks(records: Sequence[ComparisonRecord], K: int, B: int = 200, seed: int = 0,
                    covariates: bool = False, constraint: Constraint | None = None,
                    psi: str = "diff", workers: int = 1) -> BootstrapReport:
    """Nonparametric bootstrap of the estimated ranking.

    Each replicate draws n records with replacement from its own stream
    (seed, replicate index), refits, and records the rank vector.
    Replicates whose graph is disconnected or whose design is not
    identifiable are skipped and counted.
    """
    records = list(records)
    if not records:
        raise DataError("no comparisons")
    i, j, y, X = _records_to_arrays(records)
    if covariates and X is None:
        raise DataError("covariate bootstrap needs covariates on every record")
    n = i.size

    def refit(sel):
        if covariates:
            d = design_from_arrays(i[sel], j[sel], y[sel], X[sel], K, psi=psi)
            return fit_with_covariates(d, constraint).ranks
        return fit(from_arrays(i[sel], j[sel], y[sel], K), constraint).ranks

    refit(np.arange(n))  # infeasible data fails here, before resampling

    def replicate(b):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_BOOT_TAG, b)))
        sel = rng.integers(0, n, size=n)
        try:
            return refit(sel)
        except (IdentifiabilityError, np.linalg.LinAlgError):
            return None

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            out = list(ex.map(replicate, range(B)))
    else:
        out = [replicate(b) for b in range(B)]
    kept = [r for r in out if r is not None]
    skipped = B - len(kept)
    if skipped * 2 > B:
        raise GraphRankError(f"{skipped} of {B} bootstrap resamples were infeasible")
    samples = np.array(kept, dtype=np.int64).reshape(len(kept), K)
    quart = np.percentile(samples, [25, 50, 75], axis=0).T
    return BootstrapReport(B, samples, quart, skipped, seed)
