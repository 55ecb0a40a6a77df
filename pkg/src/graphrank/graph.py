"""Paired-comparison graphs: storage, Laplacians and connectivity diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import DataError, IdentifiabilityError


@dataclass(frozen=True)
class ComparisonRecord:
    """One comparison of item ``i`` against item ``j``.

    ``y`` is measured on the merit-difference scale with i-minus-j
    orientation. ``x`` is the combined covariate vector for this comparison
    (already passed through the combination rule), or None.
    """

    i: int
    j: int
    y: float
    x: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.x is not None and not isinstance(self.x, tuple):
            object.__setattr__(self, "x", tuple(float(v) for v in self.x))

    def flipped(self) -> ComparisonRecord:
        x = None if self.x is None else tuple(-v for v in self.x)
        return ComparisonRecord(self.j, self.i, -self.y, x)


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ComparisonGraph:
    """Aggregated paired-comparison data on ``K`` items.

    Edges are stored once with ``ei < ej`` in lexicographic order. ``count``
    holds n_ij, ``sums`` the outcome totals S_ij and ``sumsq`` the totals of
    squared outcomes (needed for the residual sum of squares). ``records``
    keeps the raw comparisons when covariates or resampling need them.
    """

    K: int
    ei: np.ndarray
    ej: np.ndarray
    count: np.ndarray
    sums: np.ndarray
    sumsq: np.ndarray
    records: tuple[ComparisonRecord, ...] | None = None
    labels: tuple[str, ...] | None = None
    _index: dict = field(default=None, repr=False)

    def __post_init__(self):
        for name, dtype in (("ei", np.int64), ("ej", np.int64), ("count", np.int64),
                            ("sums", np.float64), ("sumsq", np.float64)):
            object.__setattr__(self, name, _frozen(getattr(self, name), dtype))
        index = {(int(a), int(b)): e for e, (a, b) in enumerate(zip(self.ei, self.ej))}
        object.__setattr__(self, "_index", index)

    @property
    def n(self) -> int:
        """Total number of comparisons."""
        return int(self.count.sum())

    @property
    def n_edges(self) -> int:
        return int(self.ei.shape[0])

    def edges(self) -> list[tuple[int, int]]:
        return list(self._index)

    def edge_id(self, i: int, j: int) -> int | None:
        a, b = (i, j) if i < j else (j, i)
        return self._index.get((a, b))

    def n_between(self, i: int, j: int) -> int:
        e = self.edge_id(i, j)
        return 0 if e is None else int(self.count[e])

    def degrees(self) -> np.ndarray:
        d = np.zeros(self.K, dtype=np.int64)
        np.add.at(d, self.ei, self.count)
        np.add.at(d, self.ej, self.count)
        return d

    def score(self, weights: EdgeWeights | None = None) -> np.ndarray:
        """Score vector S with S_i = sum_j w_ij S_ij (antisymmetric S_ij)."""
        s = self.sums if weights is None else self.sums * weights.aligned(self)
        S = np.zeros(self.K)
        np.add.at(S, self.ei, s)
        np.add.at(S, self.ej, -s)
        return S

    def label(self, v: int) -> str:
        return self.labels[v] if self.labels is not None else str(v)


class EdgeWeights:
    """Positive per-edge weights keyed by unordered item pairs.

    Graph edges absent from the mapping get weight 1.
    """

    def __init__(self, weights: Mapping[tuple[int, int], float]):
        self._w = {}
        for (i, j), w in weights.items():
            w = float(w)
            if not w > 0:
                raise DataError(f"weight for edge ({i}, {j}) must be positive, got {w}")
            key = (i, j) if i < j else (j, i)
            self._w[key] = w

    def __len__(self):
        return len(self._w)

    def items(self):
        return self._w.items()

    def aligned(self, g: ComparisonGraph) -> np.ndarray:
        """Weights as an array in ``g``'s edge order."""
        w = np.ones(g.n_edges)
        for key, val in self._w.items():
            e = g.edge_id(*key)
            if e is None:
                raise DataError(f"weight supplied for non-edge {key}")
            w[e] = val
        return w


def _check_indices(i, j, K):
    if K < 2:
        raise DataError(f"need at least two items, got K={K}")
    if i.size and (i.min() < 0 or j.min() < 0 or i.max() >= K or j.max() >= K):
        bad = int(np.flatnonzero((i < 0) | (j < 0) | (i >= K) | (j >= K))[0])
        raise DataError(f"record {bad}: item index out of range for K={K}")
    same = np.flatnonzero(i == j)
    if same.size:
        raise DataError(f"record {int(same[0])}: an item cannot be compared with itself")


def from_arrays(i, j, y, K: int, labels: Sequence[str] | None = None) -> ComparisonGraph:
    """Aggregate comparisons given as parallel index/outcome arrays."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    y = np.asarray(y, dtype=np.float64)
    _check_indices(i, j, K)
    ei, ej, count, sums, sumsq = _kernels.aggregate_pairs(i, j, y, K)
    return ComparisonGraph(K, ei, ej, count, sums, sumsq,
                           labels=None if labels is None else tuple(labels))


def build_graph(records: Iterable[ComparisonRecord], K: int, keep_records: bool | None = None,
                labels: Sequence[str] | None = None) -> ComparisonGraph:
    """Aggregate records into a :class:`ComparisonGraph`.

    Records with ``i > j`` are flipped before aggregation. Raw records are
    retained when any carries covariates, or when ``keep_records`` is True.
    """
    records = tuple(records)
    i = np.fromiter((r.i for r in records), dtype=np.int64, count=len(records))
    j = np.fromiter((r.j for r in records), dtype=np.int64, count=len(records))
    y = np.fromiter((r.y for r in records), dtype=np.float64, count=len(records))
    g = from_arrays(i, j, y, K, labels)
    if keep_records is None:
        keep_records = any(r.x is not None for r in records)
    if keep_records:
        object.__setattr__(g, "records", records)
    return g


def laplacian(g: ComparisonGraph, weights: EdgeWeights | None = None) -> np.ndarray:
    """Weighted Laplacian: N_ii = sum_j w_ij n_ij, N_ij = -w_ij n_ij."""
    w = g.count.astype(np.float64)
    if weights is not None:
        w = w * weights.aligned(g)
    return _kernels.laplacian(g.K, g.ei, g.ej, w)


def components(g: ComparisonGraph) -> list[list[int]]:
    labels = _kernels.component_labels(g.K, g.ei, g.ej)
    out = [[] for _ in range(int(labels.max()) + 1)]
    for v, c in enumerate(labels.tolist()):
        out[c].append(v)
    return out


def is_connected(g: ComparisonGraph) -> bool:
    return len(components(g)) == 1


def require_connected(g: ComparisonGraph) -> None:
    comps = components(g)
    if len(comps) > 1:
        named = [[g.label(v) for v in c] for c in comps]
        raise IdentifiabilityError(
            f"comparison graph is disconnected into {len(comps)} components: {named}",
            components=named,
        )


def bottleneck_m(g: ComparisonGraph) -> tuple[int, list[tuple[int, int]]]:
    """Max over spanning trees of the smallest edge count, and one attaining tree.

    A maximum spanning tree under the weights n_ij attains the maximin.
    """
    require_connected(g)
    order = np.argsort(-g.count, kind="stable")
    picked = _kernels.kruskal(g.K, g.ei, g.ej, order)
    tree = [(int(g.ei[e]), int(g.ej[e])) for e in picked]
    m = int(g.count[picked].min()) if picked.size else 0
    return m, tree
