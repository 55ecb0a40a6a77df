"""Shared data builders for the test suite."""

import numpy as np

from graphrank.graph import ComparisonRecord, build_graph


def random_connected_graph(rng, K, extra=0.3, max_count=4):
    """Random spanning tree plus random extra edges, with random multiplicities."""
    perm = rng.permutation(K)
    pairs = {tuple(sorted((int(perm[k]), int(perm[rng.integers(0, k)])))) for k in range(1, K)}
    for a in range(K):
        for b in range(a + 1, K):
            if rng.random() < extra:
                pairs.add((a, b))
    records = []
    for a, b in sorted(pairs):
        for _ in range(int(rng.integers(1, max_count + 1))):
            records.append(ComparisonRecord(a, b, float(rng.normal())))
    return build_graph(records, K), records


def complete_records(K, m, mu, rng=None, sigma=1.0):
    recs = []
    for a in range(K):
        for b in range(a + 1, K):
            for _ in range(m):
                noise = 0.0 if rng is None else sigma * rng.standard_normal()
                recs.append(ComparisonRecord(a, b, mu[a] - mu[b] + noise))
    return recs


def complete_design(K, m):
    """Index arrays of a complete graph with m comparisons per pair."""
    a, b = np.triu_indices(K, 1)
    return np.repeat(a, m), np.repeat(b, m)


def simulate_fit(i, j, mu, K, rng, sigma=1.0, constraint=None):
    from graphrank.estimator import fit
    from graphrank.graph import from_arrays
    y = mu[i] - mu[j] + sigma * rng.standard_normal(i.size)
    return fit(from_arrays(i, j, y, K), constraint)
