"""Pure numpy implementations of the hot loops.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and bitwise-identical output; the summation order is part of the contract.
"""

import numpy as np


def aggregate_pairs(i, j, y, K):
    """Collapse oriented records into per-edge counts, sums and sums of squares.

    Records with ``i > j`` are flipped (outcome negated). Edges come back in
    lexicographic ``(a, b)`` order with ``a < b``; within an edge, outcomes
    are accumulated in input order.
    """
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    y = np.asarray(y, dtype=np.float64)
    flip = i > j
    a = np.where(flip, j, i)
    b = np.where(flip, i, j)
    yy = np.where(flip, -y, y)
    key = a * K + b
    uniq, inv = np.unique(key, return_inverse=True)
    inv = inv.reshape(-1)
    m = uniq.shape[0]
    count = np.bincount(inv, minlength=m).astype(np.int64)
    sums = np.bincount(inv, weights=yy, minlength=m)
    sumsq = np.bincount(inv, weights=yy * yy, minlength=m)
    return uniq // K, uniq % K, count, sums, sumsq


def laplacian(K, ei, ej, w):
    L = np.zeros((K, K), dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    np.add.at(L, (ei, ei), w)
    np.add.at(L, (ej, ej), w)
    np.add.at(L, (ei, ej), -w)
    np.add.at(L, (ej, ei), -w)
    return L


def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        parent[x], x = root, parent[x]
    return root


def component_labels(K, ei, ej):
    """Label connected components 0..c-1 in order of their smallest vertex."""
    parent = list(range(K))
    for a, b in zip(np.asarray(ei).tolist(), np.asarray(ej).tolist()):
        ra, rb = _find(parent, a), _find(parent, b)
        if ra != rb:
            if ra < rb:
                parent[rb] = ra
            else:
                parent[ra] = rb
    labels = np.empty(K, dtype=np.int64)
    seen = {}
    for v in range(K):
        r = _find(parent, v)
        labels[v] = seen.setdefault(r, len(seen))
    return labels


def kruskal(K, ei, ej, order):
    """Indices of the spanning-forest edges picked by Kruskal, visiting ``order``."""
    parent = list(range(K))
    ei = np.asarray(ei).tolist()
    ej = np.asarray(ej).tolist()
    picked = []
    for e in np.asarray(order).tolist():
        ra, rb = _find(parent, ei[e]), _find(parent, ej[e])
        if ra != rb:
            if ra < rb:
                parent[rb] = ra
            else:
                parent[ra] = rb
            picked.append(e)
            if len(picked) == K - 1:
                break
    return np.asarray(picked, dtype=np.int64)


def rank_vector(mu):
    """r_i = #{j : mu_i <= mu_j}."""
    mu = np.asarray(mu, dtype=np.float64)
    s = np.sort(mu)
    return (mu.shape[0] - np.searchsorted(s, mu, side="left")).astype(np.int64)


def inversion_count(perm):
    perm = np.asarray(perm, dtype=np.int64)
    total = 0
    for k in range(perm.shape[0] - 1):
        total += int(np.count_nonzero(perm[k + 1:] < perm[k]))
    return total


def cycle_count(perm):
    perm = np.asarray(perm, dtype=np.int64).tolist()
    seen = [False] * len(perm)
    cycles = 0
    for start in range(len(perm)):
        if not seen[start]:
            cycles += 1
            x = start
            while not seen[x]:
                seen[x] = True
                x = perm[x]
    return cycles


def min_gap_sq(G):
    """Row-wise min over pairs of (G[r, a] - G[r, b])**2."""
    G = np.sort(np.asarray(G, dtype=np.float64), axis=1)
    d = np.diff(G, axis=1).min(axis=1)
    return d * d
