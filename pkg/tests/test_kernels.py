import itertools
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphrank import _kernels
from graphrank._kernels import backends

BACKENDS = backends()
needs_compiled = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernels not built")


@pytest.fixture(params=sorted(BACKENDS))
def kern(request):
    return BACKENDS[request.param]


pair_lists = st.integers(2, 9).flatmap(
    lambda K: st.tuples(
        st.just(K),
        st.lists(st.tuples(st.integers(0, K - 1), st.integers(0, K - 1),
                           st.floats(-50, 50, allow_nan=False)), max_size=40)
        .map(lambda rows: [r for r in rows if r[0] != r[1]]),
    )
)


def test_aggregate_pairs_flips_and_sums(kern):
    ei, ej, c, s, q = kern.aggregate_pairs([0, 1, 2, 1], [1, 0, 1, 2], [1.0, -2.0, 3.0, 0.5], 3)
    assert ei.tolist() == [0, 1] and ej.tolist() == [1, 2]
    assert c.tolist() == [2, 2]
    assert s.tolist() == [3.0, -2.5]
    assert q.tolist() == [5.0, 9.25]


@given(pair_lists)
@settings(max_examples=60, deadline=None)
def test_aggregate_matches_brute_force(data):
    K, rows = data
    i = [r[0] for r in rows]
    j = [r[1] for r in rows]
    y = [r[2] for r in rows]
    ref = {}
    for a, b, v in rows:
        key, v = ((a, b), v) if a < b else ((b, a), -v)
        n, s, q = ref.get(key, (0, 0.0, 0.0))
        ref[key] = (n + 1, s + v, q + v * v)
    for mod in BACKENDS.values():
        ei, ej, c, s, q = mod.aggregate_pairs(np.array(i, dtype=np.int64), np.array(j, dtype=np.int64),
                                              np.array(y), K)
        assert list(zip(ei.tolist(), ej.tolist())) == sorted(ref)
        for e, key in enumerate(sorted(ref)):
            assert c[e] == ref[key][0]
            assert s[e] == pytest.approx(ref[key][1], abs=1e-9)


@needs_compiled
@given(pair_lists)
@settings(max_examples=60, deadline=None)
def test_backends_agree_bitwise(data):
    K, rows = data
    i = np.array([r[0] for r in rows], dtype=np.int64)
    j = np.array([r[1] for r in rows], dtype=np.int64)
    y = np.array([r[2] for r in rows], dtype=np.float64)
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    for a, b in zip(py.aggregate_pairs(i, j, y, K), cy.aggregate_pairs(i, j, y, K)):
        assert np.array_equal(a, b)
    ei, ej, c, _, _ = py.aggregate_pairs(i, j, y, K)
    w = c.astype(float) * 0.37
    assert np.array_equal(py.laplacian(K, ei, ej, w), cy.laplacian(K, ei, ej, w))
    assert np.array_equal(py.component_labels(K, ei, ej), cy.component_labels(K, ei, ej))
    order = np.argsort(-c, kind="stable")
    assert np.array_equal(py.kruskal(K, ei, ej, order), cy.kruskal(K, ei, ej, order))


@needs_compiled
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=30))
@settings(max_examples=80, deadline=None)
def test_rank_and_gap_backends_agree(values):
    mu = np.round(np.array(values), 1)  # rounding creates ties
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    assert np.array_equal(py.rank_vector(mu), cy.rank_vector(mu))
    if mu.size >= 2:
        G = np.vstack([mu, mu[::-1] * 2.0])
        assert np.array_equal(py.min_gap_sq(G), cy.min_gap_sq(G))


@needs_compiled
def test_min_gap_long_rows_agree():
    G = np.random.default_rng(3).standard_normal((50, 120))
    assert np.array_equal(BACKENDS["python"].min_gap_sq(G), BACKENDS["cython"].min_gap_sq(G))


def test_rank_vector_literal_definition(kern):
    assert kern.rank_vector(np.array([-1.0, 3.0, 2.0])).tolist() == [3, 1, 2]
    assert kern.rank_vector(np.array([4.0, 4.0, 4.0])).tolist() == [3, 3, 3]


@given(st.permutations(list(range(7))))
def test_inversions_and_cycles_against_brute_force(perm):
    inv = sum(1 for a, b in itertools.combinations(range(7), 2) if perm[a] > perm[b])
    seen, cyc = set(), 0
    for s in range(7):
        if s not in seen:
            cyc += 1
            while s not in seen:
                seen.add(s)
                s = perm[s]
    for mod in BACKENDS.values():
        assert mod.inversion_count(np.array(perm)) == inv
        assert mod.cycle_count(np.array(perm)) == cyc


def test_min_gap_sq_brute_force(kern):
    G = np.random.default_rng(1).standard_normal((20, 6))
    ref = [min((a - b) ** 2 for a, b in itertools.combinations(row, 2)) for row in G]
    assert np.allclose(kern.min_gap_sq(G), ref, rtol=0, atol=1e-14)


def test_kruskal_picks_heavy_edges_first(kern):
    ei = np.array([0, 0, 1, 2])
    ej = np.array([1, 2, 2, 3])
    w = np.array([5, 1, 7, 2])
    picked = kern.kruskal(4, ei, ej, np.argsort(-w, kind="stable"))
    assert sorted(picked.tolist()) == [0, 2, 3]


def test_empty_inputs(kern):
    e = np.zeros(0, dtype=np.int64)
    assert kern.laplacian(3, e, e, np.zeros(0)).tolist() == [[0.0] * 3] * 3
    assert kern.component_labels(3, e, e).tolist() == [0, 1, 2]
    out = kern.aggregate_pairs(e, e, np.zeros(0), 3)
    assert all(a.size == 0 for a in out)


def test_env_var_forces_fallback():
    code = "from graphrank import _kernels; print(_kernels.BACKEND)"
    env = dict(os.environ, GRAPH_RANK_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"


def test_active_backend_is_reported():
    assert _kernels.BACKEND in BACKENDS
    assert _kernels.aggregate_pairs is BACKENDS[_kernels.BACKEND].aggregate_pairs
