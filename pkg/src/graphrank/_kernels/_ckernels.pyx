# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled twins of ``_pykernels``; outputs must match bit for bit."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()


def aggregate_pairs(i, j, y, Py_ssize_t K):
    cdef const cnp.int64_t[::1] iv = np.ascontiguousarray(i, dtype=np.int64)
    cdef const cnp.int64_t[::1] jv = np.ascontiguousarray(j, dtype=np.int64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = iv.shape[0], r, k, e, c
    lo_arr = np.empty(n, dtype=np.int64)
    hi_arr = np.empty(n, dtype=np.int64)
    yy_arr = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] lo = lo_arr
    cdef cnp.int64_t[::1] hi = hi_arr
    cdef double[::1] yy = yy_arr
    for r in range(n):
        if iv[r] > jv[r]:
            lo[r] = jv[r]
            hi[r] = iv[r]
            yy[r] = -yv[r]
        else:
            lo[r] = iv[r]
            hi[r] = jv[r]
            yy[r] = yv[r]

    # stable LSD counting sort on (lo, hi): first by hi, then by lo
    cnt_arr = np.zeros(K + 1, dtype=np.int64)
    tmp_arr = np.empty(n, dtype=np.int64)
    order_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] cnt = cnt_arr
    cdef cnp.int64_t[::1] tmp = tmp_arr
    cdef cnp.int64_t[::1] order = order_arr
    for r in range(n):
        cnt[hi[r] + 1] += 1
    for c in range(K):
        cnt[c + 1] += cnt[c]
    for r in range(n):
        tmp[cnt[hi[r]]] = r
        cnt[hi[r]] += 1
    cnt[:] = 0
    for r in range(n):
        cnt[lo[r] + 1] += 1
    for c in range(K):
        cnt[c + 1] += cnt[c]
    for r in range(n):
        k = tmp[r]
        order[cnt[lo[k]]] = k
        cnt[lo[k]] += 1

    cdef Py_ssize_t m = 0
    cdef cnp.int64_t pa = -1, pb = -1
    for r in range(n):
        k = order[r]
        if lo[k] != pa or hi[k] != pb:
            m += 1
            pa = lo[k]
            pb = hi[k]

    ei_arr = np.empty(m, dtype=np.int64)
    ej_arr = np.empty(m, dtype=np.int64)
    count_arr = np.zeros(m, dtype=np.int64)
    sums_arr = np.zeros(m, dtype=np.float64)
    sumsq_arr = np.zeros(m, dtype=np.float64)
    cdef cnp.int64_t[::1] ei = ei_arr
    cdef cnp.int64_t[::1] ej = ej_arr
    cdef cnp.int64_t[::1] count = count_arr
    cdef double[::1] sums = sums_arr
    cdef double[::1] sumsq = sumsq_arr
    cdef double v
    e = -1
    pa = -1
    pb = -1
    for r in range(n):
        k = order[r]
        if lo[k] != pa or hi[k] != pb:
            e += 1
            pa = lo[k]
            pb = hi[k]
            ei[e] = pa
            ej[e] = pb
        v = yy[k]
        count[e] += 1
        sums[e] += v
        sumsq[e] += v * v
    return ei_arr, ej_arr, count_arr, sums_arr, sumsq_arr


def laplacian(Py_ssize_t K, ei, ej, w):
    cdef const cnp.int64_t[::1] a = np.ascontiguousarray(ei, dtype=np.int64)
    cdef const cnp.int64_t[::1] b = np.ascontiguousarray(ej, dtype=np.int64)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    L_arr = np.zeros((K, K), dtype=np.float64)
    cdef double[:, ::1] L = L_arr
    cdef Py_ssize_t e, m = a.shape[0]
    # same accumulation order as the numpy add.at sequence
    for e in range(m):
        L[a[e], a[e]] += wv[e]
    for e in range(m):
        L[b[e], b[e]] += wv[e]
    for e in range(m):
        L[a[e], b[e]] += -wv[e]
    for e in range(m):
        L[b[e], a[e]] += -wv[e]
    return L_arr


cdef inline Py_ssize_t _find(cnp.int64_t* parent, Py_ssize_t x) nogil:
    cdef Py_ssize_t root = x, nxt
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


cdef inline bint _union(cnp.int64_t* parent, Py_ssize_t a, Py_ssize_t b) nogil:
    cdef Py_ssize_t ra = _find(parent, a), rb = _find(parent, b)
    if ra == rb:
        return False
    if ra < rb:
        parent[rb] = ra
    else:
        parent[ra] = rb
    return True


def component_labels(Py_ssize_t K, ei, ej):
    cdef const cnp.int64_t[::1] a = np.ascontiguousarray(ei, dtype=np.int64)
    cdef const cnp.int64_t[::1] b = np.ascontiguousarray(ej, dtype=np.int64)
    parent_arr = np.arange(K, dtype=np.int64)
    cdef cnp.int64_t[::1] parent = parent_arr
    cdef Py_ssize_t e, v, r, c = 0
    for e in range(a.shape[0]):
        _union(&parent[0], a[e], b[e])
    labels_arr = np.empty(K, dtype=np.int64)
    root_label_arr = np.full(K, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] labels = labels_arr
    cdef cnp.int64_t[::1] root_label = root_label_arr
    for v in range(K):
        r = _find(&parent[0], v)
        if root_label[r] < 0:
            root_label[r] = c
            c += 1
        labels[v] = root_label[r]
    return labels_arr


def kruskal(Py_ssize_t K, ei, ej, order):
    cdef const cnp.int64_t[::1] a = np.ascontiguousarray(ei, dtype=np.int64)
    cdef const cnp.int64_t[::1] b = np.ascontiguousarray(ej, dtype=np.int64)
    cdef const cnp.int64_t[::1] ordv = np.ascontiguousarray(order, dtype=np.int64)
    parent_arr = np.arange(K, dtype=np.int64)
    cdef cnp.int64_t[::1] parent = parent_arr
    picked_arr = np.empty(max(K - 1, 0), dtype=np.int64)
    cdef cnp.int64_t[::1] picked = picked_arr
    cdef Py_ssize_t r, e, np_ = 0
    for r in range(ordv.shape[0]):
        if np_ == K - 1:
            break
        e = ordv[r]
        if _union(&parent[0], a[e], b[e]):
            picked[np_] = e
            np_ += 1
    return picked_arr[:np_].copy()


def rank_vector(mu):
    cdef const double[::1] m = np.ascontiguousarray(mu, dtype=np.float64)
    cdef Py_ssize_t K = m.shape[0], p, q
    r_arr = np.zeros(K, dtype=np.int64)
    cdef cnp.int64_t[::1] r = r_arr
    cdef cnp.int64_t c
    for p in range(K):
        c = 0
        for q in range(K):
            if m[p] <= m[q]:
                c += 1
        r[p] = c
    return r_arr


cdef cnp.int64_t _merge_count(cnp.int64_t* a, cnp.int64_t* tmp, Py_ssize_t lo, Py_ssize_t hi) nogil:
    if hi - lo < 2:
        return 0
    cdef Py_ssize_t mid = (lo + hi) // 2
    cdef cnp.int64_t inv = _merge_count(a, tmp, lo, mid) + _merge_count(a, tmp, mid, hi)
    cdef Py_ssize_t p = lo, q = mid, k = lo
    while p < mid and q < hi:
        if a[p] <= a[q]:
            tmp[k] = a[p]
            p += 1
        else:
            tmp[k] = a[q]
            inv += mid - p
            q += 1
        k += 1
    while p < mid:
        tmp[k] = a[p]
        p += 1
        k += 1
    while q < hi:
        tmp[k] = a[q]
        q += 1
        k += 1
    for k in range(lo, hi):
        a[k] = tmp[k]
    return inv


def inversion_count(perm):
    work_arr = np.array(perm, dtype=np.int64, copy=True)
    tmp_arr = np.empty_like(work_arr)
    cdef cnp.int64_t[::1] work = work_arr
    cdef cnp.int64_t[::1] tmp = tmp_arr
    if work.shape[0] < 2:
        return 0
    return int(_merge_count(&work[0], &tmp[0], 0, work.shape[0]))


def cycle_count(perm):
    cdef const cnp.int64_t[::1] p = np.ascontiguousarray(perm, dtype=np.int64)
    cdef Py_ssize_t K = p.shape[0], s, x
    seen_arr = np.zeros(K, dtype=np.uint8)
    cdef cnp.uint8_t[::1] seen = seen_arr
    cdef Py_ssize_t cycles = 0
    for s in range(K):
        if not seen[s]:
            cycles += 1
            x = s
            while not seen[x]:
                seen[x] = 1
                x = p[x]
    return cycles


cdef int _cmp_double(const void* a, const void* b) noexcept nogil:
    cdef double x = (<const double*>a)[0]
    cdef double y = (<const double*>b)[0]
    return (x > y) - (x < y)


cdef inline void _insertion_sort(double* a, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t p, q
    cdef double x
    for p in range(1, n):
        x = a[p]
        q = p - 1
        while q >= 0 and a[q] > x:
            a[q + 1] = a[q]
            q -= 1
        a[q + 1] = x


def min_gap_sq(G):
    cdef const double[:, ::1] g = np.ascontiguousarray(G, dtype=np.float64)
    cdef Py_ssize_t B = g.shape[0], K = g.shape[1], r, k
    out_arr = np.empty(B, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double* row = <double*>malloc(K * sizeof(double))
    cdef double d, best
    if row == NULL:
        raise MemoryError()
    try:
        with nogil:
            for r in range(B):
                for k in range(K):
                    row[k] = g[r, k]
                if K <= 64:
                    _insertion_sort(row, K)
                else:
                    qsort(row, K, sizeof(double), _cmp_double)
                best = row[1] - row[0]
                for k in range(2, K):
                    d = row[k] - row[k - 1]
                    if d < best:
                        best = d
                out[r] = best * best
    finally:
        free(row)
    return out_arr
