# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled CART regression kernel.

Mirrors ``_tree_py`` operation for operation, so both backends grow
bit-identical trees. Samples in a node occupy a contiguous segment of
``order[f]`` for every feature ``f``; each segment is kept sorted by
(feature value, row index). Row ``p`` of ``order`` keeps row-index order and
is used for the node mean, SSE and centred sum.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef double REL_TOL = 1e-12


cdef inline uint64_t _splitmix_next(uint64_t* state) noexcept nogil:
    cdef uint64_t z
    state[0] += 0x9E3779B97F4A7C15ULL
    z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef int _sample_features(uint64_t* state, int p, int mtry, int64_t* pool, int64_t* out) noexcept nogil:
    cdef int i, j, a, b
    cdef int64_t tmp
    for i in range(p):
        pool[i] = i
    for i in range(mtry):
        j = i + <int>(_splitmix_next(state) % <uint64_t>(p - i))
        tmp = pool[i]
        pool[i] = pool[j]
        pool[j] = tmp
    for i in range(mtry):
        out[i] = pool[i]
    # insertion sort; mtry is tiny
    for a in range(1, mtry):
        tmp = out[a]
        b = a - 1
        while b >= 0 and out[b] > tmp:
            out[b + 1] = out[b]
            b -= 1
        out[b + 1] = tmp
    return 0


cdef int _node_split(
    const double[:, ::1] X,
    const double[::1] y,
    int64_t[:, ::1] order,
    int start,
    int end,
    double mean,
    double rsum,
    double sse,
    int64_t* cand,
    int n_cand,
    int min_leaf,
    double* gains,
    int64_t* out_feature,
    double* out_threshold,
    double* out_gain,
) noexcept nogil:
    """Best split of one node. Returns 1 if a split exists, else 0.

    ``gains`` has room for n_cand * (end - start) entries.
    """
    cdef int m = end - start
    cdef int c, j, f, pos, k
    cdef int64_t row, nxt
    cdef double s_left, s_right, n_left, n_right, g, best, tol, a, b, thr
    cdef double dm = <double>m
    tol = REL_TOL * sse
    best = -1.0
    for c in range(n_cand):
        f = <int>cand[c]
        s_left = 0.0
        for j in range(m - 1):
            row = order[f, start + j]
            nxt = order[f, start + j + 1]
            s_left = s_left + (y[row] - mean)
            k = c * m + j
            n_left = <double>(j + 1)
            n_right = dm - n_left
            if j + 1 < min_leaf or m - j - 1 < min_leaf or not (X[row, f] < X[nxt, f]):
                gains[k] = -1.0
                continue
            s_right = rsum - s_left
            g = s_left * s_left / n_left + s_right * s_right / n_right - rsum * rsum / dm
            gains[k] = g
            if g > best:
                best = g
    if not (best > tol):
        return 0
    for c in range(n_cand):
        f = <int>cand[c]
        for j in range(m - 1):
            k = c * m + j
            if gains[k] >= 0.0 and gains[k] >= best - tol:
                a = X[order[f, start + j], f]
                b = X[order[f, start + j + 1], f]
                thr = (a + b) / 2.0
                if thr >= b:
                    thr = a
                out_feature[0] = f
                out_threshold[0] = thr
                out_gain[0] = gains[k]
                return 1
    return 0


cdef void _node_stats(
    const double[::1] y, int64_t[:, ::1] order, int p, int start, int end,
    double* mean, double* rsum, double* sse, int* constant,
) noexcept nogil:
    cdef int j
    cdef int64_t row
    cdef double s = 0.0, r, first
    cdef int m = end - start
    first = y[order[p, start]]
    constant[0] = 1
    for j in range(start, end):
        row = order[p, j]
        s = s + y[row]
        if y[row] != first:
            constant[0] = 0
    mean[0] = s / <double>m
    rsum[0] = 0.0
    sse[0] = 0.0
    for j in range(start, end):
        r = y[order[p, j]] - mean[0]
        rsum[0] = rsum[0] + r
        sse[0] = sse[0] + r * r


def _presort(X):
    n, p = X.shape
    order = np.empty((p + 1, n), dtype=np.int64)
    for f in range(p):
        order[f] = np.argsort(X[:, f], kind="stable")
    order[p] = np.arange(n, dtype=np.int64)
    return order


def best_split(X, y, candidates, int min_leaf, double n_total):
    """Single-node split search over all rows of ``X``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    cdef int n = X.shape[0]
    cdef int p = X.shape[1]
    cdef int64_t[::1] cand = np.ascontiguousarray(candidates, dtype=np.int64)
    cdef int64_t[:, ::1] order = _presort(X)
    cdef double[::1] gains = np.empty(max(1, len(cand) * n), dtype=np.float64)
    cdef double mean, rsum, sse, thr, gain
    cdef int constant, found
    cdef int64_t feat
    if n < 2 or len(cand) == 0:
        return None
    _node_stats(y, order, p, 0, n, &mean, &rsum, &sse, &constant)
    if constant:
        return None
    found = _node_split(X, y, order, 0, n, mean, rsum, sse, &cand[0], len(cand),
                        min_leaf, &gains[0], &feat, &thr, &gain)
    if not found:
        return None
    return int(feat), float(thr), float(gain / n_total)


def build_tree(X, y, int max_depth, int min_leaf, int mtry, uint64_t feature_seed):
    """Grow a tree depth first (preorder node numbering, left child first).

    Returns arrays (feature, threshold, left, right, value, n_samples,
    risk_reduction); leaves have feature = -1 and children -1.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[:, ::1] Xv = X
    cdef const double[::1] yv = y
    cdef int n = X.shape[0]
    cdef int p = X.shape[1]
    cdef int capacity = 2 * n + 1
    cdef int64_t[:, ::1] order = _presort(X)

    feature_a = np.full(capacity, -1, dtype=np.int64)
    threshold_a = np.zeros(capacity, dtype=np.float64)
    left_a = np.full(capacity, -1, dtype=np.int64)
    right_a = np.full(capacity, -1, dtype=np.int64)
    value_a = np.zeros(capacity, dtype=np.float64)
    count_a = np.zeros(capacity, dtype=np.int64)
    delta_a = np.zeros(capacity, dtype=np.float64)
    cdef int64_t[::1] feature = feature_a
    cdef double[::1] threshold = threshold_a
    cdef int64_t[::1] left = left_a
    cdef int64_t[::1] right = right_a
    cdef double[::1] value = value_a
    cdef int64_t[::1] count = count_a
    cdef double[::1] delta = delta_a

    # stack entries: start, end, depth, parent, is_left
    cdef int64_t[:, ::1] stack = np.empty((capacity, 5), dtype=np.int64)
    cdef int64_t[::1] pool = np.empty(max(p, 1), dtype=np.int64)
    cdef int64_t[::1] cand = np.empty(max(p, 1), dtype=np.int64)
    cdef double[::1] gains = np.empty(max(1, p * n), dtype=np.float64)
    cdef unsigned char[::1] goes_left = np.zeros(max(n, 1), dtype=np.uint8)
    cdef int64_t[::1] buf = np.empty(max(n, 1), dtype=np.int64)
    cdef uint64_t state = feature_seed
    cdef int top = 0, n_nodes = 0
    cdef int start, end, depth, node, parent, is_left, n_cand, constant, found, r, j, nl, wl, wr
    cdef int64_t feat, row
    cdef double mean, rsum, sse, thr, gain, dn = <double>n

    if n == 0:
        raise ValueError("cannot grow a tree on zero samples")
    with nogil:
        stack[0, 0] = 0
        stack[0, 1] = n
        stack[0, 2] = 0
        stack[0, 3] = -1
        stack[0, 4] = 0
        top = 1
        while top > 0:
            top -= 1
            start = <int>stack[top, 0]
            end = <int>stack[top, 1]
            depth = <int>stack[top, 2]
            parent = <int>stack[top, 3]
            is_left = <int>stack[top, 4]
            node = n_nodes
            n_nodes += 1
            if parent >= 0:
                if is_left:
                    left[parent] = node
                else:
                    right[parent] = node
            _node_stats(yv, order, p, start, end, &mean, &rsum, &sse, &constant)
            value[node] = mean
            count[node] = end - start
            if depth >= max_depth or end - start < 2 * min_leaf or constant:
                continue
            if mtry < p:
                _sample_features(&state, p, mtry, &pool[0], &cand[0])
                n_cand = mtry
            else:
                for j in range(p):
                    cand[j] = j
                n_cand = p
            found = _node_split(Xv, yv, order, start, end, mean, rsum, sse, &cand[0], n_cand,
                                min_leaf, &gains[0], &feat, &thr, &gain)
            if not found:
                continue
            feature[node] = feat
            threshold[node] = thr
            delta[node] = gain / dn
            for j in range(start, end):
                row = order[p, j]
                goes_left[row] = 1 if Xv[row, feat] <= thr else 0
            nl = 0
            for r in range(p + 1):
                wl = start
                wr = 0
                for j in range(start, end):
                    row = order[r, j]
                    if goes_left[row]:
                        order[r, wl] = row
                        wl += 1
                    else:
                        buf[wr] = row
                        wr += 1
                for j in range(wr):
                    order[r, wl + j] = buf[j]
                nl = wl - start
            # right pushed first so the left subtree is numbered next
            stack[top, 0] = start + nl
            stack[top, 1] = end
            stack[top, 2] = depth + 1
            stack[top, 3] = node
            stack[top, 4] = 0
            top += 1
            stack[top, 0] = start
            stack[top, 1] = start + nl
            stack[top, 2] = depth + 1
            stack[top, 3] = node
            stack[top, 4] = 1
            top += 1

    return (
        feature_a[:n_nodes].copy(),
        threshold_a[:n_nodes].copy(),
        left_a[:n_nodes].copy(),
        right_a[:n_nodes].copy(),
        value_a[:n_nodes].copy(),
        count_a[:n_nodes].copy(),
        delta_a[:n_nodes].copy(),
    )


def apply_tree(X, const int64_t[::1] feature, const double[::1] threshold,
               const int64_t[::1] left, const int64_t[::1] right, const double[::1] value):
    """Leaf value reached by each row of ``X``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] Xv = X
    cdef int n = X.shape[0]
    out_a = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_a
    cdef int i
    cdef int64_t node
    with nogil:
        for i in range(n):
            node = 0
            while feature[node] >= 0:
                if Xv[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[i] = value[node]
    return out_a
