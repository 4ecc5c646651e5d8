"""Pure numpy CART kernel, used when the compiled extension is unavailable.

Every floating-point expression here is evaluated in the same order as in
``_tree_core.pyx`` (sequential sums via ``np.cumsum``, ties in sort order
broken by row index), so the two backends return identical trees.
"""

import numpy as np

from ..rng import SplitMix64, sample_features

REL_TOL = 1e-12


def _node_stats(y, idx):
    ys = y[idx]
    mean = np.cumsum(ys)[-1] / float(len(idx))
    r = ys - mean
    rsum = np.cumsum(r)[-1]
    sse = np.cumsum(r * r)[-1]
    constant = bool(np.all(ys == ys[0]))
    return mean, rsum, sse, constant


def _node_split(X, y, idx, mean, rsum, sse, candidates, min_leaf):
    m = len(idx)
    dm = float(m)
    tol = REL_TOL * sse
    n_left = np.arange(1, m, dtype=np.float64)
    n_right = dm - n_left
    size_ok = (n_left >= min_leaf) & (n_right >= min_leaf)
    per_feature = []
    best = -1.0
    for f in candidates:
        sorted_idx = idx[np.argsort(X[idx, f], kind="stable")]
        v = X[sorted_idx, f]
        s_left = np.cumsum(y[sorted_idx] - mean)[:-1]
        s_right = rsum - s_left
        gains = s_left * s_left / n_left + s_right * s_right / n_right - rsum * rsum / dm
        valid = size_ok & (v[:-1] < v[1:])
        gains = np.where(valid, gains, -1.0)
        if gains.size:
            best = max(best, float(gains.max()))
        per_feature.append((f, v, gains))
    if not best > tol:
        return None
    for f, v, gains in per_feature:
        hits = np.flatnonzero((gains >= 0.0) & (gains >= best - tol))
        if hits.size:
            j = hits[0]
            a, b = v[j], v[j + 1]
            thr = (a + b) / 2.0
            if thr >= b:
                thr = a
            return int(f), float(thr), float(gains[j])
    return None


def best_split(X, y, candidates, min_leaf, n_total):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = X.shape[0]
    candidates = [int(c) for c in candidates]
    if n < 2 or not candidates:
        return None
    idx = np.arange(n)
    mean, rsum, sse, constant = _node_stats(y, idx)
    if constant:
        return None
    found = _node_split(X, y, idx, mean, rsum, sse, candidates, min_leaf)
    if found is None:
        return None
    f, thr, gain = found
    return f, thr, gain / n_total


def build_tree(X, y, max_depth, min_leaf, mtry, feature_seed):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, p = X.shape
    if n == 0:
        raise ValueError("cannot grow a tree on zero samples")
    gen = SplitMix64(feature_seed)
    feature, threshold, left, right, value, count, delta = [], [], [], [], [], [], []
    stack = [(np.arange(n), 0, -1, False)]
    while stack:
        idx, depth, parent, is_left = stack.pop()
        node = len(feature)
        if parent >= 0:
            if is_left:
                left[parent] = node
            else:
                right[parent] = node
        mean, rsum, sse, constant = _node_stats(y, idx)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(mean))
        count.append(len(idx))
        delta.append(0.0)
        if depth >= max_depth or len(idx) < 2 * min_leaf or constant:
            continue
        cand = sample_features(gen, p, mtry) if mtry < p else list(range(p))
        found = _node_split(X, y, idx, mean, rsum, sse, cand, min_leaf)
        if found is None:
            continue
        f, thr, gain = found
        feature[node] = f
        threshold[node] = thr
        delta[node] = gain / float(n)
        mask = X[idx, f] <= thr
        stack.append((idx[~mask], depth + 1, node, False))
        stack.append((idx[mask], depth + 1, node, True))
    return (
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64),
        np.array(count, dtype=np.int64),
        np.array(delta, dtype=np.float64),
    )


def apply_tree(X, feature, threshold, left, right, value):
    X = np.ascontiguousarray(X, dtype=np.float64)
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    active = feature[node] >= 0
    while active.any():
        a = rows[active]
        na = node[a]
        go_left = X[a, feature[na]] <= threshold[na]
        node[a] = np.where(go_left, left[na], right[na])
        active = feature[node] >= 0
    return value[node]
