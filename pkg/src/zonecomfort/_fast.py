"""Numba-compiled numerical cores: SMO for epsilon-SVR and CART forests.

These functions operate on plain float64 arrays; all object-level wrapping
lives in learners.py.
"""

from __future__ import annotations

import numpy as np
from numba import njit


# ---------------------------------------------------------------------------
# SMO solver for the epsilon-SVR dual.
#
# Variables theta in [0, C]^{2l}: the first l are alpha, the last l are
# alpha-star. With d_i = +1 for alpha and -1 for alpha-star, the dual is
#   minimize 1/2 theta^T Q theta + p^T theta,  Q_ij = d_i d_j K(x_i, x_j),
#   p_i = eps - y_i (alpha side), eps + y_i (star side),
#   subject to d^T theta = 0, 0 <= theta <= C.
# Pair selection is the maximal violating pair on the maintained gradient.
# ---------------------------------------------------------------------------


@njit(cache=True)
def smo_solve(K, y, C, epsilon, tol, max_iter):
    """Returns (beta, bias, iterations, gap, dual_objective, converged).

    beta = alpha - alpha_star per training point; dual_objective is the value
    of the maximization form of the dual at the returned point.
    """
    l = y.shape[0]
    n = 2 * l
    theta = np.zeros(n)
    p = np.empty(n)
    for i in range(l):
        p[i] = epsilon - y[i]
        p[l + i] = epsilon + y[i]
    g = p.copy()  # gradient of the minimization objective at theta = 0
    Kdiag = np.empty(l)
    for i in range(l):
        Kdiag[i] = K[i, i]

    it = 0
    gap = np.inf
    while it < max_iter:
        # First index: maximal -d_i g_i over I_up.
        m_val = -np.inf
        m_idx = -1
        for i in range(n):
            d = 1.0 if i < l else -1.0
            v = -d * g[i]
            up = theta[i] < C if i < l else theta[i] > 0.0
            if up and v > m_val:
                m_val = v
                m_idx = i
        i = m_idx
        ki = i % l
        Ki = K[ki]
        kii = Ki[ki]

        # Second index: largest second-order objective decrease over I_low;
        # track M alongside for the stopping gap.
        M_val = np.inf
        best_dec = -np.inf
        j = -1
        for k in range(n):
            d = 1.0 if k < l else -1.0
            v = -d * g[k]
            low = theta[k] > 0.0 if k < l else theta[k] < C
            if not low:
                continue
            if v < M_val:
                M_val = v
            diff = m_val - v
            if diff > 0.0:
                kk = k if k < l else k - l
                a_k = kii + Kdiag[kk] - 2.0 * Ki[kk]
                if a_k <= 1e-12:
                    a_k = 1e-12
                dec = diff * diff / a_k
                if dec > best_dec:
                    best_dec = dec
                    j = k
        gap = m_val - M_val
        if gap < tol or j < 0:
            break

        di = 1.0 if i < l else -1.0
        dj = 1.0 if j < l else -1.0
        kj = j % l
        Kj = K[kj]
        a = kii + Kj[kj] - 2.0 * Ki[kj]
        if a <= 1e-12:
            a = 1e-12
        t = (m_val - (-dj * g[j])) / a
        # Box caps along the feasible direction (theta_i += di*t,
        # theta_j -= dj*t).
        cap_i = C - theta[i] if di > 0 else theta[i]
        cap_j = theta[j] if dj > 0 else C - theta[j]
        if t > cap_i:
            t = cap_i
        if t > cap_j:
            t = cap_j
        if t <= 0.0:
            break
        theta[i] += di * t
        theta[j] -= dj * t
        for k in range(l):
            delta = t * (Ki[k] - Kj[k])
            g[k] += delta
            g[l + k] -= delta
        it += 1

    # Bias: average of -d_i g_i over strictly free variables, else midpoint
    # of the violating-pair bounds.
    b_sum = 0.0
    b_cnt = 0
    margin = 1e-8 * C
    for i in range(n):
        if margin < theta[i] < C - margin:
            d = 1.0 if i < l else -1.0
            b_sum += -d * g[i]
            b_cnt += 1
    if b_cnt > 0:
        bias = b_sum / b_cnt
    else:
        m_val = -np.inf
        M_val = np.inf
        for i in range(n):
            d = 1.0 if i < l else -1.0
            v = -d * g[i]
            up = theta[i] < C if i < l else theta[i] > 0.0
            low = theta[i] > 0.0 if i < l else theta[i] < C
            if up and v > m_val:
                m_val = v
            if low and v < M_val:
                M_val = v
        bias = 0.5 * (m_val + M_val)

    beta = np.empty(l)
    for i in range(l):
        beta[i] = theta[i] - theta[l + i]
    # Minimization objective = 1/2 theta^T (g + p); dual max value negates it.
    obj = 0.0
    for i in range(n):
        obj += theta[i] * (g[i] + p[i])
    dual_objective = -0.5 * obj
    converged = gap < tol
    return beta, bias, it, gap, dual_objective, converged


# ---------------------------------------------------------------------------
# CART regression trees.
#
# Trees are stored as flat parallel arrays. Every node keeps its mean target
# so a tree built deep can be evaluated under a smaller depth cap; greedy
# top-down splitting makes that identical to training with the smaller cap.
#
# Feature columns are sorted once per training set; each bootstrap tree
# derives its per-feature sorted orders from the multiset counts and keeps
# them sorted by stable partitioning at every split, so no per-node sort is
# needed.
# ---------------------------------------------------------------------------


def presort_features(X):
    """Per-feature stable sort orders of the training rows, shape (f, n)."""
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T)


@njit(cache=True)
def build_tree(X, y, base_order, counts, max_depth, min_samples_split):
    """Grow one CART regression tree on the bootstrap multiset `counts`.

    base_order is presort_features(X); counts[r] is how often row r appears
    in the bootstrap sample. Returns (feature, threshold, left, right, value,
    depth, node_count, importance); importance accumulates per-feature SSE
    decrease weighted by 1/n_samples.
    """
    n_rows = X.shape[0]
    n_features = X.shape[1]
    m_total = 0
    for r in range(n_rows):
        m_total += counts[r]

    # Per-feature sorted bootstrap orders (row indices with duplicates) plus
    # a parallel value array so the split scan reads contiguously; targets
    # are read through the order (y is small enough to stay cached).
    orders = np.empty((n_features, m_total), dtype=np.int64)
    fvals = np.empty((n_features, m_total))
    for f in range(n_features):
        pos = 0
        for k in range(n_rows):
            r = base_order[f, k]
            for _ in range(counts[r]):
                orders[f, pos] = r
                fvals[f, pos] = X[r, f]
                pos += 1
    goes_left = np.empty(n_rows, dtype=np.uint8)

    capacity = 2 * m_total + 1
    feature = np.full(capacity, -1, dtype=np.int64)
    threshold = np.zeros(capacity)
    left = np.full(capacity, -1, dtype=np.int64)
    right = np.full(capacity, -1, dtype=np.int64)
    value = np.zeros(capacity)
    depth = np.zeros(capacity, dtype=np.int64)
    importance = np.zeros(n_features)

    stack_node = np.empty(capacity, dtype=np.int64)
    stack_start = np.empty(capacity, dtype=np.int64)
    stack_end = np.empty(capacity, dtype=np.int64)
    stack_depth = np.empty(capacity, dtype=np.int64)
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = m_total
    stack_depth[0] = 0
    top = 1
    node_count = 1

    buf_rows = np.empty(m_total, dtype=np.int64)
    buf_f = np.empty(m_total)

    while top > 0:
        top -= 1
        node = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        d = stack_depth[top]
        m = end - start

        s = 0.0
        ss = 0.0
        for k in range(start, end):
            yv = y[orders[0, k]]
            s += yv
            ss += yv * yv
        mean = s / m
        value[node] = mean
        depth[node] = d
        sse_parent = ss - s * s / m

        if d >= max_depth or m < min_samples_split or sse_parent <= 1e-12:
            continue

        best_score = -np.inf
        best_feature = -1
        best_threshold = 0.0
        for f in range(n_features):
            if fvals[f, start] == fvals[f, end - 1]:
                continue  # constant feature in this node
            s_left = 0.0
            for pos in range(start, end - 1):
                s_left += y[orders[f, pos]]
                v_here = fvals[f, pos]
                v_next = fvals[f, pos + 1]
                if v_next <= v_here:
                    continue
                n_l = pos - start + 1
                n_r = m - n_l
                score = s_left * s_left / n_l + (s - s_left) * (s - s_left) / n_r
                if score > best_score:
                    best_score = score
                    best_feature = f
                    best_threshold = 0.5 * (v_here + v_next)

        if best_feature < 0:
            continue

        # Membership flags per row, then a stable partition of every
        # feature's segment; each segment stays sorted by its own feature.
        for k in range(start, end):
            goes_left[orders[best_feature, k]] = 1 if fvals[best_feature, k] <= best_threshold else 0
        n_l = 0
        for ff in range(n_features):
            pos_l = 0
            pos_r = 0
            for k in range(start, end):
                row = orders[ff, k]
                if goes_left[row] == 1:
                    orders[ff, start + pos_l] = row
                    fvals[ff, start + pos_l] = fvals[ff, k]
                    pos_l += 1
                else:
                    buf_rows[pos_r] = row
                    buf_f[pos_r] = fvals[ff, k]
                    pos_r += 1
            for k in range(pos_r):
                orders[ff, start + pos_l + k] = buf_rows[k]
                fvals[ff, start + pos_l + k] = buf_f[k]
            n_l = pos_l

        sse_children = ss - best_score
        importance[best_feature] += (sse_parent - sse_children) / m_total

        lchild = node_count
        rchild = node_count + 1
        node_count += 2
        feature[node] = best_feature
        threshold[node] = best_threshold
        left[node] = lchild
        right[node] = rchild

        stack_node[top] = lchild
        stack_start[top] = start
        stack_end[top] = start + n_l
        stack_depth[top] = d + 1
        top += 1
        stack_node[top] = rchild
        stack_start[top] = start + n_l
        stack_end[top] = end
        stack_depth[top] = d + 1
        top += 1

    return (
        feature[:node_count],
        threshold[:node_count],
        left[:node_count],
        right[:node_count],
        value[:node_count],
        depth[:node_count],
        node_count,
        importance,
    )


@njit(cache=True)
def predict_tree(X, feature, threshold, left, right, value, depth, depth_cap, out):
    n = X.shape[0]
    for r in range(n):
        node = 0
        while feature[node] >= 0 and depth[node] < depth_cap:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]


@njit(cache=True)
def predict_forest(
    X, features, thresholds, lefts, rights, values, depths, offsets, n_trees, depth_cap
):
    n = X.shape[0]
    acc = np.zeros(n)
    tmp = np.empty(n)
    for t in range(n_trees):
        a = offsets[t]
        b = offsets[t + 1]
        predict_tree(
            X,
            features[a:b],
            thresholds[a:b],
            lefts[a:b],
            rights[a:b],
            values[a:b],
            depths[a:b],
            depth_cap,
            tmp,
        )
        acc += tmp
    return acc / n_trees
