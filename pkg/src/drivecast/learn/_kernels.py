"""Compiled kernels for growing and evaluating binary regression trees.

One flat-array tree representation is shared by the single tree, the
forest, and the model-tree grower.  Nodes live in parallel arrays; leaves
have feature == -1.  Categorical splits store two bitsets per node: the
codes present in the node at fit time and the subset routed left.  Codes
absent from the node (or unknown at prediction time) follow the node's
majority branch.

Split criteria:
  criterion 0 (variance): gain = (sl^2/nl + sr^2/nr - s^2/m) / m,
      the exact decrease in biased node variance weighted by node share.
  criterion 1 (sd reduction): gain = sd - (nl*sd_l + nr*sd_r) / m.

Ties are broken toward the lowest feature index, then the lowest
threshold (numeric) or shortest left prefix (categorical), by scanning
features in ascending order and accepting only strict improvements.
"""

from __future__ import annotations

import numpy as np
from numba import njit

LEAF = -1
U64_1 = np.uint64(1)
U64_6 = np.uint64(6)
U64_63 = np.uint64(63)


@njit(cache=True, nogil=True, inline="always")
def _rng_next(state):
    # xorshift64*; state must stay nonzero
    state ^= state >> np.uint64(12)
    state ^= state << np.uint64(25)
    state ^= state >> np.uint64(27)
    return state, state * np.uint64(0x2545F4914F6CDD1D)


@njit(cache=True, nogil=True, inline="always")
def _rng_seed(seed):
    # splitmix64 of the seed so that 0 is a usable seed
    z = np.uint64(seed) + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    if z == np.uint64(0):
        z = np.uint64(0x9E3779B97F4A7C15)
    return z


@njit(cache=True, nogil=True)
def _sort_pairs(x, y, n):
    """In-place ascending sort of x[:n] with y permuted alongside.

    Three-way quicksort (duplicate-heavy KPI columns would degrade a
    two-way partition), median-of-three pivot, insertion sort below 24,
    smaller side first so the explicit stack stays logarithmic.
    """
    stack_lo = np.empty(96, np.int64)
    stack_hi = np.empty(96, np.int64)
    top = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    top = 1
    while top > 0:
        top -= 1
        lo = stack_lo[top]
        hi = stack_hi[top]
        while hi - lo > 24:
            mid = (lo + hi) // 2
            a = x[lo]
            b = x[mid]
            c = x[hi - 1]
            if a > b:
                t = a; a = b; b = t
            if b > c:
                b = c
                if a > b:
                    b = a
            p = b
            i = lo
            lt = lo
            gt = hi - 1
            while i <= gt:
                v = x[i]
                if v < p:
                    x[i] = x[lt]; x[lt] = v
                    ty = y[i]; y[i] = y[lt]; y[lt] = ty
                    i += 1
                    lt += 1
                elif v > p:
                    x[i] = x[gt]; x[gt] = v
                    ty = y[i]; y[i] = y[gt]; y[gt] = ty
                    gt -= 1
                else:
                    i += 1
            if lt - lo >= hi - gt - 1:
                stack_lo[top] = lo
                stack_hi[top] = lt
                top += 1
                lo = gt + 1
            else:
                stack_lo[top] = gt + 1
                stack_hi[top] = hi
                top += 1
                hi = lt
        for i in range(lo + 1, hi):
            v = x[i]
            ty = y[i]
            j = i - 1
            while j >= lo and x[j] > v:
                x[j + 1] = x[j]
                y[j + 1] = y[j]
                j -= 1
            x[j + 1] = v
            y[j + 1] = ty
    return


@njit(cache=True, nogil=True)
def grow_tree(X, y, is_cat, n_codes, min_child, min_node, max_depth, mtry,
              seed, criterion, sd_floor):
    """Greedy top-down growth; returns flat node arrays.

    X: (n, d) float64, numeric columns imputed, categorical columns holding
       dense codes in [0, n_codes) as floats.
    min_child: smallest admissible child size.
    min_node: nodes smaller than this are not split at all.
    max_depth: -1 for unlimited.
    mtry: features considered per node; >= d disables subsampling (and the
       RNG is never consulted, so equal seeds or not matters only when
       mtry < d).
    criterion/sd_floor: see module docstring; sd_floor only stops growth
       for criterion 1.
    """
    n, d = X.shape
    cap = 2 * n + 1
    feature = np.full(cap, LEAF, np.int64)
    threshold = np.full(cap, np.nan, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap, np.float64)
    n_node = np.zeros(cap, np.int64)
    impurity = np.zeros(cap, np.float64)
    gain = np.zeros(cap, np.float64)
    default_left = np.zeros(cap, np.uint8)
    n_words = max(1, (n_codes + 63) // 64)
    cat_left = np.zeros((cap, n_words), np.uint64)
    cat_present = np.zeros((cap, n_words), np.uint64)
    depth_of = np.zeros(cap, np.int64)

    idx = np.arange(n)
    tmp = np.empty(n, np.int64)
    bx = np.empty(n, np.float64)
    by = np.empty(n, np.float64)
    ccnt = np.zeros(max(n_codes, 1), np.int64)
    csum = np.zeros(max(n_codes, 1), np.float64)
    csum2 = np.zeros(max(n_codes, 1), np.float64)
    cats = np.empty(max(n_codes, 1), np.int64)
    ckey = np.empty(max(n_codes, 1), np.float64)
    best_cats = np.empty(max(n_codes, 1), np.int64)
    fsel = np.empty(d, np.int64)
    fpool = np.empty(d, np.int64)

    stack_node = np.empty(n + 2, np.int64)
    stack_lo = np.empty(n + 2, np.int64)
    stack_hi = np.empty(n + 2, np.int64)
    state = _rng_seed(seed)

    node_count = 1
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    depth_of[0] = 0
    top = 1
    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        depth = depth_of[node]
        m = hi - lo

        s1 = 0.0
        s2 = 0.0
        for i in range(lo, hi):
            v = y[idx[i]]
            s1 += v
            s2 += v * v
        mean = s1 / m
        var = s2 / m - mean * mean
        if var < 0.0:
            var = 0.0
        value[node] = mean
        n_node[node] = m
        impurity[node] = var

        if m < min_node or m < 2 * min_child or var <= 0.0:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue
        if criterion == 1 and np.sqrt(var) < sd_floor:
            continue

        if mtry >= d:
            k_feats = d
            for j in range(d):
                fsel[j] = j
        else:
            # partial Fisher-Yates, then ascending order for the tie rule
            k_feats = mtry
            for j in range(d):
                fpool[j] = j
            for j in range(mtry):
                state, r = _rng_next(state)
                pick = j + np.int64(r % np.uint64(d - j))
                t = fpool[j]; fpool[j] = fpool[pick]; fpool[pick] = t
                fsel[j] = fpool[j]
            for j in range(1, mtry):
                v = fsel[j]
                q = j - 1
                while q >= 0 and fsel[q] > v:
                    fsel[q + 1] = fsel[q]
                    q -= 1
                fsel[q + 1] = v

        best_gain = 0.0
        best_f = -1
        best_thr = 0.0
        best_ncat = 0
        best_nl = 0
        node_sd = np.sqrt(var)

        for jj in range(k_feats):
            f = fsel[jj]
            if is_cat[f]:
                n_cats = 0
                for i in range(lo, hi):
                    code = np.int64(X[idx[i], f])
                    if ccnt[code] == 0:
                        cats[n_cats] = code
                        n_cats += 1
                    ccnt[code] += 1
                    csum[code] += y[idx[i]]
                    csum2[code] += y[idx[i]] * y[idx[i]]
                if n_cats >= 2:
                    if n_cats <= 32:
                        for q in range(n_cats):
                            ckey[q] = csum[cats[q]] / ccnt[cats[q]]
                    else:
                        for q in range(n_cats):
                            ckey[q] = -np.float64(ccnt[cats[q]])
                    # insertion sort of cats[:n_cats] by key, code tiebreak
                    for q in range(1, n_cats):
                        kv = ckey[q]
                        cv = cats[q]
                        w = q - 1
                        while w >= 0 and (ckey[w] > kv or (ckey[w] == kv and cats[w] > cv)):
                            ckey[w + 1] = ckey[w]
                            cats[w + 1] = cats[w]
                            w -= 1
                        ckey[w + 1] = kv
                        cats[w + 1] = cv
                    nl = 0
                    sl = 0.0
                    sl2 = 0.0
                    for p in range(n_cats - 1):
                        c = cats[p]
                        nl += ccnt[c]
                        sl += csum[c]
                        sl2 += csum2[c]
                        nr = m - nl
                        if nl < min_child or nr < min_child:
                            continue
                        sr = s1 - sl
                        if criterion == 0:
                            g = (sl * sl / nl + sr * sr / nr - s1 * s1 / m) / m
                        else:
                            vl = sl2 / nl - (sl / nl) * (sl / nl)
                            vr = (s2 - sl2) / nr - (sr / nr) * (sr / nr)
                            if vl < 0.0:
                                vl = 0.0
                            if vr < 0.0:
                                vr = 0.0
                            g = node_sd - (nl * np.sqrt(vl) + nr * np.sqrt(vr)) / m
                        if g > best_gain:
                            best_gain = g
                            best_f = f
                            best_ncat = p + 1
                            best_nl = nl
                            for q in range(n_cats):
                                best_cats[q] = cats[q]
                for q in range(n_cats):
                    c = cats[q]
                    ccnt[c] = 0
                    csum[c] = 0.0
                    csum2[c] = 0.0
            else:
                for i in range(lo, hi):
                    bx[i - lo] = X[idx[i], f]
                    by[i - lo] = y[idx[i]]
                _sort_pairs(bx, by, m)
                if bx[0] == bx[m - 1]:
                    continue
                nl = 0
                sl = 0.0
                sl2 = 0.0
                for i in range(m - 1):
                    v = by[i]
                    nl += 1
                    sl += v
                    sl2 += v * v
                    if bx[i + 1] <= bx[i]:
                        continue
                    if nl < min_child or m - nl < min_child:
                        continue
                    nr = m - nl
                    sr = s1 - sl
                    if criterion == 0:
                        g = (sl * sl / nl + sr * sr / nr - s1 * s1 / m) / m
                    else:
                        vl = sl2 / nl - (sl / nl) * (sl / nl)
                        vr = (s2 - sl2) / nr - (sr / nr) * (sr / nr)
                        if vl < 0.0:
                            vl = 0.0
                        if vr < 0.0:
                            vr = 0.0
                        g = node_sd - (nl * np.sqrt(vl) + nr * np.sqrt(vr)) / m
                    if g > best_gain:
                        thr = 0.5 * (bx[i] + bx[i + 1])
                        if thr >= bx[i + 1]:   # midpoint rounded up to the right value
                            thr = bx[i]
                        best_gain = g
                        best_f = f
                        best_thr = thr
                        best_ncat = 0
                        best_nl = nl

        if best_f < 0 or best_gain <= 0.0:
            continue

        # partition idx[lo:hi] so the left child occupies the front
        k = 0
        if is_cat[best_f]:
            for q in range(best_ncat):
                c = best_cats[q]
                cat_left[node, c >> 6] |= U64_1 << np.uint64(c & 63)
            # mark every code present in the node
            for i in range(lo, hi):
                c = np.int64(X[idx[i], best_f])
                cat_present[node, c >> 6] |= U64_1 << np.uint64(c & 63)
            for i in range(lo, hi):
                c = np.int64(X[idx[i], best_f])
                if (cat_left[node, c >> 6] >> np.uint64(c & 63)) & U64_1:
                    tmp[k] = idx[i]
                    k += 1
            for i in range(lo, hi):
                c = np.int64(X[idx[i], best_f])
                if not ((cat_left[node, c >> 6] >> np.uint64(c & 63)) & U64_1):
                    tmp[k] = idx[i]
                    k += 1
        else:
            for i in range(lo, hi):
                if X[idx[i], best_f] <= best_thr:
                    tmp[k] = idx[i]
                    k += 1
            for i in range(lo, hi):
                if not (X[idx[i], best_f] <= best_thr):
                    tmp[k] = idx[i]
                    k += 1
        for i in range(m):
            idx[lo + i] = tmp[i]

        nl = best_nl
        feature[node] = best_f
        if not is_cat[best_f]:
            threshold[node] = best_thr
        gain[node] = best_gain
        default_left[node] = 1 if nl >= m - nl else 0
        lid = node_count
        rid = node_count + 1
        node_count += 2
        left[node] = lid
        right[node] = rid
        depth_of[lid] = depth + 1
        depth_of[rid] = depth + 1
        stack_node[top] = rid
        stack_lo[top] = lo + nl
        stack_hi[top] = hi
        top += 1
        stack_node[top] = lid
        stack_lo[top] = lo
        stack_hi[top] = lo + nl
        top += 1

    return (feature[:node_count], threshold[:node_count], left[:node_count],
            right[:node_count], value[:node_count], n_node[:node_count],
            impurity[:node_count], gain[:node_count],
            default_left[:node_count], cat_left[:node_count],
            cat_present[:node_count])


@njit(cache=True, nogil=True)
def predict_tree(feature, threshold, left, right, value, default_left,
                 cat_left, cat_present, is_cat, X, out):
    n = X.shape[0]
    for r in range(n):
        node = 0
        while feature[node] != LEAF:
            f = feature[node]
            if is_cat[f]:
                go_left = default_left[node] == 1
                code = np.int64(X[r, f])
                if code >= 0:
                    w = code >> 6
                    b = np.uint64(code & 63)
                    if (cat_present[node, w] >> b) & U64_1:
                        go_left = ((cat_left[node, w] >> b) & U64_1) == U64_1
                node = left[node] if go_left else right[node]
            else:
                node = left[node] if X[r, f] <= threshold[node] else right[node]
        out[r] = value[node]
    return out
