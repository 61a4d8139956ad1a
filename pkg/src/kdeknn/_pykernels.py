"""Pure-Python/numpy twins of the compiled kernels in ``_kernels.pyx``.

Same names, same arguments, same in-place outputs. Arithmetic that feeds an
exact comparison is written in the same order as the compiled loop.
"""

import numpy as np

TAU = 1e-12
_CHUNK = 256


def _sq_dist_rows(points, q):
    acc = np.zeros(points.shape[0])
    for j in range(points.shape[1]):
        diff = points[:, j] - q[j]
        acc += diff * diff
    return acc


# ---------------------------------------------------------------- KD-tree

class _Search:
    __slots__ = ("tree", "k", "idx", "d2")

    def __init__(self, tree, k):
        self.tree = tree
        self.k = k
        self.idx = np.empty(0, dtype=np.intp)
        self.d2 = np.empty(0)

    def run(self, node, q):
        data, order, node_lo, node_hi, split_dim, split_val, left, right = self.tree
        dim = split_dim[node]
        if dim < 0:
            lo, hi = node_lo[node], node_hi[node]
            cand_d2 = np.concatenate([self.d2, _sq_dist_rows(data[lo:hi], q)])
            cand_idx = np.concatenate([self.idx, order[lo:hi]])
            keep = np.lexsort((cand_idx, cand_d2))[: self.k]
            self.d2, self.idx = cand_d2[keep], cand_idx[keep]
            return
        diff = q[dim] - split_val[node]
        if diff < 0:
            near, far = left[node], right[node]
        else:
            near, far = right[node], left[node]
        self.run(near, q)
        if len(self.d2) < self.k or diff * diff <= self.d2[-1]:
            self.run(far, q)


def kdtree_query(data, order, node_lo, node_hi, split_dim, split_val, left, right,
                 queries, k, out_idx, out_d2):
    tree = (data, order, node_lo, node_hi, split_dim, split_val, left, right)
    for qi in range(queries.shape[0]):
        search = _Search(tree, k)
        search.run(0, queries[qi])
        out_idx[qi, :] = search.idx
        out_d2[qi, :] = search.d2


# ---------------------------------------------------------------- KDE

def kde_logsumexp(support, queries, out):
    for start in range(0, queries.shape[0], _CHUNK):
        q = queries[start:start + _CHUNK]
        d2 = np.zeros((q.shape[0], support.shape[0]))
        for j in range(support.shape[1]):
            diff = q[:, j, None] - support[None, :, j]
            d2 += diff * diff
        e = -0.5 * d2
        mx = e.max(axis=1)
        out[start:start + q.shape[0]] = mx + np.log(np.exp(e - mx[:, None]).sum(axis=1))


# ---------------------------------------------------------------- SMO

def smo_solve(K, y, C, eps, max_iter, alpha, G):
    diag = np.ascontiguousarray(np.diagonal(K))
    pos = y > 0
    neg = ~pos
    it = 0
    while it < max_iter:
        up = (pos & (alpha < C)) | (neg & (alpha > 0))
        if not up.any():
            break
        v = np.where(up, -y * G, -np.inf)
        i = int(np.argmax(v))
        Gmax = v[i]

        low = (pos & (alpha > 0)) | (neg & (alpha < C))
        w = y * G
        Gmax2 = w[low].max() if low.any() else -np.inf
        gd = Gmax + w
        cand = low & (gd > 0)
        if Gmax + Gmax2 < eps or not cand.any():
            break
        quad = K[i, i] + diag - 2.0 * K[i]
        quad = np.where(quad > 0, quad, TAU)
        obj = np.where(cand, -(gd * gd) / quad, np.inf)
        j = int(np.argmin(obj))
        it += 1

        yi, yj = y[i], y[j]
        old_ai, old_aj = alpha[i], alpha[j]
        q = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if not q > 0:
            q = TAU
        ai, aj = old_ai, old_aj
        if yi != yj:
            delta = (-G[i] - G[j]) / q
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            delta = (G[i] - G[j]) / q
            total = ai + aj
            ai -= delta
            aj += delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        dAi = alpha[i] - old_ai
        dAj = alpha[j] - old_aj
        G += (yi * y) * K[i] * dAi + (yj * y) * K[j] * dAj
    return it


# ---------------------------------------------------------------- CART

def _best_split(X, y, idx, P, f, min_leaf):
    vals = X[idx, f]
    order = np.argsort(vals, kind="stable")
    sv = vals[order]
    if sv[0] == sv[-1]:
        return None
    m = len(idx)
    lp = np.cumsum(y[idx][order].astype(np.intp))[:-1]
    p = np.arange(1, m, dtype=np.intp)
    ln = p - lp
    rp = P - lp
    rn = (m - p) - rp
    valid = (p >= min_leaf) & (m - p >= min_leaf) & (sv[:-1] < sv[1:])
    if not valid.any():
        return -np.inf, 0.0
    crit = (lp * lp + ln * ln).astype(np.float64) / p.astype(np.float64) + \
        (rp * rp + rn * rn).astype(np.float64) / (m - p).astype(np.float64)
    crit = np.where(valid, crit, -np.inf)
    b = int(np.argmax(crit))
    va, vb = sv[b], sv[b + 1]
    thr = va / 2.0 + vb / 2.0
    if thr >= vb:
        thr = va
    return crit[b], thr


def build_tree(X, y, keys, max_depth, min_split, min_leaf, max_features,
               feature, threshold, left, right, n_pos, n_node):
    X = np.asarray(X)
    y = np.asarray(y)
    cap = keys.shape[0]
    count = 0
    # (sample indices, depth, parent, is_left); right pushed first -> preorder
    stack = [(np.arange(X.shape[0], dtype=np.intp), 0, -1, False)]
    while stack:
        idx, depth, parent, is_left = stack.pop()
        node = count
        count += 1
        if node >= cap:
            raise RuntimeError("tree node capacity exceeded")
        if parent >= 0:
            if is_left:
                left[parent] = node
            else:
                right[parent] = node
        m = len(idx)
        P = int(y[idx].sum(dtype=np.intp))
        n_pos[node] = P
        n_node[node] = m
        feature[node] = -1
        threshold[node] = 0.0
        left[node] = -1
        right[node] = -1
        if depth >= max_depth or m < min_split or m < 2 * min_leaf or P == 0 or P == m:
            continue

        best_f, best_crit, best_thr = -1, -np.inf, 0.0
        examined = 0
        for f in np.argsort(keys[node], kind="stable"):
            if examined >= max_features:
                break
            found = _best_split(X, y, idx, P, f, min_leaf)
            if found is None:
                continue
            examined += 1
            crit, thr = found
            if crit > best_crit:
                best_f, best_crit, best_thr = int(f), crit, thr
        if best_f < 0:
            continue

        feature[node] = best_f
        threshold[node] = best_thr
        go_left = X[idx, best_f] <= best_thr
        stack.append((idx[~go_left], depth + 1, node, False))
        stack.append((idx[go_left], depth + 1, node, True))
    return count


def forest_votes(X, roots, feature, threshold, left, right, leaf_vote, out):
    m = X.shape[0]
    rows = np.arange(m)
    votes = np.zeros(m, dtype=np.intp)
    for root in roots:
        node = np.full(m, root, dtype=np.intp)
        f = feature[node]
        active = f >= 0
        while active.any():
            a = rows[active]
            fa = f[active]
            na = node[active]
            go_left = X[a, fa] <= threshold[na]
            node[active] = np.where(go_left, left[na], right[na])
            f = feature[node]
            active = f >= 0
        votes += leaf_vote[node]
    out[:] = votes
