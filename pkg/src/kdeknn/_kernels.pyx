# cython: language_level=3
"""Compiled inner loops.

Every function here has a twin of the same name and signature in
``_pykernels``; both write into caller-allocated output arrays. Loops that
feed exact comparisons (k-NN distances, tree split criteria, SMO updates)
accumulate in the same order as the fallback so both backends agree bit for
bit. The KDE log-sum-exp is only required to agree to rounding.
"""

from libc.math cimport exp, log, INFINITY
from libc.stdlib cimport malloc, free, qsort

ctypedef Py_ssize_t intp

cdef double TAU = 1e-12


# ---------------------------------------------------------------- KD-tree

cdef struct KDTree:
    const double* data
    const intp* order
    const intp* node_lo
    const intp* node_hi
    const intp* split_dim
    const double* split_val
    const intp* left
    const intp* right
    intp d


cdef inline void _push_best(intp k, intp* count, intp* best_idx, double* best_d2,
                            intp idx, double d2) noexcept nogil:
    cdef intp pos
    if count[0] < k:
        pos = count[0]
        count[0] += 1
    elif d2 < best_d2[k - 1] or (d2 == best_d2[k - 1] and idx < best_idx[k - 1]):
        pos = k - 1
    else:
        return
    while pos > 0 and (best_d2[pos - 1] > d2 or
                       (best_d2[pos - 1] == d2 and best_idx[pos - 1] > idx)):
        best_d2[pos] = best_d2[pos - 1]
        best_idx[pos] = best_idx[pos - 1]
        pos -= 1
    best_d2[pos] = d2
    best_idx[pos] = idx


cdef void _kd_search(KDTree* t, intp node, const double* q, intp k, intp* count,
                     intp* best_idx, double* best_d2) noexcept nogil:
    cdef intp dim = t.split_dim[node]
    cdef intp pos, j, near, far
    cdef double s, diff
    if dim < 0:
        for pos in range(t.node_lo[node], t.node_hi[node]):
            s = 0.0
            for j in range(t.d):
                diff = t.data[pos * t.d + j] - q[j]
                s += diff * diff
            _push_best(k, count, best_idx, best_d2, t.order[pos], s)
        return
    diff = q[dim] - t.split_val[node]
    if diff < 0:
        near = t.left[node]
        far = t.right[node]
    else:
        near = t.right[node]
        far = t.left[node]
    _kd_search(t, near, q, k, count, best_idx, best_d2)
    if count[0] < k or diff * diff <= best_d2[k - 1]:
        _kd_search(t, far, q, k, count, best_idx, best_d2)


def kdtree_query(const double[:, ::1] data, const intp[::1] order,
                 const intp[::1] node_lo, const intp[::1] node_hi,
                 const intp[::1] split_dim, const double[::1] split_val,
                 const intp[::1] left, const intp[::1] right,
                 const double[:, ::1] queries, intp k,
                 intp[:, ::1] out_idx, double[:, ::1] out_d2):
    """Exact k nearest neighbours, ordered by (squared distance, index)."""
    cdef KDTree t
    cdef intp m = queries.shape[0]
    cdef intp qi, count
    if m == 0:
        return
    t.data = &data[0, 0]
    t.order = &order[0]
    t.node_lo = &node_lo[0]
    t.node_hi = &node_hi[0]
    t.split_dim = &split_dim[0]
    t.split_val = &split_val[0]
    t.left = &left[0]
    t.right = &right[0]
    t.d = data.shape[1]
    with nogil:
        for qi in range(m):
            count = 0
            _kd_search(&t, 0, &queries[qi, 0], k, &count, &out_idx[qi, 0], &out_d2[qi, 0])


# ---------------------------------------------------------------- KDE

def kde_logsumexp(const double[:, ::1] support, const double[:, ::1] queries,
                  double[::1] out):
    """out[q] = log sum_i exp(-0.5 * ||queries[q] - support[i]||^2)."""
    cdef intp n = support.shape[0]
    cdef intp d = support.shape[1]
    cdef intp m = queries.shape[0]
    cdef intp qi, i, j
    cdef double s, diff, mx, acc
    cdef double* e = <double*> malloc(n * sizeof(double))
    if e == NULL:
        raise MemoryError()
    try:
        with nogil:
            for qi in range(m):
                mx = -INFINITY
                for i in range(n):
                    s = 0.0
                    for j in range(d):
                        diff = queries[qi, j] - support[i, j]
                        s += diff * diff
                    e[i] = -0.5 * s
                    if e[i] > mx:
                        mx = e[i]
                acc = 0.0
                for i in range(n):
                    acc += exp(e[i] - mx)
                out[qi] = mx + log(acc)
    finally:
        free(e)


# ---------------------------------------------------------------- SMO

def smo_solve(const double[:, ::1] K, const double[::1] y, double C, double eps,
              long max_iter, double[::1] alpha, double[::1] G):
    """Dual SVM by SMO with second-order working-set selection.

    ``alpha`` and ``G`` hold the starting point (normally 0 and -1) and are
    updated in place. Returns the number of iterations; equal to
    ``max_iter`` when the KKT gap did not close.
    """
    cdef intp n = K.shape[0]
    cdef long it = 0
    cdef intp t, i, j
    cdef double Gmax, Gmax2, v, gd, quad, obj, obj_min
    cdef double yi, yj, old_ai, old_aj, delta, diff, total, dAi, dAj
    with nogil:
        while it < max_iter:
            Gmax = -INFINITY
            i = -1
            for t in range(n):
                if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                    v = -y[t] * G[t]
                    if v > Gmax:
                        Gmax = v
                        i = t
            if i < 0:
                break
            Gmax2 = -INFINITY
            j = -1
            obj_min = INFINITY
            for t in range(n):
                if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                    v = y[t] * G[t]
                    if v > Gmax2:
                        Gmax2 = v
                    gd = Gmax + v
                    if gd > 0:
                        quad = K[i, i] + K[t, t] - 2.0 * K[i, t]
                        if not quad > 0:
                            quad = TAU
                        obj = -(gd * gd) / quad
                        if obj < obj_min:
                            obj_min = obj
                            j = t
            if Gmax + Gmax2 < eps or j < 0:
                break
            it += 1

            yi = y[i]
            yj = y[j]
            old_ai = alpha[i]
            old_aj = alpha[j]
            quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
            if not quad > 0:
                quad = TAU
            if yi != yj:
                delta = (-G[i] - G[j]) / quad
                diff = alpha[i] - alpha[j]
                alpha[i] += delta
                alpha[j] += delta
                if diff > 0:
                    if alpha[j] < 0:
                        alpha[j] = 0
                        alpha[i] = diff
                else:
                    if alpha[i] < 0:
                        alpha[i] = 0
                        alpha[j] = -diff
                if diff > 0:
                    if alpha[i] > C:
                        alpha[i] = C
                        alpha[j] = C - diff
                else:
                    if alpha[j] > C:
                        alpha[j] = C
                        alpha[i] = C + diff
            else:
                delta = (G[i] - G[j]) / quad
                total = alpha[i] + alpha[j]
                alpha[i] -= delta
                alpha[j] += delta
                if total > C:
                    if alpha[i] > C:
                        alpha[i] = C
                        alpha[j] = total - C
                else:
                    if alpha[j] < 0:
                        alpha[j] = 0
                        alpha[i] = total
                if total > C:
                    if alpha[j] > C:
                        alpha[j] = C
                        alpha[i] = total - C
                else:
                    if alpha[i] < 0:
                        alpha[i] = 0
                        alpha[j] = total
            dAi = alpha[i] - old_ai
            dAj = alpha[j] - old_aj
            for t in range(n):
                G[t] = G[t] + ((yi * y[t]) * K[i, t] * dAi + (yj * y[t]) * K[j, t] * dAj)
    return it


# ---------------------------------------------------------------- CART

cdef struct Pair:
    double v
    intp i


cdef int _cmp_pair(const void* a, const void* b) noexcept nogil:
    cdef const Pair* pa = <const Pair*> a
    cdef const Pair* pb = <const Pair*> b
    if pa.v < pb.v:
        return -1
    if pa.v > pb.v:
        return 1
    return (pa.i > pb.i) - (pa.i < pb.i)


cdef struct Frame:
    intp start
    intp end
    intp depth
    intp parent
    int is_left


def build_tree(const double[:, ::1] X, const signed char[::1] y,
               const double[:, ::1] keys, intp max_depth, intp min_split,
               intp min_leaf, intp max_features,
               intp[::1] feature, double[::1] threshold, intp[::1] left,
               intp[::1] right, intp[::1] n_pos, intp[::1] n_node):
    """Grow one Gini CART tree in preorder; returns the node count.

    ``keys[node]`` ranks the features examined at that node (ascending key
    first). Leaves get ``feature == -1``.
    """
    cdef intp n = X.shape[0]
    cdef intp d = X.shape[1]
    cdef intp cap = keys.shape[0]
    cdef intp *samples = <intp*> malloc(n * sizeof(intp))
    cdef intp *buf = <intp*> malloc(n * sizeof(intp))
    cdef intp *fo = <intp*> malloc(d * sizeof(intp))
    cdef Pair *pairs = <Pair*> malloc(n * sizeof(Pair))
    cdef Frame *stack = <Frame*> malloc((2 * max_depth + 4) * sizeof(Frame))
    cdef intp top = 0, count = 0, node, m, P, a, b, f, fi, s, p, lp, ln, rp, rn
    cdef intp examined, best_f, nl, nr, tmp
    cdef double crit, best_crit, best_thr, va, vb, thr, kf
    cdef Frame fr
    if samples == NULL or buf == NULL or fo == NULL or pairs == NULL or stack == NULL:
        free(samples); free(buf); free(fo); free(pairs); free(stack)
        raise MemoryError()
    for s in range(n):
        samples[s] = s
    stack[0].start = 0
    stack[0].end = n
    stack[0].depth = 0
    stack[0].parent = -1
    stack[0].is_left = 0
    top = 1
    try:
        with nogil:
            while top > 0:
                top -= 1
                fr = stack[top]
                node = count
                count += 1
                if node >= cap:
                    break
                if fr.parent >= 0:
                    if fr.is_left:
                        left[fr.parent] = node
                    else:
                        right[fr.parent] = node
                m = fr.end - fr.start
                P = 0
                for s in range(fr.start, fr.end):
                    P += y[samples[s]]
                n_pos[node] = P
                n_node[node] = m
                feature[node] = -1
                threshold[node] = 0.0
                left[node] = -1
                right[node] = -1
                if (fr.depth >= max_depth or m < min_split or m < 2 * min_leaf
                        or P == 0 or P == m):
                    continue

                # feature order: ascending key, ties by feature index
                for a in range(d):
                    fo[a] = a
                for a in range(1, d):
                    tmp = fo[a]
                    kf = keys[node, tmp]
                    b = a
                    while b > 0 and keys[node, fo[b - 1]] > kf:
                        fo[b] = fo[b - 1]
                        b -= 1
                    fo[b] = tmp

                best_f = -1
                best_crit = -INFINITY
                best_thr = 0.0
                examined = 0
                for fi in range(d):
                    if examined >= max_features:
                        break
                    f = fo[fi]
                    for s in range(m):
                        pairs[s].i = samples[fr.start + s]
                        pairs[s].v = X[pairs[s].i, f]
                    qsort(pairs, m, sizeof(Pair), _cmp_pair)
                    if pairs[0].v == pairs[m - 1].v:
                        continue
                    examined += 1
                    lp = 0
                    for p in range(1, m):
                        lp += y[pairs[p - 1].i]
                        if p < min_leaf or m - p < min_leaf:
                            continue
                        va = pairs[p - 1].v
                        vb = pairs[p].v
                        if not va < vb:
                            continue
                        ln = p - lp
                        rp = P - lp
                        rn = (m - p) - rp
                        crit = (<double>(lp * lp + ln * ln)) / (<double>p) + \
                               (<double>(rp * rp + rn * rn)) / (<double>(m - p))
                        if crit > best_crit:
                            best_crit = crit
                            best_f = f
                            thr = va / 2.0 + vb / 2.0
                            if thr >= vb:
                                thr = va
                            best_thr = thr
                if best_f < 0:
                    continue

                feature[node] = best_f
                threshold[node] = best_thr
                nl = 0
                nr = 0
                for s in range(fr.start, fr.end):
                    if X[samples[s], best_f] <= best_thr:
                        samples[fr.start + nl] = samples[s]
                        nl += 1
                    else:
                        buf[nr] = samples[s]
                        nr += 1
                for s in range(nr):
                    samples[fr.start + nl + s] = buf[s]
                # right pushed first so the left subtree is numbered first
                stack[top].start = fr.start + nl
                stack[top].end = fr.end
                stack[top].depth = fr.depth + 1
                stack[top].parent = node
                stack[top].is_left = 0
                top += 1
                stack[top].start = fr.start
                stack[top].end = fr.start + nl
                stack[top].depth = fr.depth + 1
                stack[top].parent = node
                stack[top].is_left = 1
                top += 1
    finally:
        free(samples); free(buf); free(fo); free(pairs); free(stack)
    if count > cap:
        raise RuntimeError("tree node capacity exceeded")
    return count


def forest_votes(const double[:, ::1] X, const intp[::1] roots,
                 const intp[::1] feature, const double[::1] threshold,
                 const intp[::1] left, const intp[::1] right,
                 const signed char[::1] leaf_vote, intp[::1] out):
    """out[q] = number of trees whose leaf for X[q] votes class 1."""
    cdef intp m = X.shape[0]
    cdef intp T = roots.shape[0]
    cdef intp qi, t, node, f, votes
    with nogil:
        for qi in range(m):
            votes = 0
            for t in range(T):
                node = roots[t]
                f = feature[node]
                while f >= 0:
                    if X[qi, f] <= threshold[node]:
                        node = left[node]
                    else:
                        node = right[node]
                    f = feature[node]
                votes += leaf_vote[node]
            out[qi] = votes
