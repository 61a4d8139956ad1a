"""Exact Euclidean k-nearest neighbours over a KD-tree."""

from dataclasses import dataclass, field

import numpy as np

from kdeknn._backend import kernels
from kdeknn._parallel import ordered_map, row_chunks
from kdeknn.errors import DimensionMismatchError, InsufficientDataError

DEFAULT_K = 5
LEAF_SIZE = 16


class KDTree:
    """Median-split KD-tree with bucketed leaves.

    Queries are exact. Results are ordered by (distance, stored index), so
    ties always resolve to the lower index, identically to a brute-force
    scan.
    """

    def __init__(self, points, leaf_size=LEAF_SIZE):
        P = np.ascontiguousarray(points, dtype=np.float64)
        if P.ndim != 2 or P.shape[0] == 0:
            raise InsufficientDataError("KD-tree needs a non-empty 2-D point set")
        if not np.isfinite(P).all():
            raise ValueError("points must be finite")
        self.n, self.d = P.shape
        self.leaf_size = max(1, int(leaf_size))
        order = np.arange(self.n, dtype=np.intp)
        lo, hi, dim, val, left, right = [], [], [], [], [], []

        def new_node(a, b):
            lo.append(a); hi.append(b); dim.append(-1); val.append(0.0)
            left.append(-1); right.append(-1)
            return len(lo) - 1

        root = new_node(0, self.n)
        stack = [root]
        while stack:
            node = stack.pop()
            a, b = lo[node], hi[node]
            if b - a <= self.leaf_size:
                continue
            sub = P[order[a:b]]
            spread = sub.max(axis=0) - sub.min(axis=0)
            axis = int(np.argmax(spread))
            if spread[axis] == 0:
                continue
            srt = np.lexsort((order[a:b], sub[:, axis]))
            order[a:b] = order[a:b][srt]
            mid = a + (b - a) // 2
            dim[node] = axis
            val[node] = P[order[mid], axis]
            left[node] = new_node(a, mid)
            right[node] = new_node(mid, b)
            stack.extend((right[node], left[node]))

        self.order = order
        self.data = np.ascontiguousarray(P[order])
        self.node_lo = np.array(lo, dtype=np.intp)
        self.node_hi = np.array(hi, dtype=np.intp)
        self.split_dim = np.array(dim, dtype=np.intp)
        self.split_val = np.array(val, dtype=np.float64)
        self.left = np.array(left, dtype=np.intp)
        self.right = np.array(right, dtype=np.intp)

    def query(self, X, k, threads=1):
        """Return ``(indices, distances)``, each of shape (len(X), k)."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.d:
            raise DimensionMismatchError(self.d, X.shape[1])
        k = int(k)
        if not 1 <= k <= self.n:
            raise ValueError(f"k must be in [1, {self.n}], got {k}")
        m = X.shape[0]
        idx = np.empty((m, k), dtype=np.intp)
        d2 = np.empty((m, k), dtype=np.float64)

        def run(block):
            s, e = block
            kernels.kdtree_query(
                self.data, self.order, self.node_lo, self.node_hi, self.split_dim,
                self.split_val, self.left, self.right, X[s:e], k, idx[s:e], d2[s:e],
            )

        ordered_map(run, row_chunks(m, threads), threads)
        return idx, np.sqrt(d2)


@dataclass(frozen=True, eq=False)
class KnnModel:
    points: np.ndarray
    labels: np.ndarray
    k: int = DEFAULT_K
    index: KDTree = field(default=None, repr=False)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]


def fit(points, labels, k=DEFAULT_K):
    P = np.asarray(points, dtype=np.float64)
    y = np.asarray(labels)
    if P.ndim != 2 or P.shape[0] == 0:
        raise InsufficientDataError("KNN needs at least one stored point")
    if y.shape != (P.shape[0],):
        raise ValueError(f"{P.shape[0]} points but {y.size} labels")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be binary (0/1)")
    if not 1 <= k <= P.shape[0]:
        raise ValueError(f"k must be in [1, n={P.shape[0]}], got {k}")
    P = P.copy()
    P.setflags(write=False)
    y = y.astype(np.int8)
    y.setflags(write=False)
    return KnnModel(P, y, int(k), KDTree(P))


def kneighbors(model, x, k=None):
    """The ``k`` nearest stored points to ``x`` as ``[(index, distance), ...]``."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != model.d:
        raise DimensionMismatchError(model.d, x.size)
    idx, dist = model.index.query(x, model.k if k is None else k)
    return [(int(i), float(v)) for i, v in zip(idx[0], dist[0])]


def vote(neighbor_labels):
    """Majority label per row; ties go to the nearest neighbour's label."""
    neighbor_labels = np.asarray(neighbor_labels)
    k = neighbor_labels.shape[1]
    ones = neighbor_labels.sum(axis=1)
    out = (2 * ones > k).astype(np.int8)
    tie = 2 * ones == k
    out[tie] = neighbor_labels[tie, 0]
    return out


def predict_many(model, X, threads=1):
    idx, _ = model.index.query(X, model.k, threads=threads)
    return vote(model.labels[idx])


def predict(model, x):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != model.d:
        raise DimensionMismatchError(model.d, x.size)
    return int(predict_many(model, x[None, :])[0])
