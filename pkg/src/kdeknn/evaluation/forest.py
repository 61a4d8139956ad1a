"""Random forest of Gini CART trees."""

import numpy as np

from kdeknn._backend import kernels
from kdeknn._parallel import ordered_map
from kdeknn.errors import DimensionMismatchError
from kdeknn.rng import make_rng


class Tree:
    """Flat preorder arrays of one fitted tree. Leaves have ``feature == -1``."""

    def __init__(self, feature, threshold, left, right, n_pos, n_node):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.n_pos = n_pos
        self.n_node = n_node

    @property
    def node_count(self):
        return self.feature.size

    def leaf_vote(self):
        return (2 * self.n_pos > self.n_node).astype(np.int8)

    def apply(self, x):
        """Leaf index reached by a single sample (reference traversal)."""
        node = 0
        while self.feature[node] >= 0:
            if x[self.feature[node]] <= self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        return node


def node_capacity(n, min_samples_leaf, max_depth):
    cap = 2 * (n // max(1, min_samples_leaf)) + 1
    if max_depth < 40:
        cap = min(cap, 2 ** (max_depth + 1) - 1)
    return max(cap, 1)


def grow_tree(X, y, keys, max_depth, min_samples_split, min_samples_leaf, max_features,
              kernel_module=None):
    km = kernels if kernel_module is None else kernel_module
    cap = keys.shape[0]
    feature = np.empty(cap, dtype=np.intp)
    threshold = np.empty(cap, dtype=np.float64)
    left = np.empty(cap, dtype=np.intp)
    right = np.empty(cap, dtype=np.intp)
    n_pos = np.empty(cap, dtype=np.intp)
    n_node = np.empty(cap, dtype=np.intp)
    count = km.build_tree(
        X, y, keys, max_depth, min_samples_split, min_samples_leaf, max_features,
        feature, threshold, left, right, n_pos, n_node,
    )
    return Tree(
        feature[:count].copy(), threshold[:count].copy(), left[:count].copy(),
        right[:count].copy(), n_pos[:count].copy(), n_node[:count].copy(),
    )


class RandomForest:
    """Random forest classifier scored by the fraction of trees voting class 1.

    With ``bootstrap=False`` every tree sees the full training set and the
    trees differ only through the random feature subset examined at each
    split. Each tree's randomness derives from ``(seed, tree index)``, so
    the fitted forest does not depend on ``threads``.
    """

    def __init__(self, n_trees=500, max_depth=20, max_features=5, min_samples_leaf=5,
                 min_samples_split=12, bootstrap=False, seed=0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.max_features = max_features
        self.min_samples_leaf = min_samples_leaf
        self.min_samples_split = min_samples_split
        self.bootstrap = bootstrap
        self.seed = seed
        self.trees = []

    def _tree_inputs(self, t, X, y):
        rng = make_rng(self.seed, "tree", t)
        if self.bootstrap:
            rows = rng.integers(0, X.shape[0], size=X.shape[0])
            X, y = np.ascontiguousarray(X[rows]), np.ascontiguousarray(y[rows])
        cap = node_capacity(X.shape[0], self.min_samples_leaf, self.max_depth)
        keys = rng.random((cap, X.shape[1]))
        return X, y, keys

    def fit(self, X, y, threads=1):
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.int8)
        self.n_features_ = X.shape[1]
        max_features = min(self.max_features, X.shape[1])

        def grow(t):
            Xt, yt, keys = self._tree_inputs(t, X, y)
            return grow_tree(Xt, yt, keys, self.max_depth, self.min_samples_split,
                             self.min_samples_leaf, max_features)

        self.trees = ordered_map(grow, range(self.n_trees), threads)
        self._pack()
        return self

    def _pack(self):
        offsets = np.cumsum([0] + [t.node_count for t in self.trees])[:-1]
        self._roots = np.ascontiguousarray(offsets, dtype=np.intp)
        self._feature = np.concatenate([t.feature for t in self.trees])
        self._threshold = np.concatenate([t.threshold for t in self.trees])
        self._left = np.concatenate([np.where(t.left >= 0, t.left + o, -1) for t, o in zip(self.trees, offsets)])
        self._right = np.concatenate([np.where(t.right >= 0, t.right + o, -1) for t, o in zip(self.trees, offsets)])
        self._vote = np.concatenate([t.leaf_vote() for t in self.trees])
        for name in ("_feature", "_left", "_right"):
            setattr(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.intp))

    def votes(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features_:
            raise DimensionMismatchError(self.n_features_, X.shape[1])
        out = np.empty(X.shape[0], dtype=np.intp)
        kernels.forest_votes(X, self._roots, self._feature, self._threshold, self._left,
                             self._right, self._vote, out)
        return out

    def decision_function(self, X):
        return self.votes(X) / float(len(self.trees))
