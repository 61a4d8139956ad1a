"""Time each hot kernel on the compiled and the pure-Python backend.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 3] [--quick]

Workloads are sized like the benchmark cohort (about 1000 rows, 27
features). Prints one line per kernel with the best-of-``repeat`` time for
each backend and the speedup.
"""

import argparse
import time

import numpy as np

from kdeknn._backend import available_backends
from kdeknn.dataset import benchmark_cohorts, prepare
from kdeknn.evaluation.forest import RandomForest, grow_tree, node_capacity
from kdeknn.evaluation.svm import kernel_matrix, scale_gamma
from kdeknn.knn import KDTree


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def workloads(quick):
    cohort, _ = benchmark_cohorts(42)
    _, train = prepare(cohort)
    X = np.ascontiguousarray(train.features)
    y = train.labels
    if quick:
        X, y = X[:300], y[:300]
    n, d = X.shape
    tree = KDTree(X)
    queries = np.ascontiguousarray(np.random.default_rng(0).standard_normal((4 * n, d)))
    ys = np.where(y == 1, 1.0, -1.0)
    K = np.ascontiguousarray(kernel_matrix(X, X, "rbf", scale_gamma(X)))
    keys = np.random.default_rng(1).random((node_capacity(n, 5, 20), d))
    y8 = np.ascontiguousarray(y, dtype=np.int8)
    forest = RandomForest(n_trees=50, seed=0).fit(X, y)
    fargs = (forest._roots, forest._feature, forest._threshold, forest._left, forest._right, forest._vote)

    def knn_query(km):
        idx = np.empty((queries.shape[0], 5), dtype=np.intp)
        d2 = np.empty((queries.shape[0], 5))
        km.kdtree_query(tree.data, tree.order, tree.node_lo, tree.node_hi, tree.split_dim,
                        tree.split_val, tree.left, tree.right, queries, 5, idx, d2)

    def kde_sum(km):
        km.kde_logsumexp(X, queries[:n], np.empty(n))

    def smo(km):
        km.smo_solve(K, ys, 1.0, 1e-3, 10_000 * n, np.zeros(n), -np.ones(n))

    def cart(km):
        grow_tree(X, y8, keys, 20, 12, 5, 5, kernel_module=km)

    def votes(km):
        km.forest_votes(queries, *fargs, np.empty(queries.shape[0], dtype=np.intp))

    return {
        f"kdtree_query ({queries.shape[0]} queries, k=5)": knn_query,
        f"kde_logsumexp ({n} x {n})": kde_sum,
        f"smo_solve (rbf, n={n})": smo,
        f"build_tree (n={n}, d={d})": cart,
        f"forest_votes (50 trees, {queries.shape[0]} rows)": votes,
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--quick", action="store_true", help="300-row workloads")
    args = parser.parse_args(argv)

    backends = available_backends()
    names = [b for b in ("cython", "python") if b in backends]
    print(f"{'kernel':<42}" + "".join(f"{b:>12}" for b in names) + ("     speedup" if len(names) == 2 else ""))
    for label, fn in workloads(args.quick).items():
        times = [best_of(lambda: fn(backends[b]), args.repeat) for b in names]
        line = f"{label:<42}" + "".join(f"{t:>11.4f}s" for t in times)
        if len(times) == 2:
            line += f"{times[1] / times[0]:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
