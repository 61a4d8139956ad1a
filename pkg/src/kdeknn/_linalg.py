"""Small dense helpers with a fixed summation order.

BLAS-backed products may change rounding with thread count or CPU; these
loops accumulate feature by feature so results are reproducible everywhere.
"""

import numpy as np


def correlate(z, factor):
    """Rows of ``z @ factor.T``, accumulated column by column."""
    out = np.zeros((z.shape[0], factor.shape[0]))
    for j in range(factor.shape[1]):
        out += z[:, j, None] * factor[None, :, j]
    return out


def sq_distances(a, b):
    """Pairwise squared Euclidean distances, shape (len(a), len(b))."""
    out = np.zeros((a.shape[0], b.shape[0]))
    for j in range(a.shape[1]):
        diff = a[:, j, None] - b[None, :, j]
        out += diff * diff
    return out


def inner_products(a, b):
    out = np.zeros((a.shape[0], b.shape[0]))
    for j in range(a.shape[1]):
        out += a[:, j, None] * b[None, :, j]
    return out


def matvec(m, w):
    """``m @ w`` accumulated column by column."""
    out = np.zeros(m.shape[0])
    for j in range(m.shape[1]):
        out += m[:, j] * w[j]
    return out
