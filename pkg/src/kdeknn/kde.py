"""Multivariate Gaussian kernel density estimation with a full bandwidth matrix."""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from kdeknn._backend import kernels
from kdeknn._linalg import correlate
from kdeknn._parallel import ordered_map, row_chunks
from kdeknn.errors import DimensionMismatchError, InsufficientDataError, KdeFitError

DEFAULT_REGULARIZATION = 1e-6
RULES = ("scott", "silverman")


def bandwidth_factor(rule, n, d):
    """Squared bandwidth factor multiplying the covariance: H = factor * cov."""
    if rule == "scott":
        return n ** (-2.0 / (d + 4))
    if rule == "silverman":
        return (n * (d + 2) / 4.0) ** (-2.0 / (d + 4))
    raise ValueError(f"unknown bandwidth rule {rule!r}; expected one of {RULES}")


@dataclass(frozen=True, eq=False)
class KdeModel:
    """Fitted KDE: support points and the Cholesky factor of the bandwidth.

    ``H = factor @ factor.T``. ``log_norm`` is the log of the Gaussian
    normalising constant ``-(d/2) log(2 pi) - log|factor|``.
    """

    support: np.ndarray
    factor: np.ndarray
    rule: str = "scott"
    regularization: float = DEFAULT_REGULARIZATION
    log_norm: float = field(init=False)
    _white: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        S = np.ascontiguousarray(self.support, dtype=np.float64)
        L = np.ascontiguousarray(self.factor, dtype=np.float64)
        if S.ndim != 2 or L.shape != (S.shape[1], S.shape[1]):
            raise ValueError("factor must be d x d for d-dimensional support")
        diag = np.diagonal(L)
        if not (diag > 0).all():
            raise KdeFitError("bandwidth factor must have a strictly positive diagonal")
        if np.triu(L, 1).any():
            raise ValueError("bandwidth factor must be lower triangular")
        S.setflags(write=False)
        L.setflags(write=False)
        d = S.shape[1]
        white = np.ascontiguousarray(solve_triangular(L, S.T, lower=True).T)
        object.__setattr__(self, "support", S)
        object.__setattr__(self, "factor", L)
        object.__setattr__(self, "log_norm", -0.5 * d * math.log(2 * math.pi) - float(np.log(diag).sum()))
        object.__setattr__(self, "_white", white)

    @property
    def n(self):
        return self.support.shape[0]

    @property
    def d(self):
        return self.support.shape[1]

    @property
    def bandwidth(self):
        return self.factor @ self.factor.T

    def to_json(self):
        return json.dumps({
            "support": self.support.tolist(),
            "factor": self.factor.tolist(),
            "rule": self.rule,
            "regularization": self.regularization,
        })

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(np.array(d["support"]), np.array(d["factor"]), d["rule"], d["regularization"])


def fit(points, rule="scott", regularization=DEFAULT_REGULARIZATION):
    """Fit a KDE with ``H = factor(rule, n, d) * (cov(points) + regularization * I)``."""
    P = np.asarray(points, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    n, d = P.shape
    if n < 2:
        raise InsufficientDataError(f"KDE needs at least 2 points, got {n}")
    if d < 1:
        raise ValueError("points must have at least one feature")
    if not np.isfinite(P).all():
        raise ValueError("points must be finite")
    if regularization < 0:
        raise ValueError("regularization must be non-negative")
    cov = np.atleast_2d(np.cov(P, rowvar=False))
    H = bandwidth_factor(rule, n, d) * (cov + regularization * np.eye(d))
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        raise KdeFitError(
            f"bandwidth matrix is not positive definite (regularization={regularization}); "
            "increase the regularization"
        ) from None
    if not (np.diagonal(L) > 0).all():
        raise KdeFitError("bandwidth matrix is singular; increase the regularization")
    return KdeModel(P, L, rule, regularization)


def log_density(model, X, threads=1):
    """Log-density at each row of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.d:
        raise DimensionMismatchError(model.d, X.shape[1])
    W = np.ascontiguousarray(solve_triangular(model.factor, X.T, lower=True).T)
    out = np.empty(W.shape[0])

    def run(block):
        s, e = block
        kernels.kde_logsumexp(model._white, W[s:e], out[s:e])

    ordered_map(run, row_chunks(W.shape[0], threads), threads)
    return out + model.log_norm - math.log(model.n)


def density(model, x):
    """Density at a single point ``x``."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != model.d:
        raise DimensionMismatchError(model.d, x.size)
    return float(np.exp(log_density(model, x)[0]))


def sample(model, count, rng):
    """Draw ``count`` rows: a uniformly chosen support point plus ``factor @ z``."""
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    i = rng.integers(0, model.n, size=count)
    z = rng.standard_normal((count, model.d))
    return model.support[i] + correlate(z, model.factor)
