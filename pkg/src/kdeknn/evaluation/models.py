"""Classifier specifications and a uniform train/score interface."""

from dataclasses import dataclass, field

import numpy as np

from kdeknn.errors import DataError, DimensionMismatchError
from kdeknn.evaluation.forest import RandomForest
from kdeknn.evaluation.svm import SVC

KINDS = ("random_forest", "svm_linear", "svm_rbf")


@dataclass(frozen=True)
class ClassifierSpec:
    """Model kind plus hyperparameters; defaults are the tuned values used throughout.

    ``gamma=None`` selects ``1 / (d * mean feature variance)`` of the
    training data.
    """

    kind: str
    n_trees: int = 500
    max_depth: int = 20
    max_features: int = 5
    min_samples_leaf: int = 5
    min_samples_split: int = 12
    bootstrap: bool = False
    C: float = 1.0
    gamma: float = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown classifier kind {self.kind!r}; expected one of {KINDS}")
        for name in ("n_trees", "max_depth", "max_features", "min_samples_leaf", "min_samples_split"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not self.C > 0:
            raise ValueError("C must be positive")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError("gamma must be positive")

    @property
    def label(self):
        return {"random_forest": "RF", "svm_linear": "SVM (linear)", "svm_rbf": "SVM (rbf)"}[self.kind]


DEFAULT_SPECS = tuple(ClassifierSpec(k) for k in KINDS)


@dataclass(frozen=True, eq=False)
class TrainedModel:
    spec: ClassifierSpec
    estimator: object
    n_features: int
    norm_stats: object = field(default=None, repr=False)


def train(spec, train_ds, seed=0, threads=1, norm_stats=None):
    X = train_ds.features
    y = train_ds.labels
    if not np.isfinite(X).all():
        raise DataError("training features must be finite (impute first)")
    if np.unique(y).size < 2:
        raise DataError("training set contains a single class")
    if spec.kind == "random_forest":
        est = RandomForest(
            n_trees=spec.n_trees, max_depth=spec.max_depth, max_features=spec.max_features,
            min_samples_leaf=spec.min_samples_leaf, min_samples_split=spec.min_samples_split,
            bootstrap=spec.bootstrap, seed=seed,
        ).fit(X, y, threads=threads)
    else:
        kernel = "linear" if spec.kind == "svm_linear" else "rbf"
        est = SVC(kernel=kernel, C=spec.C, gamma=spec.gamma).fit(X, y)
    return TrainedModel(spec, est, X.shape[1], norm_stats)


def predict_scores(model, X):
    """Higher means more sepsis-like: vote fraction (forest) or signed margin (SVM)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.n_features:
        raise DimensionMismatchError(model.n_features, X.shape[1])
    return np.asarray(model.estimator.decision_function(X), dtype=np.float64)


def predict_score(model, x):
    return float(predict_scores(model, np.asarray(x, dtype=np.float64).reshape(1, -1))[0])
