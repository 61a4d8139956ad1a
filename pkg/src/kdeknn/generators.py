"""Synthetic cohort generators: full-synthetic SMOTE and KDE-KNN rejection sampling."""

import json
from dataclasses import dataclass, field

import numpy as np

from kdeknn import kde, knn
from kdeknn.dataset import Dataset, write_csv
from kdeknn.errors import GenerationStalled, InsufficientDataError
from kdeknn.rng import make_rng

METHODS = ("smote", "kde", "kde_knn")


@dataclass(frozen=True)
class GenConfig:
    """Generator settings.

    ``max_attempts`` caps the total number of KDE candidates drawn across
    both classes; ``None`` means 1000 times the total target.
    """

    per_class_counts: tuple = (540, 540)
    knn_k: int = knn.DEFAULT_K
    bandwidth_rule: str = "scott"
    regularization: float = kde.DEFAULT_REGULARIZATION
    smote_k: int = 5
    max_attempts: int = None
    batch_factor: int = 4
    seed: int = 0

    def __post_init__(self):
        counts = tuple(int(c) for c in self.per_class_counts)
        if len(counts) != 2 or min(counts) <= 0:
            raise ValueError(f"per_class_counts must be two positive counts, got {counts}")
        object.__setattr__(self, "per_class_counts", counts)
        if self.knn_k < 1 or self.smote_k < 1 or self.batch_factor < 1:
            raise ValueError("knn_k, smote_k and batch_factor must be positive")
        if self.max_attempts is not None and self.max_attempts < sum(counts):
            raise ValueError("max_attempts must be at least the total requested count")
        if self.bandwidth_rule not in kde.RULES:
            raise ValueError(f"unknown bandwidth rule {self.bandwidth_rule!r}")

    @property
    def attempt_budget(self):
        if self.max_attempts is None:
            return 1000 * sum(self.per_class_counts)
        return self.max_attempts


@dataclass(frozen=True, eq=False)
class SyntheticBatch:
    data: Dataset
    method: str
    accepted_per_class: tuple
    attempted_per_class: tuple
    seed: int
    validator: knn.KnnModel = field(default=None, repr=False)

    @property
    def acceptance_rate_per_class(self):
        return tuple(a / n for a, n in zip(self.accepted_per_class, self.attempted_per_class))

    def sidecar(self):
        return {
            "method": self.method,
            "seed": self.seed,
            "counts": list(self.accepted_per_class),
            "attempted": list(self.attempted_per_class),
            "acceptance_rates": list(self.acceptance_rate_per_class),
        }

    def write(self, csv_path, sidecar_path=None, stats=None, label_column="label"):
        """Write the samples as CSV (raw units when ``stats`` is given) plus a JSON sidecar."""
        ds = self.data
        if stats is not None:
            ds = ds.with_features(stats.invert(ds.features), normalized=False)
        write_csv(ds, csv_path, label_column)
        if sidecar_path is not None:
            with open(sidecar_path, "w", encoding="utf-8") as fh:
                json.dump(self.sidecar(), fh, indent=2, sort_keys=True)
                fh.write("\n")


# ---------------------------------------------------------------- SMOTE

def _same_class_neighbors(points, k):
    tree = knn.KDTree(points)
    idx, _ = tree.query(points, k + 1)
    m = points.shape[0]
    out = np.empty((m, k), dtype=np.intp)
    for r in range(m):
        row = idx[r]
        # self is normally first; exact duplicates with a lower index can displace it
        row = row[row != r]
        out[r] = row[:k]
    return out


def smote_generate(class_points, k, count, rng, *, lambdas=None, return_trace=False):
    """Interpolate ``count`` points between class members and their k nearest peers.

    Each row is ``p + lam * (q - p)``: ``p`` uniform over the class, ``q``
    uniform over the k nearest other members of the class, ``lam`` uniform
    on [0, 1]. ``lambdas`` replaces the drawn interpolation weights (test
    hook). With ``return_trace`` the ``(p_index, q_index, lam)`` arrays are
    returned too.
    """
    P = np.asarray(class_points, dtype=np.float64)
    m = P.shape[0]
    if m <= k:
        raise InsufficientDataError(f"SMOTE with k={k} needs more than {k} class points, got {m}")
    if count < 1:
        raise ValueError("count must be positive")
    nbrs = _same_class_neighbors(P, k)
    p = rng.integers(0, m, size=count)
    q = nbrs[p, rng.integers(0, k, size=count)]
    lam = rng.random(count)
    if lambdas is not None:
        lam = np.broadcast_to(np.asarray(lambdas, dtype=np.float64), (count,)).copy()
    out = P[p] + lam[:, None] * (P[q] - P[p])
    if return_trace:
        return out, (p, q, lam)
    return out


def _batch_dataset(train, blocks, method, config, accepted, attempted, validator=None):
    X = np.vstack(blocks)
    y = np.concatenate([np.full(len(b), c, dtype=np.int8) for c, b in enumerate(blocks)])
    data = Dataset(
        X, y, train.feature_names, normalized=train.normalized,
        provenance=f"synthetic:{method}:seed={config.seed}",
    )
    return SyntheticBatch(data, method, tuple(accepted), tuple(attempted), config.seed, validator)


def smote_full_synthetic(train, config=GenConfig()):
    """SMOTE applied to both classes independently; nothing is rejected."""
    blocks = []
    for c, count in enumerate(config.per_class_counts):
        rng = make_rng(config.seed, "smote", c)
        blocks.append(smote_generate(train.class_points(c), config.smote_k, count, rng))
    counts = config.per_class_counts
    return _batch_dataset(train, blocks, "smote", config, counts, counts)


# ---------------------------------------------------------------- KDE-KNN

def kde_knn_generate(train, config=GenConfig(), *, validate=True, threads=1):
    """Class-conditional KDE sampling with KNN validation.

    A KNN validator is fitted on the whole training set; each class gets its
    own KDE; candidates are drawn per class in batches and kept only when the
    validator assigns them to the generating class, until every class
    reaches its target. ``validate=False`` keeps every draw (plain KDE).

    ``attempted_per_class`` counts candidates examined up to the last one
    kept, so acceptance rates do not depend on the batch size. Raises
    :class:`GenerationStalled` when the draw budget runs out.
    """
    for c in (0, 1):
        if (train.labels == c).sum() < 2:
            raise InsufficientDataError(f"class {c} needs at least 2 training rows")
    if not train.normalized:
        raise ValueError("KDE-KNN operates on z-scored data; normalize the training set first")

    validator = knn.fit(train.features, train.labels, config.knn_k) if validate else None
    budget = config.attempt_budget
    drawn_total = 0
    blocks, accepted, attempted = [], [0, 0], [0, 0]
    for c, target in enumerate(config.per_class_counts):
        model = kde.fit(train.class_points(c), config.bandwidth_rule, config.regularization)
        rng = make_rng(config.seed, "kde_knn", c)
        kept = []
        while accepted[c] < target:
            remaining = target - accepted[c]
            batch = min(config.batch_factor * remaining, budget - drawn_total)
            if batch <= 0:
                raise GenerationStalled(accepted, attempted, config.per_class_counts)
            cand = kde.sample(model, batch, rng)
            drawn_total += batch
            if validate:
                ok = np.flatnonzero(knn.predict_many(validator, cand, threads=threads) == c)
            else:
                ok = np.arange(batch)
            if ok.size >= remaining:
                ok = ok[:remaining]
                attempted[c] += int(ok[-1]) + 1
            else:
                attempted[c] += batch
            kept.append(cand[ok])
            accepted[c] += ok.size
        blocks.append(np.vstack(kept))
    method = "kde_knn" if validate else "kde"
    return _batch_dataset(train, blocks, method, config, accepted, attempted, validator)


def kde_generate(train, config=GenConfig(), threads=1):
    return kde_knn_generate(train, config, validate=False, threads=threads)


def generate(method, train, config=GenConfig(), threads=1):
    method = method.replace("-", "_")
    if method == "smote":
        return smote_full_synthetic(train, config)
    if method == "kde_knn":
        return kde_knn_generate(train, config, threads=threads)
    if method == "kde":
        return kde_generate(train, config, threads=threads)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
