"""Labeled tabular cohorts: CSV I/O, imputation, z-scoring, splitting, simulation."""

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from kdeknn._linalg import correlate
from kdeknn.errors import (
    CsvParseError,
    DimensionMismatchError,
    ImputationError,
    InsufficientDataError,
    SchemaError,
    StratificationError,
)
from kdeknn.rng import make_rng

MISSING_TOKENS = ("", "NA")
DEGENERATE_STD = 1e-12


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """A labeled cohort.

    ``features`` is ``(n_samples, n_features)``; missing cells are NaN until
    :func:`impute_median` resolves them. ``labels`` are 0 (non-sepsis) or
    1 (sepsis). Arrays are read-only.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple
    normalized: bool = False
    provenance: str = ""

    def __post_init__(self):
        X = _frozen(self.features, np.float64)
        if X.ndim != 2:
            raise SchemaError(f"features must be 2-D, got shape {X.shape}")
        y = _frozen(self.labels, np.int8)
        if y.shape != (X.shape[0],):
            raise SchemaError(f"{X.shape[0]} feature rows but {y.size} labels")
        if not np.isin(y, (0, 1)).all():
            raise SchemaError("labels must be 0 or 1")
        names = tuple(str(n) for n in self.feature_names)
        if len(names) != X.shape[1]:
            raise SchemaError(f"{len(names)} feature names for {X.shape[1]} columns")
        if np.isinf(X).any():
            raise SchemaError("features contain infinite values")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def has_missing(self):
        return bool(np.isnan(self.features).any())

    def class_counts(self):
        return int((self.labels == 0).sum()), int((self.labels == 1).sum())

    def class_points(self, label):
        return self.features[self.labels == label]

    def subset(self, rows):
        return replace(self, features=self.features[rows], labels=self.labels[rows])

    def with_features(self, features, normalized=None):
        return replace(
            self,
            features=features,
            normalized=self.normalized if normalized is None else normalized,
        )


def concat(datasets, provenance=None):
    first = datasets[0]
    for ds in datasets[1:]:
        if ds.feature_names != first.feature_names:
            raise SchemaError("cannot concatenate datasets with different features")
    return Dataset(
        np.vstack([ds.features for ds in datasets]),
        np.concatenate([ds.labels for ds in datasets]),
        first.feature_names,
        normalized=first.normalized,
        provenance=first.provenance if provenance is None else provenance,
    )


# ---------------------------------------------------------------- CSV

def _parse_labels(raw, line_numbers):
    values = sorted(set(raw))
    if set(values) <= {"0", "1"}:
        return np.array([int(v) for v in raw])
    try:
        numeric = [float(v) for v in raw]
    except ValueError:
        numeric = None
    if numeric is not None:
        if set(numeric) <= {0.0, 1.0}:
            return np.array(numeric, dtype=int)
        bad = next(i for i, v in enumerate(numeric) if v not in (0.0, 1.0))
        raise SchemaError(f"line {line_numbers[bad]}: numeric label {raw[bad]!r} is not 0 or 1")
    if len(values) != 2:
        raise SchemaError(f"label column must hold two classes, found {len(values)}: {values[:5]}")
    mapping = {values[0]: 0, values[1]: 1}
    return np.array([mapping[v] for v in raw])


def load_csv(path, label_column="label"):
    """Read a header-first CSV; every column except ``label_column`` is a feature.

    Empty cells and ``NA`` become missing (NaN). String labels are mapped to
    0/1 by sorted order.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InsufficientDataError(f"{path}: empty file") from None
        except csv.Error as exc:
            raise CsvParseError(str(exc), reader.line_num) from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise SchemaError(f"label column {label_column!r} not in header {header}")
        li = header.index(label_column)
        names = [h for i, h in enumerate(header) if i != li]
        rows, labels, lines = [], [], []
        try:
            for row in reader:
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                line = reader.line_num
                if len(row) != len(header):
                    raise CsvParseError(f"expected {len(header)} fields, got {len(row)}", line)
                lab = row[li].strip()
                if lab in MISSING_TOKENS:
                    raise SchemaError(f"line {line}: missing label")
                values = []
                for i, cell in enumerate(row):
                    if i == li:
                        continue
                    cell = cell.strip()
                    if cell in MISSING_TOKENS:
                        values.append(math.nan)
                        continue
                    try:
                        v = float(cell)
                    except ValueError:
                        raise SchemaError(
                            f"line {line}: non-numeric value {cell!r} in column {header[i]!r}"
                        ) from None
                    if math.isinf(v):
                        raise SchemaError(f"line {line}: infinite value in column {header[i]!r}")
                    values.append(v)
                rows.append(values)
                labels.append(lab)
                lines.append(line)
        except csv.Error as exc:
            raise CsvParseError(str(exc), reader.line_num) from None
    if len(rows) < 2:
        raise InsufficientDataError(f"{path}: need at least 2 data rows, got {len(rows)}")
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return Dataset(X, _parse_labels(labels, lines), names, provenance=str(path))


def _fmt(v):
    return "NA" if math.isnan(v) else repr(float(v))


def write_csv(ds, path, label_column="label"):
    """Write ``ds`` with shortest round-trip float formatting (output is byte-stable)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(ds.feature_names) + [label_column])
        for row, lab in zip(ds.features, ds.labels):
            w.writerow([_fmt(v) for v in row] + [int(lab)])


# ---------------------------------------------------------------- imputation

def feature_medians(ds):
    """Per-feature median over observed (non-missing) values."""
    X = ds.features
    observed = ~np.isnan(X)
    for j, name in enumerate(ds.feature_names):
        if not observed[:, j].any():
            raise ImputationError(name)
    with np.errstate(all="ignore"):
        return np.nanmedian(X, axis=0)


def impute_median(ds, medians=None):
    """Replace missing cells with per-feature medians.

    ``medians`` defaults to those of ``ds`` itself; pass training medians to
    impute a test or external cohort without leakage.
    """
    if not ds.has_missing:
        return ds
    if medians is None:
        medians = feature_medians(ds)
    medians = np.asarray(medians, dtype=np.float64)
    if medians.shape != (ds.n_features,):
        raise DimensionMismatchError(ds.n_features, medians.size, "medians")
    X = ds.features.copy()
    rows, cols = np.nonzero(np.isnan(X))
    X[rows, cols] = medians[cols]
    return ds.with_features(X)


# ---------------------------------------------------------------- z-scoring

@dataclass(frozen=True, eq=False)
class NormStats:
    """Per-feature mean and population std. Degenerate features carry std 1."""

    means: np.ndarray
    stds: np.ndarray
    degenerate: np.ndarray = field(default=None)

    def __post_init__(self):
        means = _frozen(self.means, np.float64)
        stds = _frozen(self.stds, np.float64)
        deg = self.degenerate
        deg = _frozen(np.zeros(means.size, bool) if deg is None else deg, bool)
        if not (means.shape == stds.shape == deg.shape) or means.ndim != 1:
            raise ValueError("means, stds and degenerate must be 1-D of equal length")
        if (stds <= 0).any():
            raise ValueError("stds must be positive")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)
        object.__setattr__(self, "degenerate", deg)

    @property
    def dim(self):
        return self.means.size

    def apply(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.dim:
            raise DimensionMismatchError(self.dim, X.shape[-1])
        Z = (X - self.means) / self.stds
        Z[..., self.degenerate] = 0.0
        return Z

    def invert(self, Z):
        Z = np.asarray(Z, dtype=np.float64)
        if Z.shape[-1] != self.dim:
            raise DimensionMismatchError(self.dim, Z.shape[-1])
        return Z * self.stds + self.means

    def to_json(self):
        return json.dumps({
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "degenerate": self.degenerate.tolist(),
        })

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(d["means"], d["stds"], d.get("degenerate"))


def zscore_fit(ds):
    X = ds.features
    if np.isnan(X).any():
        raise ValueError("impute missing values before fitting normalization")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    degenerate = stds < DEGENERATE_STD
    return NormStats(means, np.where(degenerate, 1.0, stds), degenerate)


def zscore_apply(ds, stats):
    if ds.n_features != stats.dim:
        raise DimensionMismatchError(stats.dim, ds.n_features)
    return ds.with_features(stats.apply(ds.features), normalized=True)


def prepare(train, *others):
    """Impute with training medians and z-score with training stats.

    Returns ``(stats, train_norm, *others_norm)``.
    """
    medians = feature_medians(train) if train.has_missing else None
    train_i = impute_median(train, medians)
    stats = zscore_fit(train_i)
    if medians is None:
        medians = np.median(train_i.features, axis=0)
    out = [zscore_apply(train_i, stats)]
    out += [zscore_apply(impute_median(ds, medians), stats) for ds in others]
    return (stats, *out)


# ---------------------------------------------------------------- splitting

def _floor_fraction(n, fraction):
    # guards 0.85 * 20 = 16.999999999999996
    return math.floor(round(n * fraction, 9))


def split_indices(labels, train_fraction, seed):
    """Stratified split: each class keeps floor(n_c * train_fraction) rows for training."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    labels = np.asarray(labels)
    if labels.size < 2:
        raise InsufficientDataError("need at least 2 rows to split")
    rng = make_rng(seed, "split")
    train, test = [], []
    for c in (0, 1):
        members = np.flatnonzero(labels == c)
        if members.size < 2:
            raise StratificationError(f"class {c} has {members.size} member(s); need at least 2")
        members = rng.permutation(members)
        k = _floor_fraction(members.size, train_fraction)
        train.append(members[:k])
        test.append(members[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def split(ds, train_fraction=0.85, seed=0):
    tr, te = split_indices(ds.labels, train_fraction, seed)
    return ds.subset(tr), ds.subset(te)


# ---------------------------------------------------------------- simulation

@dataclass(frozen=True)
class CohortSpec:
    """Parameters of a simulated two-class cohort.

    Class ``c`` is drawn from a Gaussian with mean
    ``c * class_mean_shift + external_drift`` and covariance
    ``covariance_scale * B``, where ``B`` is the identity with
    ``band_correlation`` on the first off-diagonals. With ``skew > 0`` each
    coordinate is then mapped through ``expm1(skew * x) / skew``, giving
    right-skewed lab-value-like marginals; ``skew = 0`` leaves the Gaussian.
    """

    n_per_class: tuple = (979, 296)
    n_features: int = 27
    class_mean_shift: tuple = None
    covariance_scale: float = 1.0
    external_drift: tuple = None
    band_correlation: float = 0.3
    skew: float = 0.0

    def __post_init__(self):
        n0, n1 = self.n_per_class
        if n0 <= 0 or n1 <= 0:
            raise ValueError("class counts must be positive")
        if self.n_features < 1:
            raise ValueError("n_features must be positive")
        if not self.covariance_scale > 0:
            raise ValueError("covariance_scale must be positive")
        if self.skew < 0:
            raise ValueError("skew must be non-negative")
        for name in ("class_mean_shift", "external_drift"):
            v = getattr(self, name)
            if v is not None and len(v) != self.n_features:
                raise ValueError(f"{name} has length {len(v)}, expected {self.n_features}")
        object.__setattr__(self, "n_per_class", (int(n0), int(n1)))

    def shift_vector(self):
        if self.class_mean_shift is None:
            return np.full(self.n_features, 0.25)
        return np.asarray(self.class_mean_shift, dtype=np.float64)

    def drift_vector(self):
        if self.external_drift is None:
            return np.zeros(self.n_features)
        return np.asarray(self.external_drift, dtype=np.float64)

    def covariance(self):
        d = self.n_features
        B = np.eye(d)
        i = np.arange(d - 1)
        B[i, i + 1] = B[i + 1, i] = self.band_correlation
        return self.covariance_scale * B

    def to_dict(self):
        return {
            "n_per_class": list(self.n_per_class),
            "n_features": self.n_features,
            "class_mean_shift": self.shift_vector().tolist(),
            "covariance_scale": self.covariance_scale,
            "external_drift": self.drift_vector().tolist(),
            "band_correlation": self.band_correlation,
            "skew": self.skew,
        }


BENCHMARK_SKEW = 0.7
BENCHMARK_DRIFT = -0.3


def madb_like_spec(**overrides):
    """Training-cohort stand-in: 979 non-sepsis / 296 sepsis, 27 features."""
    kw = dict(n_per_class=(979, 296), n_features=27, skew=BENCHMARK_SKEW)
    kw.update(overrides)
    return CohortSpec(**kw)


def sldb_like_spec(**overrides):
    """External-cohort stand-in: 1014 / 1014, drifted means."""
    d = overrides.get("n_features", 27)
    kw = dict(
        n_per_class=(1014, 1014),
        n_features=d,
        external_drift=tuple([BENCHMARK_DRIFT] * d),
        skew=BENCHMARK_SKEW,
    )
    kw.update(overrides)
    return CohortSpec(**kw)


def simulate_cohort(spec, seed, stream="cohort"):
    rng = make_rng(seed, stream)
    d = spec.n_features
    chol = np.linalg.cholesky(spec.covariance())
    shift = spec.shift_vector()
    drift = spec.drift_vector()
    blocks, labels = [], []
    for c, n in enumerate(spec.n_per_class):
        z = rng.standard_normal((n, d))
        blocks.append(c * shift + drift + correlate(z, chol))
        labels.append(np.full(n, c))
    X = np.vstack(blocks)
    y = np.concatenate(labels)
    if spec.skew > 0:
        X = np.expm1(spec.skew * X) / spec.skew
    perm = rng.permutation(X.shape[0])
    names = [f"f{j + 1:02d}" for j in range(d)]
    return Dataset(X[perm], y[perm], names, provenance=f"simulated:{stream}:seed={seed}")


def benchmark_cohorts(seed=42, n_features=27):
    """The default (training, external) pair of simulated cohorts."""
    train = simulate_cohort(madb_like_spec(n_features=n_features), seed, "cohort")
    external = simulate_cohort(sldb_like_spec(n_features=n_features), seed, "external")
    return train, external
