"""Distance to Closest Record (DCR) privacy analysis."""

import csv
import json
from dataclasses import dataclass, replace

import numpy as np

from kdeknn.errors import DimensionMismatchError, InsufficientDataError
from kdeknn.knn import KDTree

DIRECTIONS = ("synthetic_to_real", "real_to_synthetic", "real_to_real_baseline")


@dataclass(frozen=True, eq=False)
class DcrReport:
    distances: np.ndarray
    mean_dcr: float
    direction: str
    histogram: tuple = None

    def to_dict(self):
        out = {
            "direction": self.direction,
            "mean_dcr": self.mean_dcr,
            "n": int(self.distances.size),
            "distances": self.distances.tolist(),
        }
        if self.histogram is not None:
            out["histogram"] = [
                {"lower": lo, "upper": hi, "count": n} for lo, hi, n in self.histogram
            ]
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def write_histogram_csv(self, path):
        """Two columns, ``bin_center,count``."""
        if self.histogram is None:
            raise ValueError("histogram not computed; call dcr_histogram first")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_center", "count"])
            for lo, hi, n in self.histogram:
                w.writerow([repr((lo + hi) / 2.0), n])


def _as_matrix(a, name):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.shape[0] == 0:
        raise InsufficientDataError(f"{name} set is empty")
    return a


def _report(dist, direction):
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    dist.setflags(write=False)
    return DcrReport(dist, float(dist.mean()), direction)


def dcr(real, synthetic, direction="synthetic_to_real", threads=1):
    """Euclidean distance from each probe row to its nearest reference row.

    ``synthetic_to_real`` probes with synthetic rows against the real set;
    ``real_to_synthetic`` swaps the roles. Both inputs must share the same
    normalization.
    """
    R = _as_matrix(real, "real")
    S = _as_matrix(synthetic, "synthetic")
    if R.shape[1] != S.shape[1]:
        raise DimensionMismatchError(R.shape[1], S.shape[1], "synthetic")
    if direction == "synthetic_to_real":
        ref, probe = R, S
    elif direction == "real_to_synthetic":
        ref, probe = S, R
    else:
        raise ValueError(f"direction must be synthetic_to_real or real_to_synthetic, got {direction!r}")
    _, dist = KDTree(ref).query(probe, 1, threads=threads)
    return _report(dist[:, 0], direction)


def dcr_baseline(real, threads=1):
    """Leave-one-out nearest-neighbour distance within the real set."""
    R = _as_matrix(real, "real")
    if R.shape[0] < 2:
        raise InsufficientDataError("real-real baseline needs at least 2 rows")
    idx, dist = KDTree(R).query(R, 2, threads=threads)
    rows = np.arange(R.shape[0])
    # the self match is normally first; a lower-index duplicate can precede it at distance 0
    own_first = idx[:, 0] == rows
    return _report(np.where(own_first, dist[:, 1], dist[:, 0]), "real_to_real_baseline")


def dcr_histogram(report, bins=20):
    """Equal-width bins over [0, max distance]; the last bin is closed on the right."""
    if bins < 1:
        raise ValueError("bins must be at least 1")
    dist = report.distances
    top = float(dist.max())
    if top == 0.0:
        hist = ((0.0, 0.0, int(dist.size)),) + tuple((0.0, 0.0, 0) for _ in range(bins - 1))
        return replace(report, histogram=hist)
    counts, edges = np.histogram(dist, bins=bins, range=(0.0, top))
    hist = tuple((float(edges[b]), float(edges[b + 1]), int(counts[b])) for b in range(bins))
    return replace(report, histogram=hist)


def ordering_verdict(means, baseline):
    """One line ranking the mean DCR of each named synthetic set against the real baseline."""
    items = sorted(list(means.items()) + [("real-real baseline", baseline)], key=lambda kv: kv[1])
    chain = " < ".join(f"{name} ({value:.3f})" for name, value in items)
    closer = [n for n, v in means.items() if v < baseline]
    if closer:
        note = "closer to real records than real records are to each other: " + ", ".join(closer)
    else:
        note = "all synthetic sets are farther from real records than the real-real baseline"
    return f"{chain}; {note}"


def privacy_utility_summary(dcr_means, aucs, baseline):
    """Pair each method's mean DCR with its downstream AUC."""
    return {
        "real_real_baseline": baseline,
        "methods": {
            m: {"mean_dcr": dcr_means[m], "auc": aucs.get(m), "farther_than_baseline": dcr_means[m] > baseline}
            for m in dcr_means
        },
    }
