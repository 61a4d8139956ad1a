import numpy as np
from scipy.stats import rankdata

from kdeknn.errors import UndefinedAucError


def _check(scores, labels):
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if s.shape != y.shape:
        raise ValueError(f"{s.size} scores but {y.size} labels")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    n_pos = int((y == 1).sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAucError("AUC is undefined when only one class is present")
    return s, y, n_pos, n_neg


def auc(scores, labels):
    """Mann-Whitney AUC: P(score_pos > score_neg) with ties counted as 1/2.

    Mid-ranks are half-integers, so the rank sum is exact in double
    precision for any realistic sample size.
    """
    s, y, n_pos, n_neg = _check(scores, labels)
    ranks = rankdata(s, method="average")
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_curve(scores, labels):
    """ROC points ``(fpr, tpr)`` at each distinct threshold, from (0, 0) to (1, 1)."""
    s, y, n_pos, n_neg = _check(scores, labels)
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]
    tps = np.cumsum(y)[last]
    fps = (last + 1) - tps
    fpr = np.r_[0.0, fps / n_neg]
    tpr = np.r_[0.0, tps / n_pos]
    return fpr, tpr
