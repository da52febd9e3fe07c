"""Ranking metric."""

from __future__ import annotations

import numpy as np


class MetricError(ValueError):
    pass


def auc(scores, labels) -> float:
    """Probability that a random positive outscores a random negative; ties count half.

    Computed from average ranks (Mann-Whitney rank sum) in O(n log n).
    """
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if s.shape != y.shape:
        raise MetricError(f"{s.size} scores vs {y.size} labels")
    if not np.isin(y, (0, 1)).all():
        raise MetricError("labels must be 0 or 1")
    if np.isnan(s).any():
        raise MetricError("scores contain NaN")
    pos = int((y == 1).sum())
    neg = y.size - pos
    if pos == 0 or neg == 0:
        raise MetricError("AUC needs at least one positive and one negative example")

    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    # average 1-based rank for each run of tied scores
    starts = np.flatnonzero(np.r_[True, sorted_s[1:] != sorted_s[:-1]])
    ends = np.r_[starts[1:], s.size]
    avg = (starts + ends + 1) / 2.0
    ranks = np.empty(s.size)
    ranks[order] = np.repeat(avg, ends - starts)
    return float((ranks[y == 1].sum() - pos * (pos + 1) / 2.0) / (pos * neg))
