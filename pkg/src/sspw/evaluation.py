"""Clustering quality metrics and run summaries."""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ConfigurationError


def _contingency(predicted, truth):
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape or predicted.ndim != 1:
        raise ConfigurationError("label vectors must be 1-D and of equal length")
    if predicted.size == 0:
        raise ConfigurationError("label vectors are empty")
    _, p = np.unique(predicted, return_inverse=True)
    _, t = np.unique(truth, return_inverse=True)
    table = np.zeros((p.max() + 1, t.max() + 1), dtype=np.int64)
    np.add.at(table, (p, t), 1)
    # canonical row order: relabeling clusters then leaves every sum bit-identical
    return table[np.lexsort(table.T[::-1])]


def purity(predicted, truth):
    table = _contingency(predicted, truth)
    return float(table.max(axis=1).sum() / table.sum())


def _entropy(counts):
    pr = counts[counts > 0] / counts.sum()
    return float(-(pr * np.log(pr)).sum())


def nmi(predicted, truth):
    """Mutual information over the geometric mean of the two entropies.

    Two single-block partitions score 1. If only one side is a single
    block the score is 0.
    """
    table = _contingency(predicted, truth)
    q = table.sum()
    h_p = _entropy(table.sum(axis=1))
    h_t = _entropy(table.sum(axis=0))
    if h_p == 0.0 and h_t == 0.0:
        return 1.0
    if h_p == 0.0 or h_t == 0.0:
        return 0.0
    joint = table / q
    outer = np.outer(table.sum(axis=1), table.sum(axis=0)) / (q * q)
    nz = joint > 0
    mi = float((joint[nz] * np.log(joint[nz] / outer[nz])).sum())
    return float(min(max(mi / np.sqrt(h_p * h_t), 0.0), 1.0))


def accuracy(predicted, truth):
    """Fraction correct under the best one-to-one cluster to class matching."""
    table = _contingency(predicted, truth)
    r, c = linear_sum_assignment(-table)
    return float(table[r, c].sum() / table.sum())


@dataclass(frozen=True)
class MetricsReport:
    purity: float
    nmi: float
    accuracy: float
    wall_time_s: float
    per_iteration: List[Tuple[float, float]] = field(default_factory=list)

    def to_dict(self):
        return {
            "purity": self.purity,
            "nmi": self.nmi,
            "accuracy": self.accuracy,
            "wall_time_s": self.wall_time_s,
        }


def evaluate(run, truth):
    """Score a :class:`~sspw.clustering.ClusteringRun` against true labels."""
    pred = run.assignments
    per_it = [(r.assign_time_s, r.update_time_s) for r in run.trace]
    return MetricsReport(
        purity=purity(pred, truth),
        nmi=nmi(pred, truth),
        accuracy=accuracy(pred, truth),
        wall_time_s=float(sum(a + u for a, u in per_it)),
        per_iteration=per_it,
    )
