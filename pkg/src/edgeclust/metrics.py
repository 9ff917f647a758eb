"""Clustering metrics: pairwise F, BCubed F and NMI.

All three work off the label contingency table, so cost is
O(n + #non-empty cells) regardless of cluster sizes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import Partition, check_lengths


def _labels(p):
    return p.labels if isinstance(p, Partition) else np.asarray(p, dtype=np.int64)


def contingency(pred, gt):
    """Non-empty cells as ``(pred_id, gt_id, count)`` plus both marginals
    (each marginal indexed by the dense ids returned)."""
    a, b = _labels(pred), _labels(gt)
    check_lengths(a, b)
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    ai, bi = ai.ravel(), bi.ravel()
    nb = bi.max() + 1 if len(bi) else 1
    cells, counts = np.unique(ai * nb + bi, return_counts=True)
    return cells // nb, cells % nb, counts, np.bincount(ai), np.bincount(bi)


def _f(p, r):
    return 0.0 if p + r == 0 else 2.0 * p * r / (p + r)


def _pairs(c):
    c = c.astype(np.int64)
    return int(np.sum(c * (c - 1) // 2))


def pairwise_f(pred, gt):
    """(precision, recall, F) over unordered same-cluster node pairs."""
    _, _, cells, pred_sizes, gt_sizes = contingency(pred, gt)
    tp = _pairs(cells)
    pp = _pairs(pred_sizes)
    gp = _pairs(gt_sizes)
    precision = tp / pp if pp else 0.0
    recall = tp / gp if gp else 0.0
    return precision, recall, _f(precision, recall)


def bcubed_f(pred, gt):
    """(precision, recall, F) averaged per item."""
    pi, gi, cells, pred_sizes, gt_sizes = contingency(pred, gt)
    n = int(pred_sizes.sum())
    if n == 0:
        return 0.0, 0.0, 0.0
    c = cells.astype(np.float64)
    # each of the c items in a cell has overlap c
    precision = float(np.sum(c * c / pred_sizes[pi]) / n)
    recall = float(np.sum(c * c / gt_sizes[gi]) / n)
    return precision, recall, _f(precision, recall)


def _entropy(sizes, n):
    p = sizes[sizes > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(pred, gt):
    """Mutual information normalized by sqrt(H(pred) H(gt)).

    Identical partitions score 1 (even a single cluster); otherwise a zero
    entropy on either side scores 0.
    """
    a, b = _labels(pred), _labels(gt)
    check_lengths(a, b)
    n = len(a)
    if n == 0:
        return 0.0
    pi, gi, cells, pred_sizes, gt_sizes = contingency(a, b)
    ha, hb = _entropy(pred_sizes, n), _entropy(gt_sizes, n)
    if len(cells) == len(pred_sizes) == len(gt_sizes):
        # every pred cluster maps to exactly one gt cluster and vice versa
        return 1.0
    if ha == 0.0 or hb == 0.0:
        return 0.0
    c = cells.astype(np.float64)
    mi = float(np.sum(c / n * np.log(c * n / (pred_sizes[pi] * gt_sizes[gi]))))
    return min(max(mi / np.sqrt(ha * hb), 0.0), 1.0)


@dataclass
class EvalReport:
    pairwise: tuple
    bcubed: tuple
    nmi: float
    n: int
    pred_clusters: int
    gt_clusters: int

    def to_dict(self):
        keys = ("precision", "recall", "f")
        return {
            "pairwise": dict(zip(keys, map(float, self.pairwise))),
            "bcubed": dict(zip(keys, map(float, self.bcubed))),
            "nmi": float(self.nmi),
            "n": int(self.n),
            "pred_clusters": int(self.pred_clusters),
            "gt_clusters": int(self.gt_clusters),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def evaluate(pred, gt):
    a, b = _labels(pred), _labels(gt)
    check_lengths(a, b)
    return EvalReport(
        pairwise=pairwise_f(a, b),
        bcubed=bcubed_f(a, b),
        nmi=nmi(a, b),
        n=len(a),
        pred_clusters=len(np.unique(a)),
        gt_clusters=len(np.unique(b)),
    )
