"""One-vs-rest ROC curves and AUC."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation

log = logging.getLogger(__name__)


@dataclass
class RocCurve:
    class_index: int
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float


def average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their mean rank."""
    x = np.asarray(x)
    order = np.argsort(x, kind="stable")
    sorted_x = x[order]
    boundaries = np.concatenate(([True], sorted_x[1:] != sorted_x[:-1], [True]))
    starts = np.nonzero(boundaries)[0]
    ranks = np.empty(x.size, dtype=np.float64)
    for a, b in zip(starts[:-1], starts[1:]):
        ranks[order[a:b]] = (a + 1 + b) / 2.0
    return ranks


def binary_auc(scores, positive) -> float:
    """Mann-Whitney U / (P * N): probability a positive outranks a negative, ties = 1/2."""
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative")
    ranks = average_ranks(scores)
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_points(scores, positive) -> tuple[np.ndarray, np.ndarray]:
    """(fpr, tpr) from (0, 0) to (1, 1), one point per distinct score threshold."""
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    p = positive[order]
    tps = np.cumsum(p)
    fps = np.cumsum(~p)
    last = np.concatenate((s[1:] != s[:-1], [True]))
    tps, fps = tps[last], fps[last]
    n_pos, n_neg = int(positive.sum()), int((~positive).sum())
    fpr = np.concatenate(([0.0], fps / n_neg))
    tpr = np.concatenate(([0.0], tps / n_pos))
    return fpr, tpr


def auc_trapezoid(fpr: np.ndarray, tpr: np.ndarray) -> float:
    fpr = np.asarray(fpr, dtype=np.float64)
    tpr = np.asarray(tpr, dtype=np.float64)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def check_score_rows(scores: np.ndarray, tol: float = 1e-6) -> None:
    sums = scores.sum(axis=1)
    bad = np.nonzero(np.abs(sums - 1.0) > tol)[0]
    if bad.size:
        i = int(bad[0])
        raise ContractViolation(f"score row {i} sums to {sums[i]!r}, expected 1 within {tol}")


def roc_auc_ovr(scores, true_labels, notes: list[str] | None = None) -> tuple[list[RocCurve], float]:
    """Per-class one-vs-rest curves and the unweighted mean AUC over scorable classes.

    A class with no positives (or no negatives) is skipped with a note.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(true_labels, dtype=np.int64)
    if scores.ndim != 2 or scores.shape[0] != labels.shape[0]:
        raise ContractViolation(f"scores {scores.shape} and labels {labels.shape} disagree")
    check_score_rows(scores)
    curves = []
    for c in range(scores.shape[1]):
        pos = labels == c
        if pos.all() or not pos.any():
            msg = f"class {c} has {'no' if not pos.any() else 'only'} positive samples; AUC skipped"
            log.debug(msg)
            if notes is not None:
                notes.append(msg)
            continue
        fpr, tpr = roc_points(scores[:, c], pos)
        curves.append(RocCurve(c, fpr, tpr, binary_auc(scores[:, c], pos)))
    if not curves:
        if notes is not None:
            notes.append("no class has both positive and negative samples; mean AUC undefined")
        return [], float("nan")
    return curves, float(np.mean([cv.auc for cv in curves]))
