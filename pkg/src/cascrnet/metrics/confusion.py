from __future__ import annotations

import logging

import numpy as np

from ..errors import ContractViolation

log = logging.getLogger(__name__)


def confusion_matrix(pred_labels, true_labels, k: int) -> np.ndarray:
    """cm[t, p] counts samples of true class t predicted as p."""
    pred = np.asarray(pred_labels, dtype=np.int64)
    true = np.asarray(true_labels, dtype=np.int64)
    if pred.shape != true.shape or pred.ndim != 1:
        raise ContractViolation(f"prediction/label length mismatch: {pred.shape} vs {true.shape}")
    for what, arr in (("prediction", pred), ("label", true)):
        bad = np.nonzero((arr < 0) | (arr >= k))[0]
        if bad.size:
            raise ContractViolation(f"{what} {arr[bad[0]]} at index {bad[0]} outside [0, {k})")
    cm = np.zeros((k, k), dtype=np.int64)
    np.add.at(cm, (true, pred), 1)
    return cm


def normalize_rows(cm: np.ndarray) -> np.ndarray:
    """Row-normalized confusion matrix; all-zero rows stay zero."""
    cm = np.asarray(cm, dtype=np.float64)
    sums = cm.sum(axis=1, keepdims=True)
    return np.divide(cm, sums, out=np.zeros_like(cm), where=sums > 0)


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    num = np.asarray(num, dtype=np.float64)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def per_class_prf(cm: np.ndarray, notes: list[str] | None = None):
    """Per-class precision, recall and F1 plus their unweighted means.

    0/0 cells are defined as 0. Returns ``(precision, recall, f1, macro)``
    where ``macro`` is a dict with keys precision/recall/f1.
    """
    cm = np.asarray(cm)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] < 2:
        raise ContractViolation(f"confusion matrix must be K x K with K >= 2, got {cm.shape}")
    tp = np.diag(cm).astype(np.float64)
    col = cm.sum(axis=0)
    row = cm.sum(axis=1)
    precision = _safe_div(tp, col)
    recall = _safe_div(tp, row)
    f1 = _safe_div(2 * precision * recall, precision + recall)
    if notes is not None:
        for c in np.nonzero(col == 0)[0]:
            notes.append(f"class {c} never predicted; precision set to 0")
        for c in np.nonzero(row == 0)[0]:
            notes.append(f"class {c} has no true samples; recall set to 0")
    macro = {"precision": float(precision.mean()), "recall": float(recall.mean()), "f1": float(f1.mean())}
    return precision, recall, f1, macro


def balanced_accuracy(cm: np.ndarray, notes: list[str] | None = None) -> float:
    """Mean recall over classes that have at least one true sample."""
    cm = np.asarray(cm)
    row = cm.sum(axis=1)
    present = row > 0
    if not present.any():
        raise ValueError("balanced accuracy is undefined for an empty confusion matrix")
    absent = np.nonzero(~present)[0]
    if absent.size:
        msg = f"classes {absent.tolist()} have no true samples and are excluded from balanced accuracy"
        log.debug(msg)
        if notes is not None:
            notes.append(msg)
    recalls = np.diag(cm)[present] / row[present]
    return float(recalls.mean())


def accuracy(cm: np.ndarray) -> float:
    cm = np.asarray(cm)
    total = cm.sum()
    return float(np.trace(cm) / total) if total else 0.0
