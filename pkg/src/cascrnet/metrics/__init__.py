"""Confusion matrices, per-class and macro rates, balanced accuracy, one-vs-rest ROC/AUC."""

from .confusion import accuracy, balanced_accuracy, confusion_matrix, normalize_rows, per_class_prf
from .report import (
    REPORT_COLUMNS,
    MetricsReport,
    evaluate,
    metrics_from_scores,
    predict_logits,
    render_confusion_csv,
    render_report,
    render_report_csv,
    render_roc_csv,
    render_roc_svg,
)
from .roc import RocCurve, auc_trapezoid, average_ranks, binary_auc, roc_auc_ovr, roc_points

__all__ = [
    "MetricsReport", "REPORT_COLUMNS", "RocCurve", "accuracy", "auc_trapezoid", "average_ranks",
    "balanced_accuracy", "binary_auc", "confusion_matrix", "evaluate", "metrics_from_scores",
    "normalize_rows", "per_class_prf", "predict_logits", "render_confusion_csv", "render_report",
    "render_report_csv", "render_roc_csv", "render_roc_svg", "roc_auc_ovr", "roc_points",
]
