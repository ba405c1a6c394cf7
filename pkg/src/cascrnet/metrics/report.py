"""Evaluation pass, the MetricsReport, and its text/CSV/SVG renderings."""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .. import CLASS_NAMES, NUM_CLASSES
from ..nn import softmax_array
from .confusion import accuracy, balanced_accuracy, confusion_matrix, normalize_rows, per_class_prf
from .roc import RocCurve, roc_auc_ovr

REPORT_COLUMNS = ("model", "avg_acc", "avg_prec", "avg_auc", "avg_recall", "avg_f1", "bal_acc", "n")
TABLE_HEADERS = ("Method", "Image Size", "Avg. Acc.", "Avg. Prec.", "Avg. AUC", "Avg. Recall", "Avg. F1", "Bal. Acc.")


@dataclass
class MetricsReport:
    confusion: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    auc: np.ndarray  # NaN where a class could not be scored
    curves: list[RocCurve]
    avg_acc: float
    avg_prec: float
    avg_recall: float
    avg_f1: float
    avg_auc: float
    bal_acc: float
    n: int
    warnings: list[str] = field(default_factory=list)

    @property
    def normalized_confusion(self) -> np.ndarray:
        return normalize_rows(self.confusion)

    def as_row(self, model: str) -> dict[str, object]:
        return {
            "model": model, "avg_acc": self.avg_acc, "avg_prec": self.avg_prec,
            "avg_auc": self.avg_auc, "avg_recall": self.avg_recall, "avg_f1": self.avg_f1,
            "bal_acc": self.bal_acc, "n": self.n,
        }


def metrics_from_scores(probs: np.ndarray, labels, k: int = NUM_CLASSES) -> MetricsReport:
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    notes: list[str] = []
    cm = confusion_matrix(probs.argmax(axis=1), labels, k)
    precision, recall, f1, macro = per_class_prf(cm, notes)
    curves, mean_auc = roc_auc_ovr(probs, labels, notes)
    auc = np.full(k, np.nan)
    for cv in curves:
        auc[cv.class_index] = cv.auc
    return MetricsReport(
        confusion=cm, precision=precision, recall=recall, f1=f1, auc=auc, curves=curves,
        avg_acc=accuracy(cm), avg_prec=macro["precision"], avg_recall=macro["recall"],
        avg_f1=macro["f1"], avg_auc=mean_auc, bal_acc=balanced_accuracy(cm, notes),
        n=int(labels.size), warnings=notes,
    )


def predict_logits(model, manifest, batch_size: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Logits in manifest order (no shuffling)."""
    from ..data import batch_iter

    size = model.config.input_size
    chunks, labels = [], []
    for x, y in batch_iter(manifest, batch_size, seed=0, epoch=0, size=size, shuffle=False, dtype=model.dtype):
        chunks.append(model(x).data)
        labels.append(y)
    return np.concatenate(chunks), np.concatenate(labels)


def evaluate(model, manifest, batch_size: int = 32) -> MetricsReport:
    logits, labels = predict_logits(model, manifest, batch_size)
    return metrics_from_scores(softmax_array(logits.astype(np.float64)), labels)


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def render_report(report: MetricsReport, model: str = "CASCRNet", image_size: str = "") -> str:
    """Fixed-width text table with the same column order as the published comparison."""
    row = [model, image_size, *(_fmt(getattr(report, k)) for k in REPORT_COLUMNS[1:7])]
    widths = [max(len(h), len(v)) for h, v in zip(TABLE_HEADERS, row)]
    line = lambda cells: " | ".join(c.ljust(w) for c, w in zip(cells, widths))
    out = [line(TABLE_HEADERS), "-+-".join("-" * w for w in widths), line(row), ""]
    out.append("per-class:")
    out.append(f"  {'class':<17} {'prec':>6} {'recall':>6} {'f1':>6} {'auc':>6} {'support':>7}")
    support = report.confusion.sum(axis=1)
    for c in range(report.confusion.shape[0]):
        name = CLASS_NAMES[c] if report.confusion.shape[0] == NUM_CLASSES else str(c)
        auc = "   n/a" if np.isnan(report.auc[c]) else f"{report.auc[c]:6.3f}"
        out.append(f"  {name:<17} {report.precision[c]:6.3f} {report.recall[c]:6.3f} {report.f1[c]:6.3f} {auc} {support[c]:7d}")
    return "\n".join(out) + "\n"


def render_report_csv(rows: list[dict[str, object]]) -> str:
    lines = [",".join(REPORT_COLUMNS)]
    for r in rows:
        cells = []
        for k in REPORT_COLUMNS:
            v = r[k]
            cells.append(repr(float(v)) if isinstance(v, float) else str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def render_confusion_csv(cm: np.ndarray) -> str:
    k = cm.shape[0]
    names = CLASS_NAMES if k == NUM_CLASSES else [str(i) for i in range(k)]
    lines = ["true\\pred," + ",".join(f'"{n}"' if "," in n else n for n in names)]
    for i in range(k):
        cells = [f"{v:.6f}" if cm.dtype.kind == "f" else str(int(v)) for v in cm[i]]
        lines.append(names[i] + "," + ",".join(cells))
    return "\n".join(lines) + "\n"


def render_roc_csv(curves: list[RocCurve]) -> str:
    lines = ["class,fpr,tpr"]
    for cv in curves:
        name = CLASS_NAMES[cv.class_index] if cv.class_index < NUM_CLASSES else str(cv.class_index)
        for f, t in zip(cv.fpr, cv.tpr):
            lines.append(f"{name},{float(f)!r},{float(t)!r}")
    return "\n".join(lines) + "\n"


_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def render_roc_svg(curves: list[RocCurve], title: str = "ROC Curve") -> str:
    """640 x 640 SVG: one labelled polyline per class plus the chance diagonal."""
    size, margin = 640, 60
    span = size - 2 * margin

    def pt(f: float, t: float) -> str:
        return f"{margin + f * span:.2f},{size - margin - t * span:.2f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'<text x="{size / 2}" y="30" text-anchor="middle" font-size="18">{escape(title)}</text>',
        f'<rect x="{margin}" y="{margin}" width="{span}" height="{span}" fill="none" stroke="black"/>',
        f'<text x="{size / 2}" y="{size - 20}" text-anchor="middle" font-size="14">False positive rate</text>',
        f'<text x="20" y="{size / 2}" text-anchor="middle" font-size="14" transform="rotate(-90 20 {size / 2})">True positive rate</text>',
        f'<polyline class="chance" points="{pt(0, 0)} {pt(1, 1)}" fill="none" stroke="gray" stroke-dasharray="6,4"/>',
    ]
    for i, cv in enumerate(curves):
        name = CLASS_NAMES[cv.class_index] if cv.class_index < NUM_CLASSES else str(cv.class_index)
        label = escape(f"{name} (AUC = {cv.auc:.3f})")
        colour = _PALETTE[cv.class_index % len(_PALETTE)]
        points = " ".join(pt(f, t) for f, t in zip(cv.fpr, cv.tpr))
        parts.append(
            f'<polyline class="roc" data-class="{escape(name)}" points="{points}" fill="none" '
            f'stroke="{colour}" stroke-width="2"><title>{label}</title></polyline>'
        )
        y = margin + span - 20 * (len(curves) - i)
        parts.append(f'<text x="{margin + span - 10}" y="{y}" text-anchor="end" font-size="12" fill="{colour}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
