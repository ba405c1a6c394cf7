from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from ..errors import DataError, NonFiniteError
from ..fileio import atomic_write_text
from ..nn import GradTape, Tensor, softmax_array
from .losses import FocalLossConfig, focal_loss, focal_loss_op
from .optim import Adam, AdamConfig, PlateauScheduler

log = logging.getLogger(__name__)

HISTORY_COLUMNS = ("epoch", "train_loss", "train_acc", "val_loss", "val_bal_acc", "val_mean_auc", "val_f1_macro", "lr")


class TrainingDiverged(NonFiniteError):
    def __init__(self, message: str, batch_index: int, lr: float):
        super().__init__(message)
        self.batch_index = batch_index
        self.lr = lr


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    seed: int = 0
    focal: FocalLossConfig = field(default_factory=FocalLossConfig)
    adam: AdamConfig = field(default_factory=AdamConfig)
    patience: int = 3
    plateau_factor: float = 0.5
    min_delta: float = 1e-4
    min_lr: float = 1e-6
    checkpoint_every: int = 1
    augment_flip: bool = False
    eval_batch_size: int = 64


@dataclass
class EpochSummary:
    loss: float
    accuracy: float
    samples: int


def train_step(model, x: Tensor, labels: np.ndarray, optim: Adam, focal: FocalLossConfig) -> tuple[float, int]:
    """One forward/backward/update. Returns (batch mean loss, correct count)."""
    # overflow is caught by the explicit finiteness checks below and in Adam
    with np.errstate(over="ignore", invalid="ignore"), GradTape() as tape:
        logits = model(x)
        loss = focal_loss_op(logits, labels, focal)
    value = loss.item()
    if not math.isfinite(value):
        raise NonFiniteError(f"non-finite loss {value}")
    with np.errstate(over="ignore", invalid="ignore"):
        grads = tape.backward(loss)
    optim.step({name: grads[p] for name, p in model.params.items()})
    correct = int((logits.data.argmax(axis=1) == labels).sum())
    return value, correct


def train_epoch(model, batches: Iterable[tuple[Tensor, np.ndarray]], optim: Adam,
                focal: FocalLossConfig = FocalLossConfig()) -> EpochSummary:
    total_loss, correct, n = 0.0, 0, 0
    for i, (x, y) in enumerate(batches):
        try:
            loss, ok = train_step(model, x, y, optim, focal)
        except NonFiniteError as exc:
            raise TrainingDiverged(f"training diverged at batch {i} (lr={optim.lr}): {exc}", i, optim.lr) from exc
        total_loss += loss * len(y)
        correct += ok
        n += len(y)
    if n == 0:
        raise DataError("training epoch saw no samples")
    return EpochSummary(total_loss / n, correct / n, n)


@dataclass
class History:
    rows: list[dict[str, float]] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = [",".join(HISTORY_COLUMNS)]
        for r in self.rows:
            lines.append(",".join(str(int(r[c])) if c == "epoch" else repr(float(r[c])) for c in HISTORY_COLUMNS))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "History":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or tuple(lines[0].split(",")) != HISTORY_COLUMNS:
            raise DataError("history CSV has an unexpected header")
        rows = []
        for ln in lines[1:]:
            vals = ln.split(",")
            rows.append({c: (int(v) if c == "epoch" else float(v)) for c, v in zip(HISTORY_COLUMNS, vals)})
        return cls(rows)

    def column(self, name: str) -> list[float]:
        return [r[name] for r in self.rows]


def validate(model, manifest, focal: FocalLossConfig, batch_size: int):
    """Validation loss (same focal setup as training) and the metrics report."""
    from ..metrics import metrics_from_scores, predict_logits

    logits, labels = predict_logits(model, manifest, batch_size)
    loss, _ = focal_loss(logits.astype(np.float64), labels, focal)
    return loss, metrics_from_scores(softmax_array(logits.astype(np.float64)), labels)


def _check_disjoint(train_set, val_set) -> None:
    a = {os.path.normpath(train_set.root / p) for p in train_set.paths}
    b = {os.path.normpath(val_set.root / p) for p in val_set.paths}
    shared = a & b
    if shared:
        raise DataError(f"train and validation manifests share {len(shared)} file(s), e.g. {sorted(shared)[0]}")


def fit(model, train_set, val_set, cfg: TrainConfig, out_dir: str | os.PathLike | None = None,
        resume_from: str | os.PathLike | None = None,
        on_epoch: Callable[[dict[str, float]], None] | None = None) -> History:
    """Train for ``cfg.epochs`` epochs with per-epoch validation and plateau halving.

    With ``out_dir`` set, writes ``history.csv`` after every epoch, a
    checkpoint under ``checkpoints/epoch_NNNN`` every ``checkpoint_every``
    epochs, and the lowest-validation-loss weights under ``best``.
    ``resume_from`` continues a run from one of those checkpoints; ``model``
    is then updated in place from the checkpoint weights.
    """
    from ..checkpoint import TrainerState, load_checkpoint, save_checkpoint, save_weights

    if len(train_set) == 0 or len(val_set) == 0:
        raise DataError("refusing to train on an empty train or validation set")
    _check_disjoint(train_set, val_set)

    optim = Adam(model.params, cfg.adam)
    scheduler = PlateauScheduler(lr=cfg.adam.lr, patience=cfg.patience, factor=cfg.plateau_factor,
                                 min_delta=cfg.min_delta, min_lr=cfg.min_lr)
    optim.lr = scheduler.lr
    history = History()
    trainer = TrainerState(epoch=0, best_val_loss=math.inf)
    if resume_from is not None:
        loaded, state, scheduler, trainer, hist_text = load_checkpoint(resume_from)
        for name, p in model.params.items():
            p.data = loaded.params[name].data.astype(p.dtype)
        optim.state = state
        history = History.from_csv(hist_text)

    out = Path(out_dir) if out_dir is not None else None
    size = model.config.input_size
    from ..data import batch_iter

    for epoch in range(trainer.epoch, cfg.epochs):
        batches = batch_iter(train_set, cfg.batch_size, cfg.seed, epoch, size,
                             augment_flip=cfg.augment_flip, dtype=model.dtype)
        summary = train_epoch(model, batches, optim, cfg.focal)
        val_loss, report = validate(model, val_set, cfg.focal, cfg.eval_batch_size)
        if not math.isfinite(val_loss):
            raise TrainingDiverged(f"validation loss is {val_loss} after epoch {epoch + 1}", -1, optim.lr)
        lr = scheduler.step(val_loss)
        optim.lr = lr
        row = {
            "epoch": epoch + 1, "train_loss": summary.loss, "train_acc": summary.accuracy,
            "val_loss": val_loss, "val_bal_acc": report.bal_acc, "val_mean_auc": report.avg_auc,
            "val_f1_macro": report.avg_f1, "lr": lr,
        }
        history.rows.append(row)
        trainer.epoch = epoch + 1
        improved = val_loss < trainer.best_val_loss
        if improved:
            trainer.best_val_loss = val_loss
        log.info("epoch %d: train_loss=%.4f train_acc=%.3f val_loss=%.4f bal_acc=%.3f lr=%g",
                 epoch + 1, summary.loss, summary.accuracy, val_loss, report.bal_acc, lr)
        if out is not None:
            csv_text = history.to_csv()
            atomic_write_text(out / "history.csv", csv_text)
            if improved:
                save_weights(model, out / "best")
            if (epoch + 1) % cfg.checkpoint_every == 0:
                save_checkpoint(out / "checkpoints" / f"epoch_{epoch + 1:04d}", model, optim.state,
                                scheduler, trainer, csv_text)
        if on_epoch is not None:
            on_epoch(row)
    return history
