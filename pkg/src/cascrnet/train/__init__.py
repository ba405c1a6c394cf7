"""Focal loss, Adam, plateau-halving scheduler and the training loop."""

from .losses import FocalLossConfig, focal_loss, focal_loss_op, focal_term
from .optim import Adam, AdamConfig, OptimState, PlateauScheduler, adam_step, scheduler_step
from .loop import (
    HISTORY_COLUMNS,
    EpochSummary,
    History,
    TrainConfig,
    TrainingDiverged,
    fit,
    train_epoch,
    train_step,
    validate,
)

__all__ = [
    "Adam", "AdamConfig", "EpochSummary", "FocalLossConfig", "HISTORY_COLUMNS", "History",
    "OptimState", "PlateauScheduler", "TrainConfig", "TrainingDiverged", "adam_step", "fit",
    "focal_loss", "focal_loss_op", "focal_term", "scheduler_step", "train_epoch", "train_step",
    "validate",
]
