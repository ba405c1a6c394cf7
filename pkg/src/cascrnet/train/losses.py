"""Focal loss with an analytic gradient through softmax."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import NUM_CLASSES
from ..errors import ContractViolation
from ..nn import Tensor
from ..nn.tensor import record

P_FLOOR = 1e-12


@dataclass(frozen=True)
class FocalLossConfig:
    gamma: float = 2.0
    class_weights: tuple[float, ...] | None = None
    num_classes: int = NUM_CLASSES

    def __post_init__(self):
        if self.gamma < 0:
            raise ContractViolation(f"focal gamma must be >= 0, got {self.gamma}")
        if self.class_weights is not None:
            w = tuple(float(v) for v in self.class_weights)
            if len(w) != self.num_classes:
                raise ContractViolation(
                    f"class_weights has {len(w)} entries, expected {self.num_classes}"
                )
            if any(not (v > 0 and math.isfinite(v)) for v in w):
                raise ContractViolation("class_weights must be positive and finite")
            object.__setattr__(self, "class_weights", w)


def focal_term(p_t, gamma: float, weight=1.0):
    """Per-sample -w * (1 - p_t)^gamma * log(p_t)."""
    p = np.maximum(np.asarray(p_t, dtype=np.float64), P_FLOOR)
    return -np.asarray(weight) * (1.0 - p) ** gamma * np.log(p)


def _check_labels(labels: np.ndarray, n: int, k: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ContractViolation(f"expected {n} labels, got shape {labels.shape}")
    bad = np.nonzero((labels < 0) | (labels >= k))[0]
    if bad.size:
        i = int(bad[0])
        raise ContractViolation(f"label {labels[i]} at sample {i} is outside [0, {k})")
    return labels.astype(np.int64)


def focal_loss(logits, labels, cfg: FocalLossConfig = FocalLossConfig()) -> tuple[float, np.ndarray]:
    """Mean focal loss over the batch and its gradient w.r.t. the logits.

    Works in the logits' dtype; the returned loss is a Python float.
    """
    z = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    if z.ndim != 2:
        raise ContractViolation(f"focal_loss expects N x K logits, got shape {z.shape}")
    n, k = z.shape
    if k != cfg.num_classes:
        raise ContractViolation(f"focal_loss expects {cfg.num_classes} classes, got {k}")
    y = _check_labels(labels, n, k)
    rows = np.arange(n)

    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    denom = e.sum(axis=1, keepdims=True)
    p = e / denom
    log_pt = shifted[rows, y] - np.log(denom[:, 0])
    floor = np.log(z.dtype.type(P_FLOOR))
    clamped = log_pt < floor
    log_pt = np.where(clamped, floor, log_pt)
    pt = np.where(clamped, z.dtype.type(P_FLOOR), p[rows, y])

    w = np.ones(n, dtype=z.dtype) if cfg.class_weights is None else np.asarray(cfg.class_weights, dtype=z.dtype)[y]
    g = cfg.gamma
    one_minus = 1.0 - pt
    mod = one_minus ** g
    per_sample = -w * mod * log_pt

    # dL/dz_j = w * [g (1-p)^(g-1) p log p - (1-p)^g] * (onehot_j - p_j)
    if g == 0:
        dmod = np.zeros_like(pt)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            dmod = np.where(one_minus > 0, g * one_minus ** (g - 1) * pt * log_pt, 0.0)
    coef = w * (dmod - mod)
    onehot = np.zeros_like(p)
    onehot[rows, y] = 1
    grad = (coef[:, None] * (onehot - p)) / z.dtype.type(n)
    # clamped samples sit on a flat piece of the clamp
    grad[clamped] = 0
    return float(per_sample.sum() / n), grad.astype(z.dtype, copy=False)


def focal_loss_op(logits: Tensor, labels, cfg: FocalLossConfig = FocalLossConfig()) -> Tensor:
    """Tape-recorded scalar focal loss."""
    value, grad = focal_loss(logits, labels, cfg)
    out = Tensor(np.array(value, dtype=logits.dtype))

    def backward(g):
        return (grad * g.reshape(-1)[0],)

    return record("focal_loss", (logits,), out, backward)

