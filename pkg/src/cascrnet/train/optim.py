"""Adam and the halve-on-plateau learning-rate scheduler."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..errors import NonFiniteError
from ..nn import Tensor


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class OptimState:
    lr: float
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: Mapping[str, Tensor], grads: Mapping[str, np.ndarray | Tensor],
              state: OptimState, cfg: AdamConfig) -> OptimState:
    """One bias-corrected Adam update, in place on ``params`` and ``state``.

    ``state.lr`` is the learning rate used, so a scheduler can change it
    between steps. Nothing is touched if any gradient is non-finite.
    """
    arrays = {}
    for name in params:
        g = grads[name]
        g = g.data if isinstance(g, Tensor) else np.asarray(g)
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient for parameter {name}; step refused")
        arrays[name] = g
    state.t += 1
    t = state.t
    bc1 = 1.0 - cfg.beta1 ** t
    bc2 = 1.0 - cfg.beta2 ** t
    for name, p in params.items():
        g = arrays[name].astype(p.dtype, copy=False)
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        p.data = p.data - (state.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)).astype(p.dtype, copy=False)
    return state


class Adam:
    def __init__(self, params: Mapping[str, Tensor], cfg: AdamConfig = AdamConfig()):
        self.params = dict(params)
        self.cfg = cfg
        self.state = OptimState(lr=cfg.lr)

    @property
    def lr(self) -> float:
        return self.state.lr

    @lr.setter
    def lr(self, value: float) -> None:
        self.state.lr = value

    def step(self, grads: Mapping[str, np.ndarray | Tensor]) -> None:
        adam_step(self.params, grads, self.state, self.cfg)


@dataclass
class PlateauScheduler:
    """Multiply lr by ``factor`` after ``patience`` epochs without improvement.

    Lower metric is better; improvement means ``metric < best - min_delta``.
    """

    lr: float = 1e-3
    patience: int = 3
    factor: float = 0.5
    min_delta: float = 1e-4
    min_lr: float = 1e-6
    best: float = math.inf
    stall: int = 0

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError(f"patience must be positive, got {self.patience}")
        self.lr = max(self.lr, self.min_lr)

    def step(self, metric: float) -> float:
        if not math.isfinite(metric):
            raise NonFiniteError(f"scheduler metric is not finite: {metric}")
        if metric < self.best - self.min_delta:
            self.best = metric
            self.stall = 0
        else:
            self.stall += 1
            if self.stall >= self.patience:
                self.lr = max(self.lr * self.factor, self.min_lr)
                self.stall = 0
        return self.lr

    def state_dict(self) -> dict[str, float | int]:
        return {
            "lr": self.lr, "patience": self.patience, "factor": self.factor,
            "min_delta": self.min_delta, "min_lr": self.min_lr, "best": self.best, "stall": self.stall,
        }

    @classmethod
    def from_state(cls, state: Mapping[str, str | float | int]) -> "PlateauScheduler":
        return cls(
            lr=float(state["lr"]), patience=int(state["patience"]), factor=float(state["factor"]),
            min_delta=float(state["min_delta"]), min_lr=float(state["min_lr"]),
            best=float(state["best"]), stall=int(state["stall"]),
        )


def scheduler_step(state: PlateauScheduler, epoch_metric: float) -> float:
    return state.step(epoch_metric)
