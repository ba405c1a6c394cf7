"""Weight directories and training checkpoints.

A weight directory holds ``model.cfg`` (model keys in ``key = value`` form),
``weights.txt`` (one ``name file shape`` line per parameter, shape written
as ``AxBxC``) and one CTEN file per parameter. A checkpoint is a weight
directory plus Adam moments (``adam_m.<name>.cten``, ``adam_v.<name>.cten``),
``optim.txt``, ``scheduler.txt``, ``trainer.txt`` and the history so far.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .blocks import ModelGraph, build_cascrnet
from .config import load_config, model_config_text, parse_items, run_config_for_model
from .data.cten import read_cten, write_cten
from .errors import ConfigError, FormatError
from .fileio import atomic_write_text
from .train.optim import OptimState, PlateauScheduler

WEIGHTS_INDEX = "weights.txt"
MODEL_CFG = "model.cfg"


class WeightMismatchError(ConfigError):
    """The weight index does not match the architecture in model.cfg."""


def _shape_str(shape) -> str:
    return "x".join(str(s) for s in shape) if shape else "scalar"


def save_weights(model: ModelGraph, directory: str | os.PathLike) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    atomic_write_text(d / MODEL_CFG, model_config_text(run_config_for_model(model.config)))
    lines = []
    for name, p in model.params.items():
        fname = f"{name}.cten"
        write_cten(d / fname, p.data)
        lines.append(f"{name} {fname} {_shape_str(p.shape)}")
    atomic_write_text(d / WEIGHTS_INDEX, "\n".join(lines) + "\n")


def read_weight_index(directory: Path) -> list[tuple[str, str, str]]:
    path = directory / WEIGHTS_INDEX
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read weight index {path}: {exc}") from exc
    rows = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ConfigError(f"{path}:{line_no}: expected 'name file shape'")
        rows.append((parts[0], parts[1], parts[2]))
    return rows


def load_weights(directory: str | os.PathLike) -> ModelGraph:
    """Rebuild the model from model.cfg and fill it from the CTEN files.

    Raises WeightMismatchError naming the first layer whose name or shape
    disagrees with the architecture, and FormatError for corrupt files.
    """
    d = Path(directory)
    cfg = load_config(d / MODEL_CFG)
    model = build_cascrnet(cfg.model_config())
    params = model.params
    expected = list(params.items())
    index = read_weight_index(d)
    for i, (name, p) in enumerate(expected):
        if i >= len(index):
            raise WeightMismatchError(f"weight index ends before layer {name}")
        got_name, fname, shape = index[i]
        if got_name != name:
            raise WeightMismatchError(f"layer {i}: weight index has {got_name}, architecture expects {name}")
        if shape != _shape_str(p.shape):
            raise WeightMismatchError(f"layer {name}: weight index shape {shape}, architecture expects {_shape_str(p.shape)}")
    if len(index) > len(expected):
        raise WeightMismatchError(f"unexpected extra layer {index[len(expected)][0]} in weight index")
    for (name, p), (_, fname, _) in zip(expected, index):
        t = read_cten(d / fname)
        if t.shape != p.shape:
            raise WeightMismatchError(f"layer {name}: file {fname} holds shape {t.shape}, expected {p.shape}")
        p.data = t.data.copy()
    return model


def _write_kv(path: Path, values: dict) -> None:
    atomic_write_text(path, "".join(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n" for k, v in values.items()))


def _read_kv(path: Path) -> dict[str, str]:
    try:
        return parse_items(path.read_text(encoding="utf-8"), str(path))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


@dataclass
class TrainerState:
    epoch: int  # epochs completed
    best_val_loss: float


def save_checkpoint(directory: str | os.PathLike, model: ModelGraph, optim: OptimState,
                    scheduler: PlateauScheduler, trainer: TrainerState, history_csv: str) -> None:
    d = Path(directory)
    save_weights(model, d)
    for name in model.params:
        if name in optim.m:
            write_cten(d / f"adam_m.{name}.cten", optim.m[name])
            write_cten(d / f"adam_v.{name}.cten", optim.v[name])
    _write_kv(d / "optim.txt", {"t": optim.t, "lr": float(optim.lr)})
    _write_kv(d / "scheduler.txt", scheduler.state_dict())
    _write_kv(d / "trainer.txt", {"epoch": trainer.epoch, "best_val_loss": float(trainer.best_val_loss)})
    atomic_write_text(d / "history.csv", history_csv)


def load_checkpoint(directory: str | os.PathLike):
    """Return (model, optim_state, scheduler, trainer_state, history_csv_text)."""
    d = Path(directory)
    model = load_weights(d)
    o = _read_kv(d / "optim.txt")
    state = OptimState(lr=float(o["lr"]), t=int(o["t"]))
    if state.t > 0:
        for name in model.params:
            state.m[name] = read_cten(d / f"adam_m.{name}.cten").data.copy()
            state.v[name] = read_cten(d / f"adam_v.{name}.cten").data.copy()
    scheduler = PlateauScheduler.from_state(_read_kv(d / "scheduler.txt"))
    tr = _read_kv(d / "trainer.txt")
    trainer = TrainerState(epoch=int(tr["epoch"]), best_val_loss=float(tr["best_val_loss"]))
    history = (d / "history.csv").read_text(encoding="utf-8")
    return model, state, scheduler, trainer, history


__all__ = [
    "FormatError", "TrainerState", "WeightMismatchError", "load_checkpoint", "load_weights",
    "read_weight_index", "save_checkpoint", "save_weights",
]
