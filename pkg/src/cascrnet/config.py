"""Flat ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored; unknown keys are an error. The
resolved form (every key, defaults filled in) is written next to each run
and loads back to an identical configuration.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .blocks import ASPPConfig, ModelConfig
from .errors import ConfigError, InvalidSpecError


def _bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _ints(v: str) -> tuple[int, ...]:
    parts = [p.strip() for p in v.split(",") if p.strip()]
    if not parts:
        raise ValueError("expected a comma-separated list of integers")
    return tuple(int(p) for p in parts)


def _choice(*options: str):
    def parse(v: str) -> str:
        v = v.strip()
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {v!r}")
        return v

    return parse


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class RunConfig:
    # model
    architecture: str = "cascrnet"
    input_size: int = 32
    stem_channels: int = 8
    stage_channels: tuple[int, ...] = (16, 32)
    scr_dilation: int = 2
    aspp_rates: tuple[int, ...] = (2, 4, 8)
    aspp_branch_channels: int = 16
    aspp_project_channels: int = 32
    aspp_image_pool: bool = True
    leaky_alpha: float = 0.01
    num_classes: int = 10
    dense_features: int = 4
    # training
    seed: int = 0
    epochs: int = 50
    batch_size: int = 32
    eval_batch_size: int = 64
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    focal_gamma: float = 2.0
    class_weighting: str = "none"
    patience: int = 3
    plateau_factor: float = 0.5
    min_delta: float = 1e-4
    min_lr: float = 1e-6
    checkpoint_every: int = 1
    val_fraction: float = 0.2
    augment_flip: bool = False
    # paths (command-line flags take precedence)
    data_dir: str = ""
    out_dir: str = ""

    def model_config(self) -> ModelConfig:
        try:
            aspp = ASPPConfig(
                branch_channels=self.aspp_branch_channels,
                dilation_rates=self.aspp_rates,
                include_image_pool=self.aspp_image_pool,
                project_channels=self.aspp_project_channels,
                alpha=self.leaky_alpha,
            )
            return ModelConfig(
                input_size=self.input_size, stem_channels=self.stem_channels,
                stage_channels=self.stage_channels, scr_dilation=self.scr_dilation, aspp=aspp,
                num_classes=self.num_classes, alpha=self.leaky_alpha, seed=self.seed,
                architecture=self.architecture, dense_features=self.dense_features,
            )
        except InvalidSpecError as exc:
            raise ConfigError(f"invalid model configuration: {exc}") from exc

    def to_text(self) -> str:
        lines = ["# resolved configuration"]
        for f in fields(self):
            lines.append(f"{f.name} = {_fmt(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **kw)


_PARSERS = {
    "architecture": _choice("cascrnet", "dense"),
    "stage_channels": _ints,
    "aspp_rates": _ints,
    "aspp_image_pool": _bool,
    "augment_flip": _bool,
    "class_weighting": _choice("none", "inverse_frequency"),
    "data_dir": str.strip,
    "out_dir": str.strip,
}
for _f in fields(RunConfig):
    if _f.name not in _PARSERS:
        _PARSERS[_f.name] = {"int": int, "float": float}[_f.type]

_POSITIVE = {
    "input_size", "stem_channels", "scr_dilation", "aspp_branch_channels", "aspp_project_channels",
    "num_classes", "dense_features", "epochs", "batch_size", "eval_batch_size", "patience",
    "checkpoint_every",
}


def parse_items(text: str, source: str = "<config>") -> dict[str, str]:
    items: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{line_no}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in items:
            raise ConfigError(f"{source}:{line_no}: key '{key}' given twice")
        items[key] = value
    return items


def config_from_items(items: dict[str, str], base: RunConfig | None = None) -> RunConfig:
    values = {}
    for key, raw in items.items():
        parser = _PARSERS.get(key)
        if parser is None:
            raise ConfigError(f"unknown config key '{key}'")
        try:
            v = parser(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for '{key}': {exc}") from exc
        if key in _POSITIVE and v < 1:
            raise ConfigError(f"bad value for '{key}': must be positive, got {v}")
        values[key] = v
    cfg = replace(base or RunConfig(), **values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if any(c < 1 for c in cfg.stage_channels):
        raise ConfigError("bad value for 'stage_channels': counts must be positive")
    if not 0 < cfg.val_fraction < 1:
        raise ConfigError(f"bad value for 'val_fraction': must be in (0, 1), got {cfg.val_fraction}")
    if cfg.lr < 0:
        raise ConfigError(f"bad value for 'lr': must be >= 0, got {cfg.lr}")
    if cfg.focal_gamma < 0:
        raise ConfigError(f"bad value for 'focal_gamma': must be >= 0, got {cfg.focal_gamma}")
    if not 0 < cfg.plateau_factor < 1:
        raise ConfigError(f"bad value for 'plateau_factor': must be in (0, 1), got {cfg.plateau_factor}")
    if cfg.min_lr < 0:
        raise ConfigError(f"bad value for 'min_lr': must be >= 0, got {cfg.min_lr}")
    if cfg.leaky_alpha < 0:
        raise ConfigError(f"bad value for 'leaky_alpha': must be >= 0, got {cfg.leaky_alpha}")


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    return config_from_items(parse_items(text, source))


def load_config(path: str | os.PathLike) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text, str(path))


MODEL_KEYS = (
    "architecture", "input_size", "stem_channels", "stage_channels", "scr_dilation", "aspp_rates",
    "aspp_branch_channels", "aspp_project_channels", "aspp_image_pool", "leaky_alpha",
    "num_classes", "dense_features", "seed",
)


def model_config_text(cfg: RunConfig) -> str:
    return "".join(f"{k} = {_fmt(getattr(cfg, k))}\n" for k in MODEL_KEYS)


def run_config_for_model(model_cfg: ModelConfig) -> RunConfig:
    return RunConfig(
        architecture=model_cfg.architecture, input_size=model_cfg.input_size,
        stem_channels=model_cfg.stem_channels, stage_channels=model_cfg.stage_channels,
        scr_dilation=model_cfg.scr_dilation, aspp_rates=model_cfg.aspp.dilation_rates,
        aspp_branch_channels=model_cfg.aspp.branch_channels,
        aspp_project_channels=model_cfg.aspp.project_channels,
        aspp_image_pool=model_cfg.aspp.include_image_pool, leaky_alpha=model_cfg.alpha,
        num_classes=model_cfg.num_classes, dense_features=model_cfg.dense_features, seed=model_cfg.seed,
    )
