"""CASCRNet assembly: stem -> SCR stages (fed by a shared stem path) -> ASPP -> GAP -> dense."""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation
from ..nn import ConvSpec, GradTape, Tensor, avg_pool2d, flatten, global_avg_pool, leaky_relu
from .config import ModelConfig, SCRConfig
from .layers import ASPPBlock, Conv, Dense, SCRBlock


@dataclass(frozen=True)
class ParamRow:
    name: str
    shape: tuple[int, ...]
    count: int


class ModelGraph:
    def __init__(self, config: ModelConfig):
        self.config = config
        if config.architecture == "dense":
            self.stem = None
            self.stages: list[SCRBlock] = []
            self.aspp = None
            self.head = Dense("head", config.dense_features, config.num_classes)
            return
        self.stem = Conv("stem", ConvSpec(config.in_channels, config.stem_channels, 3, padding="same"))
        self.stages = []
        prev = config.stem_channels
        for k, ch in enumerate(config.stage_channels):
            scr = SCRConfig(out_channels=ch, dilation=config.scr_dilation, alpha=config.alpha)
            self.stages.append(SCRBlock(f"scr{k}", prev, config.stem_channels, scr))
            prev = ch
        self.aspp = ASPPBlock("aspp", prev, config.aspp)
        self.head = Dense("head", config.aspp.project_channels, config.num_classes)

    @property
    def layers(self) -> list[Conv | Dense]:
        out: list[Conv | Dense] = []
        if self.stem is not None:
            out.append(self.stem)
        for s in self.stages:
            out.extend(s.layers)
        if self.aspp is not None:
            out.extend(self.aspp.layers)
        out.append(self.head)
        return out

    @property
    def params(self) -> dict[str, Tensor]:
        return {p.name: p for layer in self.layers for p in layer.params()}

    @property
    def dtype(self):
        return self.head.weight.dtype

    def init(self, seed: int) -> None:
        rng = np.random.default_rng(seed)
        for layer in self.layers:
            layer.init(rng, self.config.alpha)

    def astype(self, dtype) -> "ModelGraph":
        other = copy.deepcopy(self)
        for p in other.params.values():
            p.data = p.data.astype(dtype)
        return other

    def input_shape(self) -> tuple[int, ...]:
        c = self.config
        if c.architecture == "dense":
            return (c.dense_features,)
        return (c.in_channels, c.input_size, c.input_size)

    def __call__(self, x: Tensor) -> Tensor:
        if tuple(x.shape[1:]) != self.input_shape() or x.shape[0] < 1:
            raise ContractViolation(f"model expects N x {self.input_shape()}, got {x.shape}")
        if self.stem is None:
            return self.head(x)
        a = self.config.alpha
        s0 = leaky_relu(self.stem(x), a)
        out = s0
        for k, stage in enumerate(self.stages):
            shared = avg_pool2d(s0, 2 ** k)
            out = stage(out, shared)
        out = self.aspp(out)
        return self.head(flatten(global_avg_pool(out)))


def build_cascrnet(cfg: ModelConfig) -> ModelGraph:
    cfg.validate()
    model = ModelGraph(cfg)
    model.init(cfg.seed)
    return model


def model_forward(model: ModelGraph, batch: Tensor, record_tape: bool = False) -> tuple[Tensor, GradTape | None]:
    if not record_tape:
        return model(batch), None
    with GradTape() as tape:
        logits = model(batch)
    return logits, tape


def param_table(model: ModelGraph) -> list[ParamRow]:
    return [ParamRow(name, tuple(p.shape), p.size) for name, p in model.params.items()]


def param_count(model: ModelGraph) -> int:
    return sum(row.count for row in param_table(model))
