"""Parameterised layers and the two composite blocks (SCR, ASPP)."""

from __future__ import annotations

import logging

import numpy as np

from ..errors import ContractViolation
from ..nn import ConvSpec, Tensor, concat_channels, conv2d, dense, global_avg_pool, leaky_relu, maxpool2d, upsample_nearest
from ..nn.init import fan_in_uniform
from .config import ASPPConfig, SCRConfig

log = logging.getLogger(__name__)


class Conv:
    def __init__(self, name: str, spec: ConvSpec):
        self.name = name
        self.spec = spec
        self.weight = Tensor(np.zeros(spec.weight_shape, dtype=np.float32), requires_grad=True, name=f"{name}.weight")
        self.bias = Tensor(np.zeros(spec.out_channels, dtype=np.float32), requires_grad=True, name=f"{name}.bias")

    def init(self, rng: np.random.Generator, alpha: float) -> None:
        fan_in = self.spec.in_channels * self.spec.kernel[0] * self.spec.kernel[1]
        self.weight.data = fan_in_uniform(rng, self.spec.weight_shape, fan_in, alpha)
        self.bias.data = np.zeros(self.spec.out_channels, dtype=np.float32)

    def params(self) -> list[Tensor]:
        return [self.weight, self.bias]

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d(x, self.weight, self.bias, self.spec)


class Dense:
    def __init__(self, name: str, in_features: int, out_features: int):
        self.name = name
        self.in_features = in_features
        self.out_features = out_features
        self.weight = Tensor(np.zeros((in_features, out_features), dtype=np.float32), requires_grad=True, name=f"{name}.weight")
        self.bias = Tensor(np.zeros(out_features, dtype=np.float32), requires_grad=True, name=f"{name}.bias")

    def init(self, rng: np.random.Generator, alpha: float) -> None:
        self.weight.data = fan_in_uniform(rng, self.weight.shape, self.in_features, alpha)
        self.bias.data = np.zeros(self.out_features, dtype=np.float32)

    def params(self) -> list[Tensor]:
        return [self.weight, self.bias]

    def __call__(self, x: Tensor) -> Tensor:
        return dense(x, self.weight, self.bias)


def scr_forward(primary_in: Tensor, shared_in: Tensor, conv: Conv, alpha: float = 0.01) -> Tensor:
    """leaky_relu(conv(maxpool2x2(concat([primary_in, shared_in]))))."""
    a, b = primary_in.shape, shared_in.shape
    if len(a) != 4 or len(b) != 4 or (a[0], a[2], a[3]) != (b[0], b[2], b[3]):
        raise ContractViolation(f"SCR inputs disagree on N/H/W: {a} vs {b}")
    if a[1] + b[1] != conv.spec.in_channels:
        raise ContractViolation(
            f"SCR conv expects {conv.spec.in_channels} channels, inputs give {a[1]} + {b[1]}"
        )
    x = concat_channels([primary_in, shared_in])
    return leaky_relu(conv(maxpool2d(x, 2)), alpha)


class SCRBlock:
    def __init__(self, name: str, primary_channels: int, shared_channels: int, cfg: SCRConfig):
        self.name = name
        self.cfg = cfg
        spec = ConvSpec(primary_channels + shared_channels, cfg.out_channels, cfg.conv_kernel,
                        dilation=cfg.dilation, padding="same")
        self.conv = Conv(f"{name}.conv", spec)

    @property
    def layers(self) -> list[Conv]:
        return [self.conv]

    def __call__(self, primary_in: Tensor, shared_in: Tensor) -> Tensor:
        return scr_forward(primary_in, shared_in, self.conv, self.cfg.alpha)


class ASPPBlock:
    """Parallel 1x1, dilated 3x3 and image-pool branches, concatenated and projected."""

    def __init__(self, name: str, in_channels: int, cfg: ASPPConfig):
        self.name = name
        self.cfg = cfg
        bc = cfg.branch_channels
        self.pointwise = Conv(f"{name}.pointwise", ConvSpec(in_channels, bc, 1))
        self.atrous = [
            Conv(f"{name}.atrous{i}", ConvSpec(in_channels, bc, 3, dilation=r, padding="same"))
            for i, r in enumerate(cfg.dilation_rates)
        ]
        self.image_pool = Conv(f"{name}.image_pool", ConvSpec(in_channels, bc, 1)) if cfg.include_image_pool else None
        self.project = Conv(f"{name}.project", ConvSpec(cfg.concat_channels, cfg.project_channels, 1))

    @property
    def layers(self) -> list[Conv]:
        out = [self.pointwise, *self.atrous]
        if self.image_pool is not None:
            out.append(self.image_pool)
        out.append(self.project)
        return out

    def branches(self, x: Tensor) -> list[Tensor]:
        n, c, h, w = x.shape
        self.cfg.check_rates(h, w)
        a = self.cfg.alpha
        outs = [leaky_relu(self.pointwise(x), a)]
        for conv in self.atrous:
            if conv.spec.dilation[0] >= min(h, w):
                log.debug("ASPP rate %d on %dx%d: only the centre tap sees data", conv.spec.dilation[0], h, w)
            outs.append(leaky_relu(conv(x), a))
        if self.image_pool is not None:
            pooled = leaky_relu(self.image_pool(global_avg_pool(x)), a)
            outs.append(upsample_nearest(pooled, h, w))
        return outs

    def __call__(self, x: Tensor) -> Tensor:
        return leaky_relu(self.project(concat_channels(self.branches(x))), self.cfg.alpha)


def aspp_forward(x: Tensor, block: ASPPBlock) -> Tensor:
    return block(x)
