"""Tensor type, differentiable primitives and the finite-difference oracle."""

from .gradcheck import GradCheckReport, ParamCheck, grad_check, relative_error
from .ops import (
    ConvSpec,
    avg_pool2d,
    concat_channels,
    conv2d,
    dense,
    flatten,
    global_avg_pool,
    leaky_relu,
    maxpool2d,
    mul_const,
    reshape,
    softmax,
    softmax_array,
    sum_all,
    upsample_nearest,
)
from .tensor import GradTape, Tensor


def backward(tape: GradTape, loss: Tensor, loss_grad: float = 1.0) -> dict[Tensor, Tensor]:
    return tape.backward(loss, loss_grad)


__all__ = [
    "ConvSpec", "GradCheckReport", "GradTape", "ParamCheck", "Tensor",
    "avg_pool2d", "backward", "concat_channels", "conv2d", "dense", "flatten",
    "global_avg_pool", "grad_check", "leaky_relu", "maxpool2d", "mul_const",
    "relative_error", "reshape", "softmax", "softmax_array", "sum_all", "upsample_nearest",
]
