"""Differentiable primitives.

Every function takes :class:`Tensor` inputs, returns a fresh :class:`Tensor`
and registers a backward closure on the active :class:`GradTape`, if any.
Reductions run in a fixed order so results are bitwise reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ContractViolation, InvalidSpecError
from .tensor import Tensor, log_pattern, record


def _pair(v) -> tuple[int, int]:
    if isinstance(v, int):
        return (v, v)
    a, b = v
    return (int(a), int(b))


@dataclass(frozen=True)
class ConvSpec:
    in_channels: int
    out_channels: int
    kernel: tuple[int, int] = (3, 3)
    stride: tuple[int, int] = (1, 1)
    dilation: tuple[int, int] = (1, 1)
    padding: str = "same"

    def __post_init__(self):
        object.__setattr__(self, "kernel", _pair(self.kernel))
        object.__setattr__(self, "stride", _pair(self.stride))
        object.__setattr__(self, "dilation", _pair(self.dilation))
        if self.in_channels < 1 or self.out_channels < 1:
            raise InvalidSpecError("channel counts must be positive")
        if min(self.kernel) < 1 or min(self.stride) < 1 or min(self.dilation) < 1:
            raise InvalidSpecError(
                f"kernel, stride and dilation must be positive: {self.kernel}, {self.stride}, {self.dilation}"
            )
        if self.padding not in ("valid", "same"):
            raise InvalidSpecError(f"padding must be 'valid' or 'same', got {self.padding!r}")

    @property
    def effective_kernel(self) -> tuple[int, int]:
        return tuple(k + (k - 1) * (d - 1) for k, d in zip(self.kernel, self.dilation))

    @property
    def weight_shape(self) -> tuple[int, int, int, int]:
        return (self.out_channels, self.in_channels, *self.kernel)

    @property
    def param_count(self) -> int:
        kh, kw = self.kernel
        return self.out_channels * self.in_channels * kh * kw + self.out_channels

    def pads(self, h: int, w: int) -> tuple[int, int, int, int]:
        """(top, bottom, left, right) zero padding for an ``h`` x ``w`` input.

        "same" pads so the output extent is ceil(in / stride); an odd total
        puts the extra pixel at the bottom/right.
        """
        if self.padding == "valid":
            return (0, 0, 0, 0)
        out = []
        for size, s, k in zip((h, w), self.stride, self.effective_kernel):
            total = max((-(-size // s) - 1) * s + k - size, 0)
            out.extend((total // 2, total - total // 2))
        return tuple(out)

    def output_size(self, h: int, w: int) -> tuple[int, int]:
        top, bottom, left, right = self.pads(h, w)
        ekh, ekw = self.effective_kernel
        sh, sw = self.stride
        return ((h + top + bottom - ekh) // sh + 1, (w + left + right - ekw) // sw + 1)


def _check_4d(x: Tensor, what: str) -> None:
    if x.data.ndim != 4:
        raise ContractViolation(f"{what} expects an N x C x H x W tensor, got shape {x.shape}")


def conv2d(x: Tensor, weight: Tensor, bias: Tensor, spec: ConvSpec) -> Tensor:
    """Direct 2-D convolution (cross-correlation) with stride, dilation and zero padding.

    The sum runs tap by tap over the kernel in row-major order; each tap is a
    channel contraction of a strided window of the padded input.
    """
    _check_4d(x, "conv2d")
    n, cin, h, w = x.shape
    if weight.shape != spec.weight_shape:
        raise ContractViolation(f"conv2d weight shape {weight.shape} does not match spec {spec.weight_shape}")
    if cin != spec.in_channels:
        raise ContractViolation(f"conv2d input has {cin} channels, spec expects {spec.in_channels}")
    if bias.shape != (spec.out_channels,):
        raise ContractViolation(f"conv2d bias shape {bias.shape} != ({spec.out_channels},)")
    top, bottom, left, right = spec.pads(h, w)
    ho, wo = spec.output_size(h, w)
    if ho < 1 or wo < 1:
        raise InvalidSpecError(
            f"conv2d output would be {ho}x{wo}: input {h}x{w} too small for effective kernel {spec.effective_kernel}"
        )
    kh, kw = spec.kernel
    sh, sw = spec.stride
    dh, dw = spec.dilation
    cout = spec.out_channels
    dtype = np.result_type(x.dtype, weight.dtype)

    xp = np.zeros((n, h + top + bottom, w + left + right, cin), dtype=dtype)
    xp[:, top:top + h, left:left + w, :] = x.data.transpose(0, 2, 3, 1)
    wt = weight.data.astype(dtype, copy=False)
    ys = (ho - 1) * sh + 1
    xs = (wo - 1) * sw + 1

    def window(ky: int, kx: int) -> tuple[slice, slice]:
        return (slice(ky * dh, ky * dh + ys, sh), slice(kx * dw, kx * dw + xs, sw))

    acc = np.zeros((n, ho, wo, cout), dtype=dtype)
    for ky in range(kh):
        for kx in range(kw):
            sy, sx = window(ky, kx)
            acc += xp[:, sy, sx, :] @ wt[:, :, ky, kx].T
    acc += bias.data.astype(dtype, copy=False)
    out = Tensor(acc.transpose(0, 3, 1, 2))

    def backward(g: np.ndarray):
        g_nhwc = np.ascontiguousarray(g.transpose(0, 2, 3, 1))
        g_flat = g_nhwc.reshape(-1, cout)
        dxp = np.zeros_like(xp)
        dwt = np.zeros_like(wt)
        for ky in range(kh):
            for kx in range(kw):
                sy, sx = window(ky, kx)
                dxp[:, sy, sx, :] += g_nhwc @ wt[:, :, ky, kx]
                patch = xp[:, sy, sx, :].reshape(-1, cin)
                dwt[:, :, ky, kx] = g_flat.T @ patch
        dx = dxp[:, top:top + h, left:left + w, :].transpose(0, 3, 1, 2)
        db = g_flat.sum(axis=0)
        return (
            np.ascontiguousarray(dx).astype(x.dtype, copy=False),
            dwt.astype(weight.dtype, copy=False),
            db.astype(bias.dtype, copy=False),
        )

    return record("conv2d", (x, weight, bias), out, backward)


def leaky_relu(x: Tensor, alpha: float = 0.01) -> Tensor:
    if alpha < 0:
        raise ContractViolation(f"leaky_relu alpha must be >= 0, got {alpha}")
    pos = x.data > 0
    log_pattern("leaky_relu", pos)
    a = x.dtype.type(alpha)
    out = Tensor(np.where(pos, x.data, a * x.data))

    def backward(g):
        return (np.where(pos, g, a * g),)

    return record("leaky_relu", (x,), out, backward)


def _windows(x: np.ndarray, k: int) -> np.ndarray:
    n, c, h, w = x.shape
    return (
        x.reshape(n, c, h // k, k, w // k, k)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, h // k, w // k, k * k)
    )


def _unwindows(g: np.ndarray, k: int) -> np.ndarray:
    n, c, ho, wo, _ = g.shape
    return g.reshape(n, c, ho, wo, k, k).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, ho * k, wo * k)


def _check_pool(x: Tensor, k: int, what: str) -> None:
    _check_4d(x, what)
    if k < 1:
        raise InvalidSpecError(f"{what} window must be positive, got {k}")
    h, w = x.shape[2:]
    if h % k or w % k:
        raise InvalidSpecError(f"{what}: spatial extent {h}x{w} is not divisible by window {k}")


def maxpool2d(x: Tensor, k: int = 2) -> Tensor:
    """Non-overlapping k x k max pooling (stride k).

    The gradient goes to the first maximum in row-major window order.
    """
    _check_pool(x, k, "maxpool2d")
    win = _windows(x.data, k)
    arg = win.argmax(axis=-1)
    log_pattern("maxpool2d", arg)
    out = Tensor(np.take_along_axis(win, arg[..., None], axis=-1)[..., 0])

    def backward(g):
        gw = np.zeros(win.shape, dtype=g.dtype)
        np.put_along_axis(gw, arg[..., None], g[..., None], axis=-1)
        return (_unwindows(gw, k),)

    return record("maxpool2d", (x,), out, backward)


def avg_pool2d(x: Tensor, k: int) -> Tensor:
    _check_pool(x, k, "avg_pool2d")
    if k == 1:
        return x
    win = _windows(x.data, k)
    out = Tensor(win.sum(axis=-1) / x.dtype.type(k * k))

    def backward(g):
        share = g / g.dtype.type(k * k)
        return (_unwindows(np.repeat(share[..., None], k * k, axis=-1), k),)

    return record("avg_pool2d", (x,), out, backward)


def global_avg_pool(x: Tensor) -> Tensor:
    _check_4d(x, "global_avg_pool")
    n, c, h, w = x.shape
    if h < 1 or w < 1:
        raise ContractViolation("global_avg_pool needs a non-empty spatial extent")
    flat = x.data.reshape(n, c, h * w)
    out = Tensor((flat.sum(axis=-1) / x.dtype.type(h * w)).reshape(n, c, 1, 1))

    def backward(g):
        share = g / g.dtype.type(h * w)
        return (np.broadcast_to(share, (n, c, h, w)).copy(),)

    return record("global_avg_pool", (x,), out, backward)


def upsample_nearest(x: Tensor, h: int, w: int) -> Tensor:
    """Replicate an N x C x 1 x 1 map (or any exact divisor) up to h x w."""
    _check_4d(x, "upsample_nearest")
    n, c, hi, wi = x.shape
    if h % hi or w % wi:
        raise InvalidSpecError(f"upsample_nearest: {hi}x{wi} does not divide {h}x{w}")
    fy, fx = h // hi, w // wi
    out = Tensor(np.repeat(np.repeat(x.data, fy, axis=2), fx, axis=3))

    def backward(g):
        return (g.reshape(n, c, hi, fy, wi, fx).sum(axis=(3, 5)),)

    return record("upsample_nearest", (x,), out, backward)


def concat_channels(inputs: Sequence[Tensor]) -> Tensor:
    if len(inputs) < 2:
        raise ContractViolation("concat_channels needs at least two inputs")
    for t in inputs:
        _check_4d(t, "concat_channels")
    n, _, h, w = inputs[0].shape
    for i, t in enumerate(inputs[1:], start=1):
        if (t.shape[0], t.shape[2], t.shape[3]) != (n, h, w):
            raise ContractViolation(
                f"concat_channels input {i} has shape {t.shape}, expected N={n}, H={h}, W={w}"
            )
    out = Tensor(np.concatenate([t.data for t in inputs], axis=1))
    bounds = np.cumsum([0] + [t.shape[1] for t in inputs])

    def backward(g):
        return tuple(g[:, bounds[i]:bounds[i + 1]] for i in range(len(inputs)))

    return record("concat_channels", tuple(inputs), out, backward)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    old = x.shape
    out = Tensor(x.data.reshape(tuple(shape)))

    def backward(g):
        return (g.reshape(old),)

    return record("reshape", (x,), out, backward)


def flatten(x: Tensor) -> Tensor:
    return reshape(x, (x.shape[0], -1))


def dense(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Row-vector affine map ``x @ weight + bias``."""
    if x.data.ndim != 2 or weight.data.ndim != 2 or x.shape[1] != weight.shape[0]:
        raise ContractViolation(f"dense shape mismatch: input {x.shape}, weight {weight.shape}")
    if bias.shape != (weight.shape[1],):
        raise ContractViolation(f"dense bias shape {bias.shape} != ({weight.shape[1]},)")
    out = Tensor(x.data @ weight.data + bias.data)

    def backward(g):
        return (g @ weight.data.T, x.data.T @ g, g.sum(axis=0))

    return record("dense", (x, weight, bias), out, backward)


def softmax_array(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax(logits: Tensor) -> Tensor:
    if logits.data.ndim != 2 or logits.shape[1] < 2:
        raise ContractViolation(f"softmax expects N x K with K >= 2, got {logits.shape}")
    p = softmax_array(logits.data)
    out = Tensor(p)

    def backward(g):
        return (p * (g - (g * p).sum(axis=1, keepdims=True)),)

    return record("softmax", (logits,), out, backward)


def sum_all(x: Tensor) -> Tensor:
    out = Tensor(np.array(x.data.sum(), dtype=x.dtype))

    def backward(g):
        return (np.full(x.shape, g.reshape(-1)[0], dtype=x.dtype),)

    return record("sum", (x,), out, backward)


def mul_const(x: Tensor, c: np.ndarray | float) -> Tensor:
    """Elementwise product with a constant (non-differentiated) array."""
    c = np.asarray(c, dtype=x.dtype)
    out = Tensor(x.data * c)

    def backward(g):
        return (np.broadcast_to(g * c, x.shape).copy(),)

    return record("mul_const", (x,), out, backward)
