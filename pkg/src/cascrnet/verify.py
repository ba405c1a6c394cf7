"""Gradient-check suite over every primitive, both blocks and the desk model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .blocks import ASPPBlock, ASPPConfig, DESK, SCRBlock, SCRConfig, build_cascrnet
from .nn import (
    ConvSpec,
    GradCheckReport,
    GradTape,
    Tensor,
    avg_pool2d,
    concat_channels,
    conv2d,
    dense,
    flatten,
    global_avg_pool,
    grad_check,
    leaky_relu,
    maxpool2d,
    mul_const,
    softmax,
    sum_all,
    upsample_nearest,
)
from .train import FocalLossConfig, focal_loss_op


@dataclass
class CheckResult:
    op: str
    report: GradCheckReport

    @property
    def passed(self) -> bool:
        return self.report.passed

    def failure(self) -> str:
        worst = self.report.worst()
        if worst is None:
            return f"{self.op}: nothing checked"
        return (f"{self.op}: {worst.name}{list(worst.worst_index or ())} relative error "
                f"{worst.max_rel_err:.3e} > {self.report.tol:g}")


def _t(rng, shape, name):
    return Tensor(rng.normal(size=shape), requires_grad=True, name=name, dtype=np.float64)


def _projected(rng, f: Callable[[], Tensor]) -> Callable[[], Tensor]:
    """Reduce an op's output to a scalar through a fixed random projection."""
    with GradTape():
        shape = f().shape
    proj = rng.normal(size=shape)
    return lambda: sum_all(mul_const(f(), proj))


def _cases(rng) -> list[tuple[str, Callable[[], Tensor], list[Tensor], int]]:
    cases = []
    for d, pad, s in [(1, "same", 1), (2, "same", 1), (4, "same", 1), (2, "valid", 2)]:
        spec = ConvSpec(2, 3, 3, stride=s, dilation=d, padding=pad)
        x, w, b = _t(rng, (2, 2, 9, 9), "x"), _t(rng, spec.weight_shape, "weight"), _t(rng, 3, "bias")
        cases.append((f"conv2d d={d} {pad} s={s}", lambda x=x, w=w, b=b, spec=spec: conv2d(x, w, b, spec), [x, w, b], 32))

    x = _t(rng, (2, 3, 4, 4), "x")
    cases.append(("leaky_relu", lambda x=x: leaky_relu(x, 0.01), [x], 32))
    x = _t(rng, (2, 3, 4, 4), "x")
    cases.append(("maxpool2d", lambda x=x: maxpool2d(x, 2), [x], 32))
    x = _t(rng, (2, 3, 4, 4), "x")
    cases.append(("avg_pool2d", lambda x=x: avg_pool2d(x, 2), [x], 32))
    x = _t(rng, (2, 3, 4, 4), "x")
    cases.append(("global_avg_pool", lambda x=x: global_avg_pool(x), [x], 32))
    x = _t(rng, (2, 3, 1, 1), "x")
    cases.append(("upsample_nearest", lambda x=x: upsample_nearest(x, 4, 4), [x], 32))
    x, y = _t(rng, (2, 3, 4, 4), "a"), _t(rng, (2, 2, 4, 4), "b")
    cases.append(("concat_channels", lambda x=x, y=y: concat_channels([x, y]), [x, y], 32))
    x = _t(rng, (2, 3, 2, 2), "x")
    cases.append(("flatten", lambda x=x: flatten(x), [x], 32))
    x, w, b = _t(rng, (3, 5), "x"), _t(rng, (5, 4), "weight"), _t(rng, 4, "bias")
    cases.append(("dense", lambda x=x, w=w, b=b: dense(x, w, b), [x, w, b], 32))
    x = _t(rng, (3, 5), "x")
    cases.append(("softmax", lambda x=x: softmax(x), [x], 32))

    for i, (name, f, params, n) in enumerate(cases):
        cases[i] = (name, _projected(rng, f), params, n)

    z = _t(rng, (4, 10), "logits")
    labels = rng.integers(0, 10, size=4)
    weights = tuple(rng.uniform(0.5, 2.0, size=10))
    cases.append(("focal_loss", lambda z=z: focal_loss_op(z, labels, FocalLossConfig(2.0, weights)), [z], 40))

    scr = SCRBlock("scr", 3, 2, SCRConfig(4, dilation=2))
    scr.conv.init(rng, 0.01)
    scr.conv.weight.data = scr.conv.weight.data.astype(np.float64)
    scr.conv.bias.data = rng.normal(size=4) * 0.1
    a, b = _t(rng, (2, 3, 8, 8), "primary"), _t(rng, (2, 2, 8, 8), "shared")
    cases.append(("scr_block", _projected(rng, lambda: scr(a, b)), [a, b, scr.conv.weight, scr.conv.bias], 32))

    aspp = ASPPBlock("aspp", 4, ASPPConfig(3, (1, 2, 4), True, 5))
    aspp_params = []
    for layer in aspp.layers:
        layer.init(rng, 0.01)
        for p in layer.params():
            p.data = p.data.astype(np.float64)
            aspp_params.append(p)
    x = _t(rng, (2, 4, 6, 6), "x")
    cases.append(("aspp_block", _projected(rng, lambda: aspp(x)), [x] + aspp_params, 32))

    model = build_cascrnet(DESK).astype(np.float64)
    xm = Tensor(rng.normal(size=(2, 3, 32, 32)))
    ym = np.array([3, 7])
    cases.append(("cascrnet_desk+focal", lambda: focal_loss_op(model(xm), ym, FocalLossConfig(2.0)),
                  list(model.params.values()), 16))
    return cases


def gradcheck_suite(tol: float = 1e-4, seed: int = 0, eps: float = 1e-5) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    for name, f, params, n_coords in _cases(rng):
        rep = grad_check(f, params, eps=eps, tol=tol, n_coords=n_coords, seed=seed)
        results.append(CheckResult(name, rep))
    return results


def render_gradcheck_table(results: list[CheckResult]) -> str:
    width = max(len(r.op) for r in results)
    lines = [f"{'op':<{width}}  {'checked':>7}  {'skipped':>7}  {'max_rel_err':>11}  status"]
    for r in results:
        status = "ok" if r.passed else "FAIL"
        lines.append(f"{r.op:<{width}}  {r.report.checked:>7d}  {r.report.skipped:>7d}  "
                     f"{r.report.max_rel_err:>11.3e}  {status}")
    return "\n".join(lines) + "\n"
