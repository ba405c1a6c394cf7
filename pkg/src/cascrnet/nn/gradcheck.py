"""Central finite-difference oracle for tape gradients."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import ContractViolation, NonFiniteError
from .tensor import GradTape, PatternRecorder, Tensor


@dataclass
class ParamCheck:
    name: str
    checked: int
    skipped: int
    max_rel_err: float
    worst_index: tuple[int, ...] | None
    skipped_indices: list[tuple[int, ...]] = field(default_factory=list)


@dataclass
class GradCheckReport:
    params: list[ParamCheck]
    tol: float
    eps: float

    @property
    def max_rel_err(self) -> float:
        return max((p.max_rel_err for p in self.params), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_rel_err <= self.tol

    @property
    def checked(self) -> int:
        return sum(p.checked for p in self.params)

    @property
    def skipped(self) -> int:
        return sum(p.skipped for p in self.params)

    def worst(self) -> ParamCheck | None:
        return max(self.params, key=lambda p: p.max_rel_err, default=None)


def relative_error(a: float, n: float) -> float:
    return abs(a - n) / max(1e-8, abs(a) + abs(n))


def _as_named(params) -> list[tuple[str, Tensor]]:
    if isinstance(params, Mapping):
        return list(params.items())
    return [(p.name or f"param{i}", p) for i, p in enumerate(params)]


def grad_check(
    f: Callable[[], Tensor],
    params: Mapping[str, Tensor] | Sequence[Tensor],
    eps: float = 1e-5,
    tol: float = 1e-4,
    n_coords: int = 32,
    seed: int = 0,
) -> GradCheckReport:
    """Compare tape gradients of the scalar ``f()`` against central differences.

    ``f`` is re-evaluated with each sampled parameter coordinate nudged by
    +/- ``eps``. Coordinates where the nudge flips a leaky_relu sign or a
    maxpool argmax are skipped and listed in the report rather than scored.
    """
    named = _as_named(params)
    for name, p in named:
        if p.dtype != np.float64:
            raise ContractViolation(f"grad_check needs float64 parameters; {name} is {p.dtype}")

    with GradTape() as tape:
        loss = f()
    analytic = tape.backward(loss)

    rng = np.random.default_rng(seed)
    results = []
    for name, p in named:
        g = analytic.get(p)
        g = np.zeros_like(p.data) if g is None else g.data
        flat = p.data.reshape(-1)
        if flat.size <= n_coords:
            coords = np.arange(flat.size)
        else:
            coords = np.sort(rng.choice(flat.size, size=n_coords, replace=False))
        worst, worst_idx, checked = 0.0, None, 0
        skipped: list[tuple[int, ...]] = []
        for i in coords:
            idx = np.unravel_index(int(i), p.shape)
            orig = flat[i]
            flat[i] = orig + eps
            with PatternRecorder() as rec_plus:
                f_plus = f().item()
            flat[i] = orig - eps
            with PatternRecorder() as rec_minus:
                f_minus = f().item()
            flat[i] = orig
            a = float(g.reshape(-1)[i])
            num = (f_plus - f_minus) / (2.0 * eps)
            if not (math.isfinite(a) and math.isfinite(num)):
                raise NonFiniteError(
                    f"non-finite gradient for {name}{list(idx)}: analytic={a}, numeric={num}"
                )
            if rec_plus.entries != rec_minus.entries:
                skipped.append(tuple(int(j) for j in idx))
                continue
            err = relative_error(a, num)
            checked += 1
            if err > worst or worst_idx is None:
                worst, worst_idx = max(err, worst), tuple(int(j) for j in idx)
        results.append(ParamCheck(name, checked, len(skipped), worst, worst_idx, skipped))
    return GradCheckReport(results, tol=tol, eps=eps)
