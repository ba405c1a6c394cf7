"""Tensor container and the record-and-replay gradient tape.

A :class:`Tensor` wraps a C-ordered numpy array. Operations in
:mod:`cascrnet.nn.ops` never mutate their inputs; they allocate a new output
and, when a :class:`GradTape` is active, append a node holding a backward
closure. :meth:`GradTape.backward` replays those nodes in reverse.
"""

from __future__ import annotations

import contextvars
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from ..errors import ContractViolation

DTYPES = (np.float32, np.float64)

_active_tape: contextvars.ContextVar["GradTape | None"] = contextvars.ContextVar(
    "cascrnet_active_tape", default=None
)


class Tensor:
    """Dense row-major array, optionally a learnable parameter."""

    __slots__ = ("data", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in DTYPES:
            arr = arr.astype(np.float32 if dtype is None else dtype)
        self.data = arr if arr.flags.c_contiguous else np.ascontiguousarray(arr)
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractViolation(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def astype(self, dtype) -> "Tensor":
        return Tensor(self.data.astype(dtype), requires_grad=self.requires_grad, name=self.name)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{tag})"


@dataclass
class TapeNode:
    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: Callable[[np.ndarray], Sequence[np.ndarray | None]]


class GradTape:
    """Records primitive operations executed inside its ``with`` block.

    >>> x = Tensor([1.0, 2.0], requires_grad=True)
    >>> with GradTape() as tape:
    ...     y = ops.sum_all(x)
    >>> grads = tape.backward(y)
    """

    def __init__(self):
        self.nodes: list[TapeNode] = []
        self._tracked: set[int] = set()
        self._params: dict[int, Tensor] = {}
        self._token = None

    def __enter__(self) -> "GradTape":
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc) -> None:
        _active_tape.reset(self._token)
        self._token = None

    def watches(self, t: Tensor) -> bool:
        return t.requires_grad or id(t) in self._tracked

    def record(self, op: str, inputs: Sequence[Tensor], output: Tensor, backward) -> None:
        if not any(self.watches(t) for t in inputs):
            return
        for t in inputs:
            if t.requires_grad:
                self._params.setdefault(id(t), t)
        self._tracked.add(id(output))
        self.nodes.append(TapeNode(op, tuple(inputs), output, backward))

    def parameters(self) -> list[Tensor]:
        return list(self._params.values())

    def backward(self, loss: Tensor, loss_grad: float = 1.0) -> dict[Tensor, Tensor]:
        """Return d(loss)/d(param) for every parameter the tape touched.

        Parameters used more than once get the sum of their contributions.
        Parameters the loss does not depend on get an all-zero gradient.
        """
        if loss.size != 1:
            raise ContractViolation(f"backward needs a scalar terminal, got shape {loss.shape}")
        grads: dict[int, np.ndarray] = {id(loss): np.full(loss.shape, loss_grad, dtype=loss.dtype)}
        for node in reversed(self.nodes):
            g_out = grads.pop(id(node.output), None)
            if g_out is None:
                continue
            for inp, g in zip(node.inputs, node.backward(g_out)):
                if g is None or not self.watches(inp):
                    continue
                prev = grads.get(id(inp))
                grads[id(inp)] = g if prev is None else prev + g
        out: dict[Tensor, Tensor] = {}
        for pid, p in self._params.items():
            g = grads.get(pid)
            if g is None:
                g = np.zeros_like(p.data)
            out[p] = Tensor(g.reshape(p.shape), name=p.name)
        return out


def active_tape() -> GradTape | None:
    return _active_tape.get()


def record(op: str, inputs: Sequence[Tensor], output: Tensor, backward) -> Tensor:
    tape = _active_tape.get()
    if tape is not None:
        tape.record(op, inputs, output, backward)
    return output


# Kink monitoring for finite-difference checks: piecewise-linear ops push a
# fingerprint of their active branch so the checker can tell when a
# perturbation crossed a kink.
_pattern_log: contextvars.ContextVar[list | None] = contextvars.ContextVar(
    "cascrnet_pattern_log", default=None
)


def log_pattern(op: str, pattern: np.ndarray) -> None:
    log = _pattern_log.get()
    if log is not None:
        log.append((op, pattern.tobytes()))


class PatternRecorder:
    def __init__(self):
        self.entries: list[tuple[str, bytes]] = []

    def __enter__(self) -> "PatternRecorder":
        self._token = _pattern_log.set(self.entries)
        return self

    def __exit__(self, *exc) -> None:
        _pattern_log.reset(self._token)

    def ops(self) -> Iterator[str]:
        return (op for op, _ in self.entries)
