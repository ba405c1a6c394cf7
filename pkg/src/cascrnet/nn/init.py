from __future__ import annotations

import math

import numpy as np


def leaky_gain(alpha: float) -> float:
    return math.sqrt(2.0 / (1.0 + alpha * alpha))


def fan_in_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int,
                   alpha: float = 0.01, dtype=np.float32) -> np.ndarray:
    """U(-b, b) with b = gain * sqrt(3 / fan_in), i.e. sqrt(6 / ((1 + alpha^2) * fan_in))."""
    bound = leaky_gain(alpha) * math.sqrt(3.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)
