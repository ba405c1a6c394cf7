from __future__ import annotations

import numpy as np

from .ppm import ImageBuffer


def _axis_weights(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # half-pixel centres, clamped to the border
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def resize_bilinear(img: ImageBuffer | np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a C x H x W array (or an ImageBuffer) to C x out_h x out_w, float64."""
    if out_h < 1 or out_w < 1:
        raise ValueError(f"resize target must be positive, got {out_h}x{out_w}")
    x = img.to_chw(np.float64) if isinstance(img, ImageBuffer) else np.asarray(img, dtype=np.float64)
    _, h, w = x.shape
    y0, y1, wy = _axis_weights(h, out_h)
    x0, x1, wx = _axis_weights(w, out_w)
    rows = x[:, y0, :] * (1.0 - wy)[None, :, None] + x[:, y1, :] * wy[None, :, None]
    return rows[:, :, x0] * (1.0 - wx) + rows[:, :, x1] * wx


def normalize(img: np.ndarray, dtype=np.float32) -> np.ndarray:
    """Map byte values in [0, 255] to [-1, 1]: (x / 255 - 0.5) / 0.5."""
    x = np.asarray(img, dtype=np.float64) / 255.0
    return ((x - 0.5) / 0.5).astype(dtype)


def hflip(img: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(img[..., ::-1])
