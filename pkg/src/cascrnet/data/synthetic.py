"""Synthetic ten-class "shapes" images for smoke tests and demos."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .. import NUM_CLASSES
from .manifest import DatasetManifest, write_manifest
from .ppm import encode_ppm


def _mask(kind: int, size: int, rng: np.random.Generator) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) + 0.5
    r = size * rng.uniform(0.22, 0.32)
    cy = size * rng.uniform(0.38, 0.62)
    cx = size * rng.uniform(0.38, 0.62)
    dy, dx = yy - cy, xx - cx
    t = max(size * 0.07, 1.5)
    if kind == 0:
        return (np.abs(dy) < r) & (np.abs(dx) < r)
    if kind == 1:
        return dy ** 2 + dx ** 2 < r ** 2
    if kind == 2:
        d = np.sqrt(dy ** 2 + dx ** 2)
        return (d < r) & (d > r - 1.6 * t)
    if kind == 3:
        return (np.abs(dy) < t) & (np.abs(dx) < 1.3 * r)
    if kind == 4:
        return (np.abs(dx) < t) & (np.abs(dy) < 1.3 * r)
    if kind == 5:
        return ((np.abs(dy) < t) | (np.abs(dx) < t)) & (np.abs(dy) < r) & (np.abs(dx) < r)
    if kind == 6:
        return ((np.abs(dy - dx) < 1.4 * t) | (np.abs(dy + dx) < 1.4 * t)) & (np.abs(dy) < r) & (np.abs(dx) < r)
    if kind == 7:
        return (dy < r) & (dy > -r) & (np.abs(dx) < (dy + r) / 2)
    if kind == 8:
        cell = max(int(size // 8), 1)
        check = ((yy // cell + xx // cell) % 2) == 0
        return check & (np.abs(dy) < r) & (np.abs(dx) < r)
    if kind == 9:
        s = r * 0.6
        return ((dy ** 2 + (dx - s) ** 2) < (0.45 * r) ** 2) | ((dy ** 2 + (dx + s) ** 2) < (0.45 * r) ** 2)
    raise ValueError(f"unknown shape kind {kind}")


def render_shape(kind: int, size: int, rng: np.random.Generator, noise: float = 12.0) -> np.ndarray:
    """One H x W x 3 uint8 image of shape ``kind`` on a dark background."""
    bg = rng.uniform(10, 70, size=3)
    fg = rng.uniform(150, 250, size=3)
    m = _mask(kind, size, rng)[..., None]
    img = np.where(m, fg, bg) + rng.normal(0.0, noise, size=(size, size, 3))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def write_shapes_dataset(out_dir: str | os.PathLike, counts, size: int = 32, seed: int = 0,
                         noise: float = 12.0, manifest_name: str = "manifest.csv") -> DatasetManifest:
    """Write PPM images plus a ``path,label`` manifest.

    ``counts`` is either a per-class count (int) or a list of ten counts; a
    class's images use the shape of the same index.
    """
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    if isinstance(counts, int):
        counts = [counts] * NUM_CLASSES
    if len(counts) != NUM_CLASSES:
        raise ValueError(f"need {NUM_CLASSES} class counts, got {len(counts)}")
    rng = np.random.default_rng(seed)
    paths, labels = [], []
    for c, n in enumerate(counts):
        for i in range(int(n)):
            rel = f"images/{c:02d}_{i:04d}.ppm"
            (out / rel).write_bytes(encode_ppm(render_shape(c, size, rng, noise)))
            paths.append(rel)
            labels.append(c)
    manifest = DatasetManifest(out, tuple(paths), tuple(labels))
    write_manifest(out / manifest_name, manifest)
    return manifest


