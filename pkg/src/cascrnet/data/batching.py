from __future__ import annotations

from pathlib import Path
from typing import Iterator

import numpy as np

from ..errors import DataError, FormatError
from ..nn import Tensor
from .cten import read_cten
from .manifest import DatasetManifest
from .ppm import decode_ppm
from .preprocess import hflip, normalize, resize_bilinear


def load_image(path: str | Path, size: int, dtype=np.float32) -> np.ndarray:
    """Decode a .ppm (or a byte-valued 3 x H x W .cten) and return a normalized 3 x size x size array."""
    path = Path(path)
    try:
        if path.suffix.lower() == ".cten":
            raw = read_cten(path).data
            if raw.ndim != 3 or raw.shape[0] != 3:
                raise FormatError(f"expected a 3 x H x W tensor, got shape {raw.shape}", None, str(path))
            chw = raw
        else:
            chw = decode_ppm(path.read_bytes()).to_chw(np.float64)
    except (OSError, FormatError) as exc:
        raise DataError(f"cannot decode {path}: {exc}") from exc
    return normalize(resize_bilinear(chw, size, size), dtype)


def epoch_order(n: int, seed: int, epoch: int) -> np.ndarray:
    return np.random.default_rng([seed, epoch]).permutation(n)


def load_batch(manifest: DatasetManifest, indices, size: int, dtype=np.float32, flips=None) -> tuple[Tensor, np.ndarray]:
    imgs = []
    for j, i in enumerate(indices):
        img = load_image(manifest.full_path(int(i)), size, dtype)
        if flips is not None and flips[j]:
            img = hflip(img)
        imgs.append(img)
    labels = manifest.label_array[np.asarray(indices, dtype=np.int64)]
    return Tensor(np.stack(imgs)), labels


def batch_iter(manifest: DatasetManifest, batch_size: int, seed: int, epoch: int, size: int,
               shuffle: bool = True, augment_flip: bool = False, dtype=np.float32) -> Iterator[tuple[Tensor, np.ndarray]]:
    """Yield (N x 3 x size x size, labels) batches; the last batch may be short."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    n = len(manifest)
    order = epoch_order(n, seed, epoch) if shuffle else np.arange(n)
    flips = None
    if augment_flip:
        flips = np.random.default_rng([seed, epoch, 1]).random(n) < 0.5
    for start in range(0, n, batch_size):
        idx = order[start:start + batch_size]
        yield load_batch(manifest, idx, size, dtype, None if flips is None else flips[start:start + batch_size])
