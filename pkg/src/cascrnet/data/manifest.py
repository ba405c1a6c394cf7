"""Dataset manifests: a ``path,label`` CSV over a root directory."""

from __future__ import annotations

import csv
import io
import os
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import CLASS_NAMES, NUM_CLASSES
from ..errors import DataError
from ..fileio import atomic_write_text

_CLASS_INDEX = {name: i for i, name in enumerate(CLASS_NAMES)}


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    paths: tuple[str, ...]
    labels: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.paths)

    @property
    def label_array(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=np.int64)

    def histogram(self) -> list[int]:
        counts = Counter(self.labels)
        return [counts.get(i, 0) for i in range(NUM_CLASSES)]

    def subset(self, indices) -> "DatasetManifest":
        idx = [int(i) for i in indices]
        return DatasetManifest(self.root, tuple(self.paths[i] for i in idx), tuple(self.labels[i] for i in idx))

    def full_path(self, i: int) -> Path:
        return self.root / self.paths[i]

    def validate_files(self) -> None:
        missing = [p for p in self.paths if not (self.root / p).is_file()]
        if missing:
            shown = ", ".join(missing[:10])
            raise DataError(f"{len(missing)} manifest file(s) missing under {self.root}: {shown}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["path", "label"])
        for p, y in zip(self.paths, self.labels):
            w.writerow([p, CLASS_NAMES[y]])
        return buf.getvalue()


def class_index(name: str) -> int:
    return _CLASS_INDEX[name]


def parse_manifest(text: str, root: str | os.PathLike) -> DatasetManifest:
    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["path", "label"]:
        raise DataError(f"manifest header must be 'path,label', got {header!r}")
    paths, labels, seen = [], [], set()
    for row_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 2:
            raise DataError(f"row {row_no}: expected 2 fields, got {len(row)}")
        path, label = row[0].strip(), row[1].strip()
        if label not in _CLASS_INDEX:
            raise DataError(f"unknown class {label!r} at row {row_no}")
        if path in seen:
            raise DataError(f"duplicate path {path!r} at row {row_no}")
        seen.add(path)
        paths.append(path)
        labels.append(_CLASS_INDEX[label])
    return DatasetManifest(Path(root), tuple(paths), tuple(labels))


def load_manifest(csv_path: str | os.PathLike, root: str | os.PathLike | None = None) -> DatasetManifest:
    csv_path = Path(csv_path)
    try:
        raw = csv_path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read manifest {csv_path}: {exc.strerror}") from exc
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise DataError(f"manifest {csv_path} is not UTF-8") from exc
    return parse_manifest(text, csv_path.parent if root is None else root)


def write_manifest(path: str | os.PathLike, manifest: DatasetManifest) -> None:
    atomic_write_text(path, manifest.to_csv())


def stratified_split(manifest: DatasetManifest, fraction: float, seed: int) -> tuple[DatasetManifest, DatasetManifest]:
    """Per class, floor(fraction * n_c) rows go to the first split via a seeded shuffle.

    Both halves keep the original manifest order.
    """
    if not 0 < fraction < 1:
        raise ValueError(f"split fraction must be in (0, 1), got {fraction}")
    labels = manifest.label_array
    rng = np.random.default_rng(seed)
    chosen = np.zeros(len(manifest), dtype=bool)
    for c in range(NUM_CLASSES):
        idx = np.nonzero(labels == c)[0]
        if idx.size == 0:
            raise DataError(f"class {CLASS_NAMES[c]!r} has no rows; cannot stratify")
        take = int(np.floor(fraction * idx.size))
        chosen[rng.permutation(idx)[:take]] = True
    return manifest.subset(np.nonzero(chosen)[0]), manifest.subset(np.nonzero(~chosen)[0])


def class_weights_from_counts(counts) -> np.ndarray:
    counts = np.asarray(counts, dtype=np.float64)
    return counts.sum() / (counts.size * counts)


def class_weights(manifest: DatasetManifest) -> np.ndarray:
    """Inverse-frequency weights N / (K * n_c)."""
    counts = manifest.histogram()
    for c, n in enumerate(counts):
        if n == 0:
            raise DataError(f"class {CLASS_NAMES[c]!r} is absent; cannot weight it")
    return class_weights_from_counts(counts)
