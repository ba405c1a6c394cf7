"""Imbalance benchmark: minority recall under focal loss versus cross-entropy.

Both losses train from the same initialization on the same batches of a
9:1 two-shape fixture (horizontal bars majority, vertical bars minority); only gamma
differs. Run ``python3 -m cascrnet.bench`` for the table.
"""

from __future__ import annotations

import argparse
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .blocks import ModelConfig, build_cascrnet
from .data import batch_iter, write_shapes_dataset
from .metrics import predict_logits
from .train import Adam, FocalLossConfig, train_epoch

BENCH_MODEL = ModelConfig()
MAJORITY, MINORITY = 3, 4  # shape kinds, which double as class indices


@dataclass
class BenchRow:
    seed: int
    gamma: float
    minority_recall: float
    majority_recall: float


def _counts(n_major: int, n_minor: int) -> list[int]:
    counts = [0] * 10
    counts[MAJORITY], counts[MINORITY] = n_major, n_minor
    return counts


def _recalls(model, manifest) -> tuple[float, float]:
    logits, labels = predict_logits(model, manifest, 64)
    pred = logits.argmax(axis=1)
    rec = [float(np.mean(pred[labels == c] == c)) for c in (MINORITY, MAJORITY)]
    return rec[0], rec[1]


def imbalance_benchmark(seeds=(0, 1, 2, 3, 4), gammas=(2.0, 0.0), epochs: int = 12, n_minor: int = 10,
                        ratio: int = 9, noise: float = 12.0, workdir: str | Path | None = None) -> list[BenchRow]:
    rows = []
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(workdir or tmp)
        for seed in seeds:
            train = write_shapes_dataset(root / f"train{seed}", _counts(ratio * n_minor, n_minor), 32,
                                         seed=1000 + seed, noise=noise)
            test = write_shapes_dataset(root / f"test{seed}", _counts(ratio * n_minor, n_minor), 32,
                                        seed=2000 + seed, noise=noise)
            for gamma in gammas:
                model = build_cascrnet(replace(BENCH_MODEL, seed=seed))
                opt = Adam(model.params)
                focal = FocalLossConfig(gamma=gamma)
                for epoch in range(epochs):
                    train_epoch(model, batch_iter(train, 16, seed, epoch, 32), opt, focal)
                minor, major = _recalls(model, test)
                rows.append(BenchRow(seed, gamma, minor, major))
    return rows


def render_bench(rows: list[BenchRow]) -> str:
    gammas = sorted({r.gamma for r in rows}, reverse=True)
    names = {g: ("cross-entropy" if g == 0 else f"focal g={g:g}") for g in gammas}
    lines = ["seed  " + "  ".join(f"{names[g] + ' minority':>24}" for g in gammas)]
    for seed in sorted({r.seed for r in rows}):
        cells = []
        for g in gammas:
            r = next(x for x in rows if x.seed == seed and x.gamma == g)
            cells.append(f"{r.minority_recall:>24.3f}")
        lines.append(f"{seed:>4}  " + "  ".join(cells))
    means = [np.mean([r.minority_recall for r in rows if r.gamma == g]) for g in gammas]
    lines.append("mean  " + "  ".join(f"{m:>24.3f}" for m in means))
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--epochs", type=int, default=12)
    p.add_argument("--seeds", type=int, default=5)
    args = p.parse_args(argv)
    print(render_bench(imbalance_benchmark(seeds=tuple(range(args.seeds)), epochs=args.epochs)), end="")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
