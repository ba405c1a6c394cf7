"""Command-line entry point: train, eval, roc, predict, gradcheck, params, synth.

Exit codes: 0 success, 1 error records (predict) or failed checks
(gradcheck), 2 configuration or weight/architecture mismatch, 3 data or
file-format error, 4 numeric divergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

import numpy as np

from . import CLASS_NAMES
from .blocks import build_cascrnet, param_table
from .checkpoint import load_weights, save_weights
from .config import RunConfig, load_config
from .data import class_weights, load_image, load_manifest, stratified_split, write_shapes_dataset
from .errors import ConfigError, DataError, FormatError, InvalidSpecError, NonFiniteError
from .fileio import atomic_write_text
from .metrics import (
    evaluate,
    render_confusion_csv,
    render_report,
    render_report_csv,
    render_roc_csv,
    render_roc_svg,
)
from .nn import Tensor, softmax_array
from .train import AdamConfig, FocalLossConfig, TrainConfig, fit
from .verify import gradcheck_suite, render_gradcheck_table

log = logging.getLogger("cascrnet")

EXIT_OK, EXIT_RECORDS, EXIT_CONFIG, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3, 4
IMAGE_SUFFIXES = (".ppm", ".cten")


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


# data resolution -------------------------------------------------------------------


def _find_csv(path: Path, names: tuple[str, ...]) -> Path:
    if path.is_file():
        return path
    if not path.is_dir():
        raise DataError(f"data path not found: {path}")
    for name in names:
        if (path / name).is_file():
            return path / name
    raise DataError(f"no {' or '.join(names)} in {path}")


def _train_val(data: Path, cfg: RunConfig):
    """train.csv + val.csv when both exist, else a stratified split of one manifest."""
    if data.is_dir() and (data / "train.csv").is_file() and (data / "val.csv").is_file():
        train, val = load_manifest(data / "train.csv"), load_manifest(data / "val.csv")
    else:
        whole = load_manifest(_find_csv(data, ("train.csv", "manifest.csv")))
        val, train = stratified_split(whole, cfg.val_fraction, cfg.seed)
        log.info("split %d rows into %d train / %d validation", len(whole), len(train), len(val))
    train.validate_files()
    val.validate_files()
    return train, val


def _eval_manifest(data: Path):
    m = load_manifest(_find_csv(data, ("manifest.csv", "val.csv", "test.csv")))
    m.validate_files()
    return m


def _write_reports(out: Path, report, model_name: str, image_size: str) -> None:
    atomic_write_text(out / "report.txt", render_report(report, model_name, image_size))
    atomic_write_text(out / "report.csv", render_report_csv([report.as_row(model_name)]))
    atomic_write_text(out / "confusion.csv", render_confusion_csv(report.confusion))
    atomic_write_text(out / "confusion_normalized.csv", render_confusion_csv(report.normalized_confusion))
    _write_roc(out, report)
    if report.warnings:
        atomic_write_text(out / "warnings.txt", "\n".join(report.warnings) + "\n")


def _write_roc(out: Path, report) -> None:
    atomic_write_text(out / "roc.csv", render_roc_csv(report.curves))
    atomic_write_text(out / "roc.svg", render_roc_svg(report.curves))


# commands ------------------------------------------------------------------------------


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.data is not None:
        overrides["data_dir"] = str(args.data)
    if args.out is not None:
        overrides["out_dir"] = str(args.out)
    cfg = cfg.with_overrides(**overrides)
    if not cfg.data_dir or not cfg.out_dir:
        raise ConfigError("both a data directory and an output directory are required (--data/--out or data_dir/out_dir)")
    model_cfg = cfg.model_config()
    model_cfg.validate()

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "config.resolved", cfg.to_text())

    train, val = _train_val(Path(cfg.data_dir), cfg)
    weights = None
    if cfg.class_weighting == "inverse_frequency":
        weights = tuple(float(w) for w in class_weights(train))
    tcfg = TrainConfig(
        epochs=cfg.epochs, batch_size=cfg.batch_size, seed=cfg.seed,
        focal=FocalLossConfig(gamma=cfg.focal_gamma, class_weights=weights, num_classes=cfg.num_classes),
        adam=AdamConfig(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.adam_eps),
        patience=cfg.patience, plateau_factor=cfg.plateau_factor, min_delta=cfg.min_delta,
        min_lr=cfg.min_lr, checkpoint_every=cfg.checkpoint_every, augment_flip=cfg.augment_flip,
        eval_batch_size=cfg.eval_batch_size,
    )
    model = build_cascrnet(model_cfg)
    fit(model, train, val, tcfg, out)
    save_weights(model, out / "final")
    report = evaluate(model, val, cfg.eval_batch_size)
    size = f"{cfg.input_size}x{cfg.input_size}"
    _write_reports(out, report, "CASCRNet", size)
    print(render_report(report, "CASCRNet", size), end="")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_weights(args.weights)
    manifest = _eval_manifest(Path(args.data))
    report = evaluate(model, manifest, args.batch_size)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    size = f"{model.config.input_size}x{model.config.input_size}"
    _write_reports(out, report, "CASCRNet", size)
    print(render_report(report, "CASCRNet", size), end="")
    return EXIT_OK


def cmd_roc(args) -> int:
    model = load_weights(args.weights)
    report = evaluate(model, _eval_manifest(Path(args.data)), args.batch_size)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_roc(out, report)
    for cv in report.curves:
        print(f"{CLASS_NAMES[cv.class_index]},{cv.auc:.6f}")
    print(f"mean,{report.avg_auc:.6f}")
    return EXIT_OK


def _predict_inputs(path: Path) -> list[Path]:
    if path.is_dir():
        return sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    return [path]


def cmd_predict(args) -> int:
    model = load_weights(args.weights)
    size = model.config.input_size
    writer = csv.writer(sys.stdout, lineterminator="\n")
    inputs = _predict_inputs(Path(args.input))
    if not inputs:
        return _fail(EXIT_DATA, f"no .ppm or .cten images under {args.input}")
    errors = 0
    for path in inputs:
        try:
            x = load_image(path, size, model.dtype)[None]
        except DataError as exc:
            errors += 1
            writer.writerow([str(path), "ERROR", str(exc)])
            continue
        probs = softmax_array(model(Tensor(x)).data.astype(np.float64))[0]
        writer.writerow([str(path), CLASS_NAMES[int(probs.argmax())], *(f"{p:.9f}" for p in probs)])
    return EXIT_RECORDS if errors else EXIT_OK


def cmd_gradcheck(args) -> int:
    results = gradcheck_suite(tol=args.tol, seed=args.seed)
    print(render_gradcheck_table(results), end="")
    failed = [r for r in results if not r.passed]
    for r in failed:
        print(f"FAIL {r.failure()}", file=sys.stderr)
    return EXIT_RECORDS if failed else EXIT_OK


def cmd_params(args) -> int:
    cfg = load_config(args.config)
    model_cfg = cfg.model_config()
    model_cfg.validate()
    rows = param_table(build_cascrnet(model_cfg))
    buf = io.StringIO()
    width = max(len(r.name) for r in rows)
    buf.write(f"{'layer':<{width}}  {'shape':<16}  {'count':>9}\n")
    for r in rows:
        buf.write(f"{r.name:<{width}}  {'x'.join(map(str, r.shape)):<16}  {r.count:>9d}\n")
    total = sum(r.count for r in rows)
    buf.write(f"{'total':<{width}}  {'':<16}  {total:>9d}\n")
    if model_cfg.architecture == "cascrnet":
        buf.write("\ndilation variants (parameter count does not depend on rates):\n")
        n_rates = len(model_cfg.aspp.dilation_rates)
        variants = [(1,) * n_rates, model_cfg.aspp.dilation_rates]
        if n_rates == 3 and (2, 4, 8) not in variants:
            variants.insert(1, (2, 4, 8))
        for rates in variants:
            count = sum(r.count for r in param_table(build_cascrnet(model_cfg.with_rates(rates))))
            buf.write(f"  aspp_rates={','.join(map(str, rates)):<10} total={count}\n")
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_synth(args) -> int:
    out = Path(args.out)
    m = write_shapes_dataset(out, args.per_class, args.size, seed=args.seed)
    print(f"wrote {len(m)} images and {out / 'manifest.csv'}")
    return EXIT_OK


# parser -------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cascrnet", description="Train and evaluate the CASCRNet frame classifier.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a model and write history, checkpoints and a validation report")
    t.add_argument("--config", required=True, type=Path)
    t.add_argument("--data", type=Path, help="directory with train.csv+val.csv or manifest.csv, or a manifest CSV")
    t.add_argument("--out", type=Path)
    t.add_argument("--seed", type=int)
    t.set_defaults(func=cmd_train)

    for name, func, text in [("eval", cmd_eval, "write report, confusion and ROC files for a manifest"),
                             ("roc", cmd_roc, "write only the ROC CSV and SVG for a manifest")]:
        e = sub.add_parser(name, help=text)
        e.add_argument("--weights", required=True, type=Path)
        e.add_argument("--data", required=True, type=Path, help="manifest CSV or a directory holding manifest.csv")
        e.add_argument("--out", required=True, type=Path)
        e.add_argument("--batch-size", type=int, default=64)
        e.set_defaults(func=func)

    pr = sub.add_parser("predict", help="print path, top-1 class and 10 probabilities per image as CSV")
    pr.add_argument("--weights", required=True, type=Path)
    pr.add_argument("--input", required=True, type=Path, help="a .ppm/.cten image or a directory of them")
    pr.set_defaults(func=cmd_predict)

    g = sub.add_parser("gradcheck", help="finite-difference check of every op, both blocks and the desk model")
    g.add_argument("--tol", type=float, default=1e-4)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gradcheck)

    pa = sub.add_parser("params", help="per-layer parameter table for a config")
    pa.add_argument("--config", required=True, type=Path)
    pa.set_defaults(func=cmd_params)

    s = sub.add_parser("synth", help="write the synthetic shapes dataset")
    s.add_argument("--out", required=True, type=Path)
    s.add_argument("--per-class", type=int, default=20)
    s.add_argument("--size", type=int, default=32)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InvalidSpecError) as exc:  # includes weight/architecture mismatch
        return _fail(EXIT_CONFIG, str(exc))
    except FormatError as exc:
        return _fail(EXIT_DATA, str(exc))
    except DataError as exc:
        return _fail(EXIT_DATA, str(exc))
    except NonFiniteError as exc:
        return _fail(EXIT_DIVERGED, str(exc))


if __name__ == "__main__":
    sys.exit(main())
