"""Command-line front end: ingest, train, evaluate, predict, explain, inspect.

Exit codes are stable across subcommands: 0 success, 2 invalid input or
configuration, 3 I/O failure, 4 partial per-item failure. Diagnostics go to
standard error; data goes to files or standard output only.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from .dataset import (
    NEGATIVE,
    POSITIVE,
    SPLITS,
    PixelConfig,
    build_labeled_matrix,
    build_split_manifest,
    decode_and_flatten,
    load_manifest,
    manifest_from_records,
    merge_manifests,
    save_manifest,
    scan_directory,
)
from .detector import (
    classify,
    load_model,
    read_model_header,
    save_model,
    train_mean_model,
    train_pca_detector,
)
from .errors import (
    DecodeError,
    DimensionMismatchError,
    EigendermError,
    InvalidInputError,
    ShapeError,
)
from .evaluation import (
    REPORT_FORMATS,
    confusion_from_predictions,
    emit_report,
    metrics_from_confusion,
    render_report_figure,
)
from .explain import explain_decision, render_decision_figure

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3
EXIT_PARTIAL = 4

log = logging.getLogger("eigenderm")


@dataclass(frozen=True)
class RunConfig:
    """Defaults for a full run; a bare command line reproduces these."""

    method: str = "pca"
    r: int = 180
    centered: bool = False
    height: int = 512
    width: int = 512
    resize_policy: str = "reject"
    seed: int = 0
    workers: int = 1

    def pixel_config(self) -> PixelConfig:
        return PixelConfig(
            height=self.height, width=self.width, resize_policy=self.resize_policy
        )


_DEFAULTS = RunConfig()


def _add_pixel_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--height", type=int, default=_DEFAULTS.height, help="expected image height")
    p.add_argument("--width", type=int, default=_DEFAULTS.width, help="expected image width")
    p.add_argument(
        "--resize",
        choices=("reject", "bilinear"),
        default=_DEFAULTS.resize_policy,
        help="what to do with images of other sizes",
    )


def _pixel_config(args) -> PixelConfig:
    return PixelConfig(height=args.height, width=args.width, resize_policy=args.resize)


def cmd_ingest(args) -> int:
    pos = scan_directory(args.pos, POSITIVE, "train")
    neg = scan_directory(args.neg, NEGATIVE, "train")
    parts = [
        build_split_manifest(pos, args.train_pos, args.val_pos, args.seed),
        build_split_manifest(neg, args.train_neg, args.val_neg, args.seed),
    ]
    if args.test_pos:
        parts.append(
            manifest_from_records(scan_directory(args.test_pos, POSITIVE, "test"), args.seed)
        )
    if args.test_neg:
        parts.append(
            manifest_from_records(scan_directory(args.test_neg, NEGATIVE, "test"), args.seed)
        )
    manifest = merge_manifests(*parts)
    save_manifest(manifest, args.out)
    for split in SPLITS:
        log.info(
            "split %-10s  positive=%-4d negative=%d",
            split,
            manifest.count(label=POSITIVE, split=split),
            manifest.count(label=NEGATIVE, split=split),
        )
    log.info("wrote manifest %s (%d records)", args.out, len(manifest.records))
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _pixel_config(args)
    manifest = load_manifest(args.manifest)
    x_pos = build_labeled_matrix(manifest, "train", POSITIVE, cfg, workers=args.workers)
    x_neg = build_labeled_matrix(manifest, "train", NEGATIVE, cfg, workers=args.workers)
    if args.method == "mean":
        model = train_mean_model(x_pos, x_neg, pixel_config=cfg)
    else:
        model = train_pca_detector(
            x_pos, x_neg, r=args.r, centered=args.centered, pixel_config=cfg
        )
    save_model(model, args.out)
    log.info(
        "trained %s model on %d positive / %d negative samples -> %s",
        args.method,
        x_pos.matrix.shape[1],
        x_neg.matrix.shape[1],
        args.out,
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    manifest = load_manifest(args.manifest)
    cfg = PixelConfig(
        height=model.pixel_config.height,
        width=model.pixel_config.width,
        resize_policy=args.resize,
    )
    truth: list[str] = []
    predicted: list[str] = []
    for label in (POSITIVE, NEGATIVE):
        if manifest.count(label=label, split=args.split) == 0:
            continue
        lm = build_labeled_matrix(manifest, args.split, label, cfg, workers=args.workers)
        for i in range(lm.matrix.shape[1]):
            truth.append(label)
            predicted.append(classify(model, lm.matrix[:, i]).label)
    if not truth:
        raise InvalidInputError(f"manifest has no samples in split {args.split!r}")

    cm = confusion_from_predictions(truth, predicted)
    report = metrics_from_confusion(cm)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8") as sink:
            emit_report(report, cm, args.format, sink)
        figure_path = out.with_suffix(".png")
        render_report_figure(report, cm, figure_path)
        log.info("wrote report %s and figure %s", out, figure_path)
    else:
        emit_report(report, cm, args.format, sys.stdout)
    return EXIT_OK


def _predict_line(path: str, model, cfg: PixelConfig) -> tuple[str, bool]:
    try:
        x = decode_and_flatten(path, cfg)
        trace = classify(model, x)
    except (DecodeError, ShapeError, DimensionMismatchError) as exc:
        return f"{path}\terror\t{exc}", False
    return f"{path}\t{trace.label}\t{trace.d_pos!r}\t{trace.d_neg!r}", True


def cmd_predict(args) -> int:
    model = load_model(args.model)
    cfg = PixelConfig(
        height=model.pixel_config.height,
        width=model.pixel_config.width,
        resize_policy=args.resize,
    )
    failures = 0
    for image in args.images:
        line, ok = _predict_line(image, model, cfg)
        print(line)
        if not ok:
            failures += 1
    if failures:
        log.error("%d of %d images failed", failures, len(args.images))
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_explain(args) -> int:
    model = load_model(args.model)
    cfg = PixelConfig(
        height=model.pixel_config.height,
        width=model.pixel_config.width,
        resize_policy=args.resize,
    )
    x = decode_and_flatten(args.image, cfg)
    out_dir = Path(args.out_dir)
    trace, heatmaps = explain_decision(model, x, out_dir)
    with open(out_dir / "trace.json", "w", encoding="utf-8") as fh:
        json.dump({"trace": trace.to_dict()}, fh, indent=2)
        fh.write("\n")
    render_decision_figure(model, x, trace, out_dir / "explanation.png")
    print(f"{args.image}\t{trace.label}\t{trace.d_pos!r}\t{trace.d_neg!r}")
    log.info("wrote %s, trace.json and explanation.png under %s",
             ", ".join(sorted(heatmaps.values())), out_dir)
    return EXIT_OK


def cmd_inspect(args) -> int:
    header = read_model_header(args.model)
    print(json.dumps(header, indent=2))
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eigenderm",
        description="Explainable two-class image screening with class-mean "
        "and per-class eigenimage detectors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="scan class directories and write a split manifest")
    p.add_argument("--pos", required=True, help="directory of positive-class images")
    p.add_argument("--neg", required=True, help="directory of negative-class images")
    p.add_argument("--train-pos", type=int, default=250, help="positive train count")
    p.add_argument("--val-pos", type=int, default=50, help="positive validation count")
    p.add_argument("--train-neg", type=int, default=500, help="negative train count")
    p.add_argument("--val-neg", type=int, default=100, help="negative validation count")
    p.add_argument("--test-pos", help="optional directory of positive test images")
    p.add_argument("--test-neg", help="optional directory of negative test images")
    p.add_argument("--seed", type=int, default=_DEFAULTS.seed, help="shuffle seed")
    p.add_argument("--out", required=True, help="manifest output path")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train a detector from a manifest's train split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", choices=("mean", "pca"), default=_DEFAULTS.method)
    p.add_argument("--r", type=int, default=_DEFAULTS.r, help="number of components (pca)")
    p.add_argument("--centered", action="store_true", help="subtract class means before the SVD")
    _add_pixel_flags(p)
    p.add_argument("--workers", type=int, default=_DEFAULTS.workers, help="decode workers")
    p.add_argument("--out", required=True, help="model output path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a split and write a metrics report")
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", choices=SPLITS, default="validation")
    p.add_argument("--model", required=True)
    p.add_argument("--format", choices=REPORT_FORMATS, default="json")
    p.add_argument(
        "--resize",
        choices=("reject", "bilinear"),
        default=_DEFAULTS.resize_policy,
    )
    p.add_argument("--workers", type=int, default=_DEFAULTS.workers)
    p.add_argument("--out", help="report path (default: standard output, no figure)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="classify images; one tab-separated line each")
    p.add_argument("--model", required=True)
    p.add_argument(
        "--resize",
        choices=("reject", "bilinear"),
        default=_DEFAULTS.resize_policy,
    )
    p.add_argument("images", nargs="+", help="image files to classify")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("explain", help="classify one image and write its explanation artifacts")
    p.add_argument("--model", required=True)
    p.add_argument(
        "--resize",
        choices=("reject", "bilinear"),
        default=_DEFAULTS.resize_policy,
    )
    p.add_argument("--out-dir", required=True, help="directory for heatmaps, trace, figure")
    p.add_argument("image", help="image file to explain")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("inspect", help="dump a model file's header fields as JSON")
    p.add_argument("model")
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except EigendermError as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
