"""Command-line front end for the transfer-learning baseline."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import BaselineConfig
from .evaluate import evaluate_baseline
from .train import train_baseline

log = logging.getLogger("baseline_dl")


def cmd_train(args) -> int:
    config = BaselineConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        momentum=args.momentum,
        seed=args.seed,
        input_size=args.input_size,
        pretrained=not args.no_pretrained,
    )
    result = train_baseline(args.manifest, config, args.out_checkpoint, args.out_curve)
    log.info("backbone checksum %s (unchanged)", result.backbone_checksum_after[:16])
    log.info("wrote %s and %s", args.out_checkpoint, args.out_curve)
    return 0


def cmd_evaluate(args) -> int:
    report = evaluate_baseline(args.checkpoint, args.manifest, args.split, args.out_report)
    print(json.dumps(report["rounded_2dp"]))
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="baseline-dl",
        description="Frozen-backbone transfer-learning baseline over the shared "
        "manifest and report formats.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the 2-way head on a manifest's train split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--epochs", type=int, default=BaselineConfig.epochs)
    p.add_argument("--batch-size", type=int, default=BaselineConfig.batch_size)
    p.add_argument("--learning-rate", type=float, default=BaselineConfig.learning_rate)
    p.add_argument("--momentum", type=float, default=BaselineConfig.momentum)
    p.add_argument("--seed", type=int, default=BaselineConfig.seed)
    p.add_argument("--input-size", type=int, default=BaselineConfig.input_size)
    p.add_argument("--no-pretrained", action="store_true",
                   help="skip the pretrained-weights download attempt")
    p.add_argument("--out-checkpoint", required=True)
    p.add_argument("--out-curve", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a split and write the shared report JSON")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", default="validation",
                   choices=("train", "validation", "test"))
    p.add_argument("--out-report", required=True)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        log.error("%s", exc)
        return 2
    except OSError as exc:
        log.error("%s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
