"""Scoring a manifest split and emitting the shared report format.

The JSON layout here is the companion toolkit's report schema — counts,
full-precision metrics, undefined-metric flags, and a half-up rounded
block — so reports from both systems can sit side by side in one pipeline.
"""

from __future__ import annotations

import json
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import torch
from torch.utils.data import DataLoader

from .data import (
    LABEL_TO_INDEX,
    ManifestImageDataset,
    read_manifest,
    source_image_size,
    split_records,
)
from .train import load_checkpoint

UNDEFINED_PRECISION = "undefined_precision"
UNDEFINED_RECALL = "undefined_recall"
UNDEFINED_F1 = "undefined_f1"


def _round_half_up(value: float, ndigits: int = 2) -> float:
    quantum = Decimal(1).scaleb(-ndigits)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def report_from_counts(tp: int, fn: int, fp: int, tn: int) -> dict:
    """Shared report payload with the zero-denominator-flags policy."""
    total = tp + fn + fp + tn
    if total == 0:
        raise ValueError("no samples to report on")
    flags = []
    accuracy = (tp + tn) / total
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision = 0.0
        flags.append(UNDEFINED_PRECISION)
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall = 0.0
        flags.append(UNDEFINED_RECALL)
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        flags.append(UNDEFINED_F1)
    return {
        "counts": {"tp": tp, "fn": fn, "fp": fp, "tn": tn},
        "metrics": {
            "accuracy": accuracy,
            "precision": precision,
            "recall": recall,
            "f1": f1,
        },
        "flags": sorted(flags),
        "rounded_2dp": {
            "accuracy": _round_half_up(accuracy),
            "precision": _round_half_up(precision),
            "recall": _round_half_up(recall),
            "f1": _round_half_up(f1),
        },
    }


def evaluate_baseline(checkpoint_path, manifest_path, split: str, out_report) -> dict:
    """Predict a split by argmax over the two logits and write the report JSON."""
    model, config, trained_size = load_checkpoint(checkpoint_path)
    records = split_records(read_manifest(manifest_path), split)
    if not records:
        raise ValueError(f"manifest has no samples in split {split!r}")
    eval_size = source_image_size(records)
    if tuple(eval_size) != tuple(trained_size):
        raise ValueError(
            f"checkpoint was trained on {trained_size[0]}x{trained_size[1]} images "
            f"but split {split!r} holds {eval_size[0]}x{eval_size[1]}"
        )

    loader = DataLoader(
        ManifestImageDataset(records, config.input_size),
        batch_size=config.batch_size,
    )
    predictions: list[int] = []
    with torch.no_grad():
        for inputs, _ in loader:
            predictions.extend(model(inputs).argmax(dim=1).tolist())

    positive = LABEL_TO_INDEX["positive"]
    tp = fn = fp = tn = 0
    for record, pred in zip(records, predictions):
        truth = LABEL_TO_INDEX[record.label]
        if truth == positive:
            tp, fn = (tp + 1, fn) if pred == positive else (tp, fn + 1)
        else:
            fp, tn = (fp + 1, tn) if pred == positive else (fp, tn + 1)

    report = report_from_counts(tp, fn, fp, tn)
    out_report = Path(out_report)
    out_report.parent.mkdir(parents=True, exist_ok=True)
    with open(out_report, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    return report
