"""Confusion matrices, derived metrics, and report rendering.

Reports keep full-precision metric values and add a half-up rounded block
mirroring how results tables are conventionally printed. Metrics with a zero
denominator are reported as 0 together with an explicit ``undefined_*`` flag
instead of NaN, so downstream consumers never have to special-case parsing.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .dataset import LABELS, POSITIVE
from .errors import InvalidInputError

REPORT_FORMATS = ("json", "csv", "markdown")

UNDEFINED_PRECISION = "undefined_precision"
UNDEFINED_RECALL = "undefined_recall"
UNDEFINED_F1 = "undefined_f1"


@dataclass(frozen=True)
class ConfusionMatrix:
    """2x2 counts with the positive class meaning "condition present"."""

    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fn", "fp", "tn"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    flags: frozenset[str]


def confusion_from_predictions(truth, predicted) -> ConfusionMatrix:
    """Tabulate a confusion matrix from parallel truth/prediction label lists."""
    truth = list(truth)
    predicted = list(predicted)
    if len(truth) != len(predicted):
        raise InvalidInputError(
            f"truth has {len(truth)} labels but predictions have {len(predicted)}"
        )
    if not truth:
        raise InvalidInputError("cannot tabulate an empty prediction set")
    tp = fn = fp = tn = 0
    for t, p in zip(truth, predicted):
        if t not in LABELS or p not in LABELS:
            raise InvalidInputError(f"unknown label in pair ({t!r}, {p!r})")
        if t == POSITIVE:
            if p == POSITIVE:
                tp += 1
            else:
                fn += 1
        else:
            if p == POSITIVE:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp=tp, fn=fn, fp=fp, tn=tn)


def metrics_from_confusion(cm: ConfusionMatrix) -> MetricsReport:
    """Accuracy, precision, recall, and F1; zero denominators flag the metric."""
    if cm.total == 0:
        raise InvalidInputError("confusion matrix is all zeros")
    flags = set()
    accuracy = (cm.tp + cm.tn) / cm.total

    if cm.tp + cm.fp > 0:
        precision = cm.tp / (cm.tp + cm.fp)
    else:
        precision = 0.0
        flags.add(UNDEFINED_PRECISION)

    if cm.tp + cm.fn > 0:
        recall = cm.tp / (cm.tp + cm.fn)
    else:
        recall = 0.0
        flags.add(UNDEFINED_RECALL)

    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        flags.add(UNDEFINED_F1)

    return MetricsReport(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        flags=frozenset(flags),
    )


def round_half_up(value: float, ndigits: int = 2) -> float:
    """Decimal half-up rounding on the shortest repr (0.895 -> 0.90 at 2 digits)."""
    quantum = Decimal(1).scaleb(-ndigits)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def _format_metric(value: float) -> str:
    # Two decimals, except a true 3rd-decimal midpoint (e.g. 0.895) keeps its
    # third digit: rounding it away would merge results that tables elsewhere
    # keep distinct.
    at3 = Decimal(repr(round_half_up(value, 3)))
    if int(at3.scaleb(3)) % 10 == 5:
        return f"{round_half_up(value, 3):.3f}"
    return f"{round_half_up(value, 2):.2f}"


def _report_payload(report: MetricsReport, cm: ConfusionMatrix) -> dict:
    return {
        "counts": {"tp": cm.tp, "fn": cm.fn, "fp": cm.fp, "tn": cm.tn},
        "metrics": {
            "accuracy": report.accuracy,
            "precision": report.precision,
            "recall": report.recall,
            "f1": report.f1,
        },
        "flags": sorted(report.flags),
        "rounded_2dp": {
            "accuracy": round_half_up(report.accuracy),
            "precision": round_half_up(report.precision),
            "recall": round_half_up(report.recall),
            "f1": round_half_up(report.f1),
        },
    }


def _emit_markdown(report: MetricsReport, cm: ConfusionMatrix, sink) -> None:
    rows = [
        "|  | Predicted Positive | Predicted Negative |",
        "| --- | --- | --- |",
        f"| Positive | {cm.tp} | {cm.fn} |",
        f"| Negative | {cm.fp} | {cm.tn} |",
        "",
        "| Accuracy | Precision | Recall | F1 Score |",
        "| --- | --- | --- | --- |",
        "| {} | {} | {} | {} |".format(
            _format_metric(report.accuracy),
            _format_metric(report.precision),
            _format_metric(report.recall),
            _format_metric(report.f1),
        ),
    ]
    if report.flags:
        rows += ["", "Flags: " + ", ".join(sorted(report.flags))]
    sink.write("\n".join(rows) + "\n")


def emit_report(report: MetricsReport, cm: ConfusionMatrix, format: str, sink) -> None:
    """Write the report to a text sink as json, csv, or markdown."""
    if format not in REPORT_FORMATS:
        raise InvalidInputError(
            f"unknown report format {format!r}; choose from {REPORT_FORMATS}"
        )
    if format == "json":
        json.dump(_report_payload(report, cm), sink, indent=2)
        sink.write("\n")
    elif format == "csv":
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(
            ["tp", "fn", "fp", "tn", "accuracy", "precision", "recall", "f1", "flags"]
        )
        writer.writerow(
            [
                cm.tp,
                cm.fn,
                cm.fp,
                cm.tn,
                repr(report.accuracy),
                repr(report.precision),
                repr(report.recall),
                repr(report.f1),
                ";".join(sorted(report.flags)),
            ]
        )
    else:
        _emit_markdown(report, cm, sink)


def report_to_string(report: MetricsReport, cm: ConfusionMatrix, format: str) -> str:
    buf = io.StringIO()
    emit_report(report, cm, format, buf)
    return buf.getvalue()


def render_report_figure(report: MetricsReport, cm: ConfusionMatrix, path) -> None:
    """Render the confusion matrix and metric bars to a PNG next to the report."""
    fig, (ax_cm, ax_bar) = plt.subplots(1, 2, figsize=(9, 4))

    counts = [[cm.tp, cm.fn], [cm.fp, cm.tn]]
    ax_cm.imshow(counts, cmap="Blues")
    for i in range(2):
        for j in range(2):
            ax_cm.text(j, i, str(counts[i][j]), ha="center", va="center", fontsize=14)
    ax_cm.set_xticks([0, 1], ["Predicted Positive", "Predicted Negative"])
    ax_cm.set_yticks([0, 1], ["Positive", "Negative"])
    ax_cm.set_title("Confusion matrix")

    names = ["Accuracy", "Precision", "Recall", "F1"]
    values = [report.accuracy, report.precision, report.recall, report.f1]
    bars = ax_bar.bar(names, values, color="#4878a8")
    ax_bar.set_ylim(0.0, 1.05)
    ax_bar.bar_label(bars, fmt="%.3f")
    ax_bar.set_title("Metrics")

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
