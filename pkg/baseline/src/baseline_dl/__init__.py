"""Frozen-backbone transfer-learning baseline for two-class image screening.

Reads the companion toolkit's manifest format, trains only a new 2-output
head on top of a frozen backbone, and emits metrics in the shared report
schema for side-by-side comparison.
"""

from .config import BaselineConfig, TrainingCurve
from .evaluate import evaluate_baseline, report_from_counts
from .model import TransferClassifier, backbone_checksum, build_model
from .train import TrainResult, load_checkpoint, train_baseline

__version__ = "0.1.0"
