"""Explainable two-class image screening.

Two detectors built on the same ingestion pipeline: a raw-pixel
nearest-class-mean classifier and a per-class principal-subspace classifier,
plus evaluation reports and per-decision explanation artifacts.
"""

from .dataset import (
    LabeledMatrix,
    Manifest,
    PixelConfig,
    SampleRecord,
    build_labeled_matrix,
    build_split_manifest,
    decode_and_flatten,
    load_manifest,
    save_manifest,
    scan_directory,
)
from .detector import (
    DecisionTrace,
    MeanDistanceModel,
    PcaDetectorModel,
    classify,
    classify_mean,
    classify_pca,
    load_model,
    save_model,
    train_mean_model,
    train_pca_detector,
)
from .evaluation import (
    ConfusionMatrix,
    MetricsReport,
    confusion_from_predictions,
    emit_report,
    metrics_from_confusion,
)
from .explain import explain_decision, export_eigenimage, export_mean_image

__version__ = "0.1.0"
