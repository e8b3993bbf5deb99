"""Explainability exports: mean images, eigenimages, and decision heatmaps.

Everything here inverts the ingest layout (flat index ``(y*W + x)*C + c``)
and min-max scales the values into 8-bit so the artifacts are viewable:
the vector minimum maps to 0, the maximum to 255, and constant vectors map
to all-zero images.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from PIL import Image

from .dataset import NEGATIVE, POSITIVE, PixelConfig
from .detector import DecisionTrace, PcaDetectorModel, classify
from .errors import DimensionMismatchError, InvalidInputError
from .linalg import as_vector


def unflatten(vec, cfg: PixelConfig) -> np.ndarray:
    """Reshape a flat pixel vector back to its (H, W, C) raster."""
    v = as_vector(vec)
    if v.size != cfg.dim:
        raise DimensionMismatchError(
            f"vector has dim {v.size}, config implies {cfg.dim}"
        )
    return v.reshape(cfg.height, cfg.width, cfg.channels)


def minmax_to_u8(values: np.ndarray) -> np.ndarray:
    """Affinely map values so min -> 0 and max -> 255; constant input -> zeros."""
    lo = float(values.min())
    hi = float(values.max())
    if hi == lo:
        return np.zeros(values.shape, dtype=np.uint8)
    scaled = (values - lo) / (hi - lo) * 255.0
    return np.clip(np.rint(scaled), 0, 255).astype(np.uint8)


def _write_png(vec: np.ndarray, cfg: PixelConfig, path) -> None:
    raster = minmax_to_u8(unflatten(vec, cfg))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(raster, mode="RGB").save(path, format="PNG")


def _class_mean(model, class_label: str) -> np.ndarray:
    if class_label == POSITIVE:
        return model.mean_pos
    if class_label == NEGATIVE:
        return model.mean_neg
    raise InvalidInputError(f"unknown class label {class_label!r}")


def _require_config(model) -> PixelConfig:
    if model.pixel_config is None:
        raise InvalidInputError("model has no pixel geometry; cannot render images")
    return model.pixel_config


def export_mean_image(model, class_label: str, path) -> None:
    """Write one class's mean as a min-max scaled PNG."""
    _write_png(_class_mean(model, class_label), _require_config(model), path)


def export_eigenimage(model, class_label: str, index: int, path) -> None:
    """Write principal component ``index`` of one class as a PNG."""
    if not isinstance(model, PcaDetectorModel):
        raise InvalidInputError("eigenimages require a pca-method model")
    if not 0 <= index < model.r:
        raise InvalidInputError(
            f"component index {index} out of range [0, {model.r})"
        )
    if class_label not in (POSITIVE, NEGATIVE):
        raise InvalidInputError(f"unknown class label {class_label!r}")
    basis = model.u_pos if class_label == POSITIVE else model.u_neg
    _write_png(basis[:, index], _require_config(model), path)


def explain_decision(model, x, out_dir) -> tuple[DecisionTrace, dict[str, str]]:
    """Classify ``x`` and write per-class absolute-difference heatmaps.

    The heatmaps live in raw pixel space (|x - class mean|, min-max scaled)
    regardless of the model method; the subspace distances appear in the
    returned trace. Returns the trace and the written file paths keyed by
    class label.
    """
    xv = as_vector(x)
    cfg = _require_config(model)
    trace = classify(model, xv)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for class_label, suffix in ((POSITIVE, "heatmap_pos.png"), (NEGATIVE, "heatmap_neg.png")):
        target = out_dir / suffix
        _write_png(np.abs(xv - _class_mean(model, class_label)), cfg, target)
        paths[class_label] = str(target)
    return trace, paths


def render_decision_figure(model, x, trace: DecisionTrace, path) -> None:
    """Render a one-page summary: the sample, both means, both heatmaps, distances."""
    cfg = _require_config(model)
    xv = as_vector(x)
    panels = [
        ("sample", xv),
        ("positive mean", model.mean_pos),
        ("negative mean", model.mean_neg),
        ("|sample - pos mean|", np.abs(xv - model.mean_pos)),
        ("|sample - neg mean|", np.abs(xv - model.mean_neg)),
    ]
    fig, axes = plt.subplots(1, len(panels), figsize=(3 * len(panels), 3.4))
    for ax, (title, vec) in zip(axes, panels):
        ax.imshow(minmax_to_u8(unflatten(vec, cfg)))
        ax.set_title(title, fontsize=10)
        ax.axis("off")
    fig.suptitle(
        f"{trace.method}: label={trace.label}  "
        f"d_pos={trace.d_pos:.4g}  d_neg={trace.d_neg:.4g}  margin={trace.margin:.4g}"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
