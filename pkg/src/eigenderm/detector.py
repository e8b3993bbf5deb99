"""The two statistical detectors and trained-model persistence.

The mean-distance detector compares a sample against the two class means in
raw pixel space. The subspace detector builds one principal-component basis
per class from the training columns (raw by default, mean-centered behind a
flag) and compares the sample to each class's projected mean inside that
class's own subspace. Ties go to negative in both detectors.

Model files are little-endian binary: magic ``EDRM``, a u32 format version,
method and centered flags, the pixel geometry, the component count, the
float64 payload arrays, and a trailing CRC32 of everything before it.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import NEGATIVE, POSITIVE, LabeledMatrix, PixelConfig
from .errors import (
    DimensionMismatchError,
    InvalidInputError,
    ModelFormatError,
    RankError,
)
from .linalg import as_vector, euclidean_distance, mean_vector, project, thin_svd_snapshot

MAGIC = b"EDRM"
FORMAT_VERSION = 1
_METHOD_MEAN = 1
_METHOD_PCA = 2

_HEADER = struct.Struct("<4sIBBIIII")  # magic, version, method, centered, H, W, C, r


@dataclass(frozen=True)
class MeanDistanceModel:
    mean_pos: np.ndarray
    mean_neg: np.ndarray
    # None only for purely synthetic vector data that never came from rasters;
    # such models classify fine but cannot be serialized or rendered.
    pixel_config: PixelConfig | None = None

    @property
    def method(self) -> str:
        return "mean"

    @property
    def dim(self) -> int:
        return self.mean_pos.size


@dataclass(frozen=True)
class PcaDetectorModel:
    """Trained per-class subspace detector.

    ``u_pos`` / ``u_neg`` hold the first ``r`` principal components of each
    class as orthonormal columns; ``proj_mean_*`` are the class means
    expressed in their own component basis.
    """

    mean_pos: np.ndarray
    mean_neg: np.ndarray
    u_pos: np.ndarray
    u_neg: np.ndarray
    proj_mean_pos: np.ndarray
    proj_mean_neg: np.ndarray
    r: int
    centered: bool
    pixel_config: PixelConfig | None = None

    @property
    def method(self) -> str:
        return "pca"

    @property
    def dim(self) -> int:
        return self.mean_pos.size


@dataclass(frozen=True)
class DecisionTrace:
    """Per-prediction explanation: both class distances and the chosen label."""

    label: str
    d_pos: float
    d_neg: float
    margin: float  # d_neg - d_pos; positive means closer to the positive class
    method: str

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "d_pos": self.d_pos,
            "d_neg": self.d_neg,
            "margin": self.margin,
            "method": self.method,
        }


def _infer_pixel_config(
    rows: int, pixel_config: PixelConfig | None
) -> PixelConfig | None:
    if pixel_config is None:
        default = PixelConfig()
        return default if rows == default.dim else None
    if pixel_config.dim != rows:
        raise DimensionMismatchError(
            f"training matrix has {rows} rows but pixel config implies "
            f"{pixel_config.dim}; pass the pixel_config used at ingest"
        )
    return pixel_config


def _check_training_pair(x_pos: LabeledMatrix, x_neg: LabeledMatrix) -> int:
    if x_pos.matrix.shape[1] == 0 or x_neg.matrix.shape[1] == 0:
        raise InvalidInputError("both classes need at least one training sample")
    if x_pos.matrix.shape[0] != x_neg.matrix.shape[0]:
        raise DimensionMismatchError(
            f"class matrices disagree on dimensionality: "
            f"{x_pos.matrix.shape[0]} vs {x_neg.matrix.shape[0]}"
        )
    return x_pos.matrix.shape[0]


def train_mean_model(
    x_pos: LabeledMatrix,
    x_neg: LabeledMatrix,
    pixel_config: PixelConfig | None = None,
) -> MeanDistanceModel:
    """Fit the raw-pixel nearest-class-mean detector."""
    rows = _check_training_pair(x_pos, x_neg)
    cfg = _infer_pixel_config(rows, pixel_config)
    return MeanDistanceModel(
        mean_pos=mean_vector(x_pos.matrix),
        mean_neg=mean_vector(x_neg.matrix),
        pixel_config=cfg,
    )


def classify_mean(model: MeanDistanceModel, x) -> DecisionTrace:
    """Label a sample by its nearer class mean in raw pixel space (tie: negative)."""
    xv = as_vector(x)
    if xv.size != model.dim:
        raise DimensionMismatchError(
            f"sample has dim {xv.size}, model expects {model.dim}"
        )
    d_pos = euclidean_distance(xv, model.mean_pos)
    d_neg = euclidean_distance(xv, model.mean_neg)
    label = POSITIVE if d_pos < d_neg else NEGATIVE
    return DecisionTrace(
        label=label, d_pos=d_pos, d_neg=d_neg, margin=d_neg - d_pos, method="mean"
    )


def train_pca_detector(
    x_pos: LabeledMatrix,
    x_neg: LabeledMatrix,
    r: int,
    centered: bool = False,
    pixel_config: PixelConfig | None = None,
) -> PcaDetectorModel:
    """Fit the per-class principal-subspace detector.

    Each class gets its own thin SVD basis. With ``centered=False`` (the
    default) the SVD runs on the raw training columns; with ``centered=True``
    the class mean is subtracted first (classic covariance convention), and
    the projected mean is still that of the raw mean in the centered basis.

    Raises:
        RankError: ``r`` exceeds the numerical rank of either class.
    """
    if r < 1:
        raise InvalidInputError(f"r must be >= 1, got {r}")
    rows = _check_training_pair(x_pos, x_neg)
    cfg = _infer_pixel_config(rows, pixel_config)

    bases = {}
    means = {}
    deficient = []
    for name, lm in ((POSITIVE, x_pos), (NEGATIVE, x_neg)):
        mean = mean_vector(lm.matrix)
        work = lm.matrix - mean[:, None] if centered else lm.matrix
        svd = thin_svd_snapshot(work)
        if r > svd.rank:
            deficient.append(f"{name} class has numerical rank {svd.rank}")
        means[name] = mean
        bases[name] = svd.u[:, :r] if r <= svd.rank else svd.u
    if deficient:
        raise RankError(f"requested r={r} but " + " and ".join(deficient))

    return PcaDetectorModel(
        mean_pos=means[POSITIVE],
        mean_neg=means[NEGATIVE],
        u_pos=bases[POSITIVE],
        u_neg=bases[NEGATIVE],
        proj_mean_pos=project(bases[POSITIVE], means[POSITIVE]),
        proj_mean_neg=project(bases[NEGATIVE], means[NEGATIVE]),
        r=r,
        centered=centered,
        pixel_config=cfg,
    )


def classify_pca(model: PcaDetectorModel, x) -> DecisionTrace:
    """Label a sample by its nearer projected class mean, each class in its own subspace.

    The underlying comparison is on squared projected distances; since the
    square root is monotone the trace's plain distances decide identically,
    with exact ties going to negative.
    """
    xv = as_vector(x)
    if xv.size != model.dim:
        raise DimensionMismatchError(
            f"sample has dim {xv.size}, model expects {model.dim}"
        )
    coeff_pos = project(model.u_pos, xv)
    coeff_neg = project(model.u_neg, xv)
    d_pos = euclidean_distance(coeff_pos, model.proj_mean_pos)
    d_neg = euclidean_distance(coeff_neg, model.proj_mean_neg)
    label = POSITIVE if d_pos < d_neg else NEGATIVE
    return DecisionTrace(
        label=label, d_pos=d_pos, d_neg=d_neg, margin=d_neg - d_pos, method="pca"
    )


def classify(model, x) -> DecisionTrace:
    """Dispatch to the classifier matching the trained model's method."""
    if isinstance(model, MeanDistanceModel):
        return classify_mean(model, x)
    if isinstance(model, PcaDetectorModel):
        return classify_pca(model, x)
    raise InvalidInputError(f"not a trained model: {type(model).__name__}")


def _le_f64_bytes(arr: np.ndarray, order: str = "C") -> bytes:
    return np.ascontiguousarray(arr, dtype="<f8").tobytes(order=order)


def save_model(model, path) -> None:
    """Serialize a trained model; see the module docstring for the layout.

    The resize policy is ingest-time configuration and is not part of the
    trained artifact; loaded models carry the default policy.
    """
    cfg = model.pixel_config
    if cfg is None:
        raise InvalidInputError(
            "model has no pixel geometry; only raster-trained models serialize"
        )
    if isinstance(model, MeanDistanceModel):
        method, centered, r = _METHOD_MEAN, 0, 0
        arrays = [_le_f64_bytes(model.mean_pos), _le_f64_bytes(model.mean_neg)]
    elif isinstance(model, PcaDetectorModel):
        method, centered, r = _METHOD_PCA, int(model.centered), model.r
        arrays = [
            _le_f64_bytes(model.mean_pos),
            _le_f64_bytes(model.mean_neg),
            _le_f64_bytes(model.u_pos, order="F"),
            _le_f64_bytes(model.u_neg, order="F"),
            _le_f64_bytes(model.proj_mean_pos),
            _le_f64_bytes(model.proj_mean_neg),
        ]
    else:
        raise InvalidInputError(f"not a trained model: {type(model).__name__}")

    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, method, centered, cfg.height, cfg.width, cfg.channels, r
    )
    body = header + b"".join(arrays)
    payload = body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(payload)


def read_model_header(path) -> dict:
    """Parse and return just the fixed-size header fields of a model file."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ModelFormatError(f"model file truncated: {len(data)} bytes")
    magic, version, method, centered, h, w, c, r = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ModelFormatError(f"bad magic bytes {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format version {version} (supported: {FORMAT_VERSION})"
        )
    if method not in (_METHOD_MEAN, _METHOD_PCA):
        raise ModelFormatError(f"unknown method tag {method}")
    if centered not in (0, 1):
        raise ModelFormatError(f"centered flag must be 0 or 1, got {centered}")
    return {
        "magic": magic.decode("ascii"),
        "version": version,
        "method": "mean" if method == _METHOD_MEAN else "pca",
        "centered": bool(centered),
        "height": h,
        "width": w,
        "channels": c,
        "r": r,
        "file_bytes": len(data),
    }


def load_model(path):
    """Read a model file back into a :class:`MeanDistanceModel` or :class:`PcaDetectorModel`."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size + 4:
        raise ModelFormatError(f"model file truncated: {len(data)} bytes")
    magic, version, method, centered, h, w, c, r = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ModelFormatError(f"bad magic bytes {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format version {version} (supported: {FORMAT_VERSION})"
        )
    if method not in (_METHOD_MEAN, _METHOD_PCA):
        raise ModelFormatError(f"unknown method tag {method}")
    if centered not in (0, 1):
        raise ModelFormatError(f"centered flag must be 0 or 1, got {centered}")
    if c != 3:
        raise ModelFormatError(f"unsupported channel count {c}")
    if h < 1 or w < 1:
        raise ModelFormatError(f"bad image geometry {h}x{w}")
    if method == _METHOD_MEAN and r != 0:
        raise ModelFormatError(f"mean-method file must store r=0, got {r}")
    if method == _METHOD_PCA and r < 1:
        raise ModelFormatError(f"pca-method file must store r>=1, got {r}")

    n = h * w * c
    n_floats = 2 * n + (2 * n * r + 2 * r if method == _METHOD_PCA else 0)
    expected = _HEADER.size + 8 * n_floats + 4
    if len(data) != expected:
        raise ModelFormatError(
            f"model file is {len(data)} bytes, expected {expected} for its header"
        )

    stored_crc = struct.unpack("<I", data[-4:])[0]
    actual_crc = zlib.crc32(data[:-4]) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise ModelFormatError(
            f"CRC mismatch: stored {stored_crc:#010x}, computed {actual_crc:#010x}"
        )

    cfg = PixelConfig(height=h, width=w, channels=c)
    floats = np.frombuffer(data, dtype="<f8", count=n_floats, offset=_HEADER.size)
    pos = 0

    def take(count: int) -> np.ndarray:
        nonlocal pos
        out = floats[pos : pos + count].copy()
        pos += count
        return out

    mean_pos = take(n)
    mean_neg = take(n)
    if method == _METHOD_MEAN:
        return MeanDistanceModel(mean_pos=mean_pos, mean_neg=mean_neg, pixel_config=cfg)

    u_pos = take(n * r).reshape((n, r), order="F")
    u_neg = take(n * r).reshape((n, r), order="F")
    proj_mean_pos = take(r)
    proj_mean_neg = take(r)
    return PcaDetectorModel(
        mean_pos=mean_pos,
        mean_neg=mean_neg,
        u_pos=u_pos,
        u_neg=u_neg,
        proj_mean_pos=proj_mean_pos,
        proj_mean_neg=proj_mean_neg,
        r=r,
        centered=bool(centered),
        pixel_config=cfg,
    )
