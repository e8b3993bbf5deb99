"""Image ingestion: directory scans, split manifests, decoding, matrix assembly.

Manifests are JSON-lines files: a header object carrying the shuffle seed,
creation time, and a content hash, followed by one ``{"path", "label",
"split"}`` object per sample. Paths are stored relative to the manifest's
directory so a dataset tree can be moved wholesale.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, IngestError, InvalidInputError, ShapeError

POSITIVE = "positive"
NEGATIVE = "negative"
LABELS = (POSITIVE, NEGATIVE)
SPLITS = ("train", "validation", "test")

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp"}

_MANIFEST_FORMAT = "eigenderm-manifest"
_MANIFEST_VERSION = 1


@dataclass(frozen=True)
class PixelConfig:
    """Decoding contract: expected raster shape plus normalization/resize policy."""

    height: int = 512
    width: int = 512
    channels: int = 3
    normalization: str = "unit_interval"
    resize_policy: str = "reject"

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise InvalidInputError("height and width must be positive")
        if self.channels != 3:
            raise InvalidInputError("only 3-channel RGB input is supported")
        if self.normalization != "unit_interval":
            raise InvalidInputError(f"unknown normalization {self.normalization!r}")
        if self.resize_policy not in ("reject", "bilinear"):
            raise InvalidInputError(f"unknown resize policy {self.resize_policy!r}")

    @property
    def dim(self) -> int:
        return self.height * self.width * self.channels


@dataclass(frozen=True)
class SampleRecord:
    path: str
    label: str
    split: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise InvalidInputError(f"unknown label {self.label!r}")
        if self.split not in SPLITS:
            raise InvalidInputError(f"unknown split {self.split!r}")


@dataclass(frozen=True)
class Manifest:
    """Ordered sample listing with the seed that produced its split assignment."""

    records: tuple[SampleRecord, ...]
    created_at: str
    seed: int

    def __post_init__(self):
        seen = set()
        for rec in self.records:
            if rec.path in seen:
                raise InvalidInputError(f"duplicate path in manifest: {rec.path}")
            seen.add(rec.path)

    def count(self, label: str | None = None, split: str | None = None) -> int:
        return sum(
            1
            for r in self.records
            if (label is None or r.label == label)
            and (split is None or r.split == split)
        )

    def select(self, split: str, label: str | None = None) -> list[SampleRecord]:
        return [
            r
            for r in self.records
            if r.split == split and (label is None or r.label == label)
        ]


@dataclass(frozen=True)
class LabeledMatrix:
    """Column-stacked image vectors for one class with per-column provenance."""

    matrix: np.ndarray  # (height*width*channels, n_samples)
    labels: tuple[str, ...]
    paths: tuple[str, ...]

    def __post_init__(self):
        n = self.matrix.shape[1]
        if len(self.labels) != n or len(self.paths) != n:
            raise InvalidInputError(
                "labels and paths must have one entry per matrix column"
            )


def scan_directory(root, label: str, split: str) -> list[SampleRecord]:
    """Recursively collect image files under ``root``, sorted by absolute path."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"not a readable directory: {root}")
    paths = [
        os.path.abspath(p)
        for p in root.rglob("*")
        if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS
    ]
    return [SampleRecord(path=p, label=label, split=split) for p in sorted(paths)]


def build_split_manifest(
    records, train_count: int, val_count: int, seed: int
) -> Manifest:
    """Shuffle ``records`` deterministically by ``seed`` and assign splits.

    The first ``train_count`` shuffled records become the train split and
    the next ``val_count`` the validation split; any remainder is omitted.
    """
    records = list(records)
    if train_count < 0 or val_count < 0:
        raise InvalidInputError("split counts must be nonnegative")
    if train_count + val_count > len(records):
        raise InvalidInputError(
            f"requested {train_count}+{val_count} samples "
            f"but only {len(records)} are available"
        )
    for rec in records:
        if not os.path.isfile(rec.path):
            raise InvalidInputError(f"manifest source file missing: {rec.path}")

    perm = np.random.default_rng(seed).permutation(len(records))
    assigned = []
    for rank, idx in enumerate(perm[: train_count + val_count]):
        split = "train" if rank < train_count else "validation"
        assigned.append(replace(records[idx], split=split))
    return Manifest(records=tuple(assigned), created_at=_utc_now(), seed=seed)


def manifest_from_records(records, seed: int) -> Manifest:
    """Wrap already-assigned records (e.g. an external test set) in a manifest."""
    records = tuple(records)
    for rec in records:
        if not os.path.isfile(rec.path):
            raise InvalidInputError(f"manifest source file missing: {rec.path}")
    return Manifest(records=records, created_at=_utc_now(), seed=seed)


def merge_manifests(*manifests: Manifest) -> Manifest:
    """Concatenate manifests built with the same seed (e.g. one per class)."""
    if not manifests:
        raise InvalidInputError("nothing to merge")
    seeds = {m.seed for m in manifests}
    if len(seeds) != 1:
        raise InvalidInputError(f"cannot merge manifests with mixed seeds {sorted(seeds)}")
    records = tuple(r for m in manifests for r in m.records)
    return Manifest(
        records=records, created_at=manifests[0].created_at, seed=manifests[0].seed
    )


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _record_lines(manifest: Manifest, base_dir: str) -> list[str]:
    lines = []
    for rec in manifest.records:
        rel = Path(os.path.relpath(rec.path, base_dir)).as_posix()
        lines.append(
            json.dumps(
                {"path": rel, "label": rec.label, "split": rec.split},
                sort_keys=True,
            )
        )
    return lines


def save_manifest(manifest: Manifest, path) -> None:
    """Write a manifest as JSON lines; paths become relative to the file's directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    base_dir = str(path.parent.resolve())
    lines = _record_lines(manifest, base_dir)
    digest = hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()
    header = {
        "format": _MANIFEST_FORMAT,
        "version": _MANIFEST_VERSION,
        "seed": manifest.seed,
        "created_at": manifest.created_at,
        "content_hash": digest,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for line in lines:
            fh.write(line + "\n")


def load_manifest(path) -> Manifest:
    """Read a manifest written by :func:`save_manifest`, resolving paths."""
    path = Path(path)
    base_dir = str(path.parent.resolve())
    with open(path, "r", encoding="utf-8") as fh:
        raw_lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not raw_lines:
        raise InvalidInputError(f"empty manifest file: {path}")
    try:
        header = json.loads(raw_lines[0])
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"malformed manifest header: {exc}") from exc
    if header.get("format") != _MANIFEST_FORMAT:
        raise InvalidInputError(f"not a manifest file: {path}")
    if header.get("version") != _MANIFEST_VERSION:
        raise InvalidInputError(
            f"unsupported manifest version {header.get('version')!r}"
        )

    digest = hashlib.sha256("\n".join(raw_lines[1:]).encode("utf-8")).hexdigest()
    if digest != header.get("content_hash"):
        raise InvalidInputError(f"manifest content hash mismatch: {path}")

    records = []
    for ln in raw_lines[1:]:
        obj = json.loads(ln)
        abs_path = os.path.normpath(os.path.join(base_dir, obj["path"]))
        records.append(
            SampleRecord(path=abs_path, label=obj["label"], split=obj["split"])
        )
    return Manifest(
        records=tuple(records),
        created_at=header["created_at"],
        seed=int(header["seed"]),
    )


def decode_and_flatten(path, cfg: PixelConfig) -> np.ndarray:
    """Decode one image to a flat float64 vector in [0, 1].

    Pixel (row y, col x, channel c) lands at flat index ``(y*W + x)*C + c``.
    Dimension mismatches follow ``cfg.resize_policy``: bilinear resample or
    reject with :class:`ShapeError`.
    """
    try:
        with Image.open(path) as img:
            rgb = img.convert("RGB")
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc

    if (rgb.height, rgb.width) != (cfg.height, cfg.width):
        if cfg.resize_policy == "reject":
            raise ShapeError(
                f"{path}: got {rgb.height}x{rgb.width}, "
                f"expected {cfg.height}x{cfg.width} (resize policy is 'reject')"
            )
        rgb = rgb.resize((cfg.width, cfg.height), Image.Resampling.BILINEAR)

    arr = np.asarray(rgb, dtype=np.float64)  # (H, W, 3), C-order
    return arr.reshape(-1) / 255.0


def build_labeled_matrix(
    manifest: Manifest,
    split: str,
    label: str,
    cfg: PixelConfig,
    workers: int = 1,
) -> LabeledMatrix:
    """Decode every (split, label) sample into the columns of one matrix.

    Columns follow manifest order. Decoding may run on several workers; each
    column is written independently by sample index, so the result is
    identical for any worker count. All decode failures are aggregated into
    a single :class:`IngestError` naming the offending paths.
    """
    if split not in SPLITS:
        raise InvalidInputError(f"unknown split {split!r}")
    if label not in LABELS:
        raise InvalidInputError(f"unknown label {label!r}")
    records = manifest.select(split, label)
    if not records:
        raise InvalidInputError(f"no {label!r} samples in split {split!r}")

    matrix = np.empty((cfg.dim, len(records)), dtype=np.float64)
    failures: list[tuple[str, str]] = []

    def decode_into(i: int) -> None:
        try:
            matrix[:, i] = decode_and_flatten(records[i].path, cfg)
        except (DecodeError, ShapeError) as exc:
            failures.append((records[i].path, str(exc)))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(decode_into, range(len(records))))
    else:
        for i in range(len(records)):
            decode_into(i)

    if failures:
        failures.sort()
        raise IngestError(
            f"{len(failures)} of {len(records)} files failed to decode:\n"
            + "\n".join(msg for _, msg in failures),
            paths=[p for p, _ in failures],
        )
    return LabeledMatrix(
        matrix=matrix,
        labels=tuple(r.label for r in records),
        paths=tuple(r.path for r in records),
    )
