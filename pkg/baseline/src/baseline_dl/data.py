"""Reading the shared manifest format and turning records into tensors.

The manifest is the wire format of the companion statistical toolkit: a
JSON-lines file whose header carries ``format: eigenderm-manifest`` and
whose records are ``{"path", "label", "split"}`` with paths relative to the
manifest's directory. This module only consumes that format; nothing here
imports the companion package.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import torch
from PIL import Image
from torch.utils.data import Dataset
from torchvision import transforms

POSITIVE = "positive"
NEGATIVE = "negative"
LABEL_TO_INDEX = {NEGATIVE: 0, POSITIVE: 1}

# normalization constants of the backbone's pretraining corpus
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

MANIFEST_FORMAT = "eigenderm-manifest"


@dataclass(frozen=True)
class ManifestRecord:
    path: str
    label: str
    split: str


def read_manifest(path) -> list[ManifestRecord]:
    """Parse a manifest file, resolving record paths against its directory."""
    path = Path(path)
    base = path.parent.resolve()
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"empty manifest: {path}")
    header = json.loads(lines[0])
    if header.get("format") != MANIFEST_FORMAT:
        raise ValueError(f"not a manifest file: {path}")
    records = []
    for ln in lines[1:]:
        obj = json.loads(ln)
        records.append(
            ManifestRecord(
                path=os.path.normpath(os.path.join(base, obj["path"])),
                label=obj["label"],
                split=obj["split"],
            )
        )
    return records


def split_records(records, split: str) -> list[ManifestRecord]:
    return [r for r in records if r.split == split]


def source_image_size(records) -> tuple[int, int]:
    """(height, width) of the first record's image; the training geometry."""
    if not records:
        raise ValueError("no records to probe")
    with Image.open(records[0].path) as img:
        return img.height, img.width


class ManifestImageDataset(Dataset):
    """Decoded, resized, normalized samples for one split."""

    def __init__(self, records, input_size: int):
        self.records = list(records)
        self.transform = transforms.Compose(
            [
                transforms.Resize((input_size, input_size)),
                transforms.ToTensor(),
                transforms.Normalize(IMAGENET_MEAN, IMAGENET_STD),
            ]
        )

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, idx):
        record = self.records[idx]
        with Image.open(record.path) as img:
            tensor = self.transform(img.convert("RGB"))
        return tensor, torch.tensor(LABEL_TO_INDEX[record.label], dtype=torch.long)
