import hashlib
import json

import numpy as np
import pytest
from PIL import Image


def write_manifest(path, records, seed=0):
    """Write records in the shared manifest wire format (paths made relative)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for rec_path, label, split in records:
        rel = str(rec_path.relative_to(path.parent))
        lines.append(json.dumps({"path": rel, "label": label, "split": split},
                                sort_keys=True))
    header = {
        "format": "eigenderm-manifest",
        "version": 1,
        "seed": seed,
        "created_at": "2024-01-01T00:00:00+00:00",
        "content_hash": hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for line in lines:
            fh.write(line + "\n")
    return path


def make_image(path, gray, size=32, jitter=0, rng=None):
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = np.full((size, size, 3), gray, dtype=np.int16)
    if jitter and rng is not None:
        pixels = pixels + rng.integers(-jitter, jitter + 1, size=pixels.shape)
    Image.fromarray(np.clip(pixels, 0, 255).astype(np.uint8), mode="RGB").save(path)
    return path


@pytest.fixture(scope="session")
def sixteen_image_manifest(tmp_path_factory):
    """16 synthetic samples: 12 train + 4 validation, dark positives vs bright negatives."""
    root = tmp_path_factory.mktemp("synth16")
    rng = np.random.default_rng(99)
    records = []
    counter = 0
    for label, gray in (("positive", 60), ("negative", 190)):
        for split, count in (("train", 6), ("validation", 2)):
            for _ in range(count):
                img = make_image(root / f"{label}_{counter:02d}.png", gray,
                                 jitter=25, rng=rng)
                records.append((img, label, split))
                counter += 1
    return write_manifest(root / "manifest.jsonl", records)
