import numpy as np
import pytest
from PIL import Image


def write_png(path, pixels: np.ndarray) -> str:
    """Write an (H, W, 3) uint8 array as a PNG and return its path string."""
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(pixels, dtype=np.uint8), mode="RGB").save(path)
    return str(path)


def solid_png(path, height: int, width: int, rgb) -> str:
    pixels = np.zeros((height, width, 3), dtype=np.uint8)
    pixels[:, :] = rgb
    return write_png(path, pixels)


@pytest.fixture
def rng():
    return np.random.default_rng(20240612)
