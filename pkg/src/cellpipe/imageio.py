"""8-bit PNG/TIFF reading and writing for ImageBuffer."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .model import ImageBuffer


def load_image(path: str | Path) -> ImageBuffer:
    """Load an 8-bit PNG or TIFF into a normalized buffer.

    Grayscale files become 1-channel buffers, color files 3-channel.
    Palette and alpha variants are converted to plain RGB first.
    """
    with Image.open(path) as img:
        if img.mode == "L":
            arr = np.asarray(img, dtype=np.uint8)[:, :, np.newaxis]
        elif img.mode == "RGB":
            arr = np.asarray(img, dtype=np.uint8)
        else:
            arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return ImageBuffer.from_uint8(arr)


def save_image(buf: ImageBuffer, path: str | Path) -> None:
    """Write a buffer as an 8-bit PNG or TIFF (by file extension)."""
    codes = buf.to_uint8()
    if buf.channels == 1:
        img = Image.fromarray(codes[:, :, 0], mode="L")
    else:
        img = Image.fromarray(codes, mode="RGB")
    img.save(path)
