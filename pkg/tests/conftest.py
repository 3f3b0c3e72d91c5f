import random

import numpy as np
import pytest

from cellpipe.model import Annotation, BoundingBox, CellClass, Dataset, ImageRecord


@pytest.fixture
def rng():
    return random.Random(12345)


@pytest.fixture
def nprng():
    return np.random.default_rng(12345)


def random_box(rng, width=100, height=100, integer=False):
    """A valid random box inside a width x height frame.

    Continuous coordinates are dyadic (multiples of 1/64) so that
    reflections W - x stay exact in binary floating point, matching how
    integer-pixel annotations behave under the D4 transforms.
    """
    if integer:
        x0, x1 = sorted(rng.sample(range(0, width + 1), 2))
        y0, y1 = sorted(rng.sample(range(0, height + 1), 2))
        return BoundingBox(float(x0), float(y0), float(x1), float(y1))

    def dyadic(hi):
        return round(rng.uniform(0, hi) * 64) / 64.0

    x0, x1 = sorted(dyadic(width) for _ in range(2))
    y0, y1 = sorted(dyadic(height) for _ in range(2))
    if x1 - x0 < 1e-6:
        x1 = min(width, x0 + 1.0)
    if y1 - y0 < 1e-6:
        y1 = min(height, y0 + 1.0)
    return BoundingBox(x0, y0, x1, y1)


def tiny_dataset(n_images=3, per_image=2, width=100, height=80, seed=5):
    """Small in-memory dataset with deterministic boxes and labels."""
    rng = random.Random(seed)
    classes = list(CellClass)
    images = []
    annotations = []
    for i in range(n_images):
        image_id = f"img_{i:02d}.png"
        images.append(
            ImageRecord(
                image_id=image_id,
                file_path=image_id,
                width=width,
                height=height,
            )
        )
        for _ in range(per_image):
            annotations.append(
                Annotation(
                    image_id=image_id,
                    box=random_box(rng, width, height, integer=True),
                    label=rng.choice(classes),
                )
            )
    return Dataset(images=tuple(images), annotations=tuple(annotations))
