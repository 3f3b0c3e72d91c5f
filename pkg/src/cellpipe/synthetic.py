"""Synthetic blob fixtures: images whose ground truth is known by construction.

Each image is a light background with dark axis-aligned rectangles
placed on a coarse grid so they never touch. Small rectangles are
labeled with the blob detector's "single" class, large ones with its
"cluster" class, which lets the classical baseline run the whole
pipeline with a meaningful (and deterministic) accuracy.
"""

from __future__ import annotations

import random
from pathlib import Path

import numpy as np

from .annotations import write_csv
from .imageio import save_image
from .model import Annotation, BoundingBox, CellClass, Dataset, ImageBuffer, ImageRecord

BACKGROUND_LEVEL = 230
BLOB_LEVEL = 40


def make_blob_image(
    width: int,
    height: int,
    seed: int,
    single_class: CellClass = CellClass.SINGLE_CANCER_CELL,
    cluster_class: CellClass = CellClass.CANCER_CLUSTER,
) -> tuple[np.ndarray, list[tuple[BoundingBox, CellClass]]]:
    """One synthetic image as uint8 RGB plus its ground-truth regions.

    The grid has 2x2 cells; each cell independently hosts one blob with
    probability 3/4. Blob sides are 6..10 px for singles and 16..20 px
    for clusters (areas <100 and >=256 respectively, matching the
    default blob-detector size boundary of 200 px^2).
    """
    rng = random.Random(seed)
    codes = np.full((height, width, 3), BACKGROUND_LEVEL, dtype=np.uint8)
    regions: list[tuple[BoundingBox, CellClass]] = []
    cell_w, cell_h = width // 2, height // 2

    def place(gx: int, gy: int, is_cluster: bool) -> None:
        side_w = rng.randint(16, 20) if is_cluster else rng.randint(6, 10)
        side_h = rng.randint(16, 20) if is_cluster else rng.randint(6, 10)
        max_x0 = cell_w - side_w - 4
        max_y0 = cell_h - side_h - 4
        if max_x0 < 2 or max_y0 < 2:
            return
        x0 = gx * cell_w + rng.randint(2, max_x0)
        y0 = gy * cell_h + rng.randint(2, max_y0)
        codes[y0 : y0 + side_h, x0 : x0 + side_w, :] = BLOB_LEVEL
        label = cluster_class if is_cluster else single_class
        regions.append(
            (BoundingBox(float(x0), float(y0), float(x0 + side_w), float(y0 + side_h)), label)
        )

    for gy in range(2):
        for gx in range(2):
            if rng.random() < 0.25:
                continue
            place(gx, gy, is_cluster=rng.random() < 0.4)
    if not regions:
        place(0, 0, is_cluster=False)  # every image must carry ground truth
    return codes, regions


def build_blob_dataset(
    out_dir: str | Path,
    n_images: int = 60,
    width: int = 64,
    height: int = 64,
    seed: int = 7,
) -> Dataset:
    """Write n synthetic PNGs plus a canonical annotations.csv; return the Dataset."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    images: list[ImageRecord] = []
    annotations: list[Annotation] = []
    for i in range(n_images):
        image_id = f"blob_{i:03d}.png"
        codes, regions = make_blob_image(width, height, seed=seed * 100_003 + i)
        save_image(ImageBuffer.from_uint8(codes), out / image_id)
        images.append(
            ImageRecord(
                image_id=image_id,
                file_path=image_id,
                width=width,
                height=height,
                colorspace="rgb",
            )
        )
        annotations.extend(
            Annotation(image_id=image_id, box=box, label=label) for box, label in regions
        )
    dataset = Dataset(images=tuple(images), annotations=tuple(annotations))
    (out / "annotations.csv").write_text(write_csv(dataset), encoding="utf-8")
    return dataset
