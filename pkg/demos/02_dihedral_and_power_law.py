"""Offline augmentation: the x40 expansion of a single annotated image.

One source image goes through the 8 square symmetries and the 5-value
power-law intensity schedule (gamma in {3/4, 4/5, 1, 5/4, 4/3}, c = 1),
with its bounding boxes carried along exactly. The contact sheet written
at the end makes the geometry easy to eyeball.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from cellpipe.augment import (
    D4_ELEMENTS,
    apply_d4_box,
    default_power_law_schedule,
    expand,
    transform_pixels,
)
from cellpipe.model import Annotation, Dataset, ImageBuffer, ImageRecord
from cellpipe.synthetic import make_blob_image

OUT_DIR = Path(__file__).parent / "out"


def main():
    codes, regions = make_blob_image(96, 64, seed=20)
    image = ImageBuffer.from_uint8(codes)
    record = ImageRecord(image_id="demo.png", file_path="demo.png", width=96, height=64)
    dataset = Dataset(
        images=(record,),
        annotations=tuple(
            Annotation("demo.png", box, label) for box, label in regions
        ),
    )
    print(f"source image: {record.width}x{record.height}, {len(regions)} regions")

    augmented = expand(dataset)
    print(f"expanded to {len(augmented.dataset.images)} derived images "
          f"(8 symmetries x {len(default_power_law_schedule())} gammas)")

    # group structure: applying an element then its inverse restores every box
    for g in D4_ELEMENTS:
        for box, _ in regions:
            moved = apply_d4_box(box, g, 96, 64)
            gw, gh = g.output_size(96, 64)
            assert apply_d4_box(moved, g.inverse(), gw, gh) == box
    print("verified: g followed by g^-1 restores every box, for all 8 elements")

    OUT_DIR.mkdir(exist_ok=True)
    fig, axes = plt.subplots(5, 8, figsize=(18, 8))
    for variant in augmented.variants:
        pixels = transform_pixels(image, variant)
        row = list(default_power_law_schedule()).index(variant.params)
        col = variant.d4.index
        ax = axes[row][col]
        ax.imshow(pixels.pixels, vmin=0, vmax=1)
        for ann in augmented.dataset.annotations_for(variant.derived_image_id):
            b = ann.box
            ax.add_patch(
                plt.Rectangle(
                    (b.xmin, b.ymin), b.width, b.height, fill=False, edgecolor="red", lw=1
                )
            )
        if row == 0:
            ax.set_title(variant.d4.token, fontsize=8)
        if col == 0:
            ax.set_ylabel(f"γ={variant.params.gamma}", fontsize=8)
        ax.set_xticks([])
        ax.set_yticks([])
    sheet = OUT_DIR / "augmentation_contact_sheet.png"
    fig.savefig(sheet, dpi=110, bbox_inches="tight")
    print(f"wrote {sheet}")


if __name__ == "__main__":
    main()
