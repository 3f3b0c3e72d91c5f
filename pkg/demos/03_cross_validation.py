"""Reproduce the cross-validation set algebra on a synthetic 60-image set.

60 source images are partitioned into 5 non-overlapping folds of 12.
Each fold is expanded offline by x40, giving validation sets of 480
derived images and training unions of 1920 (4:1). The leakage check
confirms no validation image shares a source with any training image.
"""

from cellpipe.augment import expand
from cellpipe.crossval import build_split, fold_subset, leaked_sources, partition
from cellpipe.model import Annotation, BoundingBox, CellClass, Dataset, ImageRecord


def sixty_image_dataset() -> Dataset:
    images = []
    annotations = []
    for i in range(60):
        image_id = f"slide_{i:02d}.png"
        images.append(
            ImageRecord(image_id=image_id, file_path=image_id, width=64, height=64)
        )
        annotations.append(
            Annotation(
                image_id,
                BoundingBox(8 + i % 10, 8, 24 + i % 10, 24),
                list(CellClass)[i % 5],
            )
        )
    return Dataset(images=tuple(images), annotations=tuple(annotations))


def main():
    dataset = sixty_image_dataset()
    folds = partition(dataset, n=5, seed=42)
    sizes = folds.sizes()
    print(f"partitioned {len(dataset)} images into {folds.n} folds: "
          f"{[sizes[i] for i in range(1, 6)]} (seed {folds.seed})")

    augmented = {
        i: expand(fold_subset(dataset, folds, i), fold_index=i) for i in range(1, 6)
    }
    print(f"each fold expands to {len(augmented[1].dataset.images)} derived images")

    print(f"\n{'j':>3} {'|B_j|':>8} {'|A̅_j|':>8} {'ratio':>7} {'leaked sources':>15}")
    for j in range(1, 6):
        split = build_split(folds, augmented, j)
        n_train = len(split.training.dataset.images)
        n_val = len(split.validation.dataset.images)
        leaked = leaked_sources(split)
        print(f"{j:>3} {n_train:>8} {n_val:>8} {n_train // n_val}:1{'':>4} {len(leaked):>15}")

    print("\nevery source appears in exactly one validation fold:")
    seen = {}
    for j in range(1, 6):
        for source in build_split(folds, augmented, j).validation.source_image_ids:
            seen[source] = seen.get(source, 0) + 1
    print("  confirmed" if set(seen.values()) == {1} and len(seen) == 60 else "  VIOLATED")


if __name__ == "__main__":
    main()
