"""n-fold partitioning and leak-free training/validation set construction.

The source images are split into n non-overlapping folds; augmentation
runs per fold, and split j trains on the union of every augmented fold
except j while validating on augmented fold j. Because derived images
carry their source id, leakage is checkable at both granularities.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping

from .augment import AugmentedFold
from .model import Dataset, merge_datasets


@dataclass(frozen=True)
class FoldAssignment:
    """Image id -> fold index (1-based), plus the shuffle seed that made it.

    The assignment tuple is normalized to image-id order so two
    assignments with equal content compare equal and serialize
    identically.
    """

    n: int
    seed: int
    assignment: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        normalized = tuple(sorted(self.assignment))
        object.__setattr__(self, "assignment", normalized)
        ids = [image_id for image_id, _ in normalized]
        if len(set(ids)) != len(ids):
            raise ValueError("image assigned to more than one fold")
        folds = [fold for _, fold in normalized]
        if any(f < 1 or f > self.n for f in folds):
            raise ValueError("fold index outside 1..n")
        sizes = [folds.count(i) for i in range(1, self.n + 1)]
        if sizes and max(sizes) - min(sizes) > 1:
            raise ValueError(f"unbalanced folds: {sizes}")

    def as_dict(self) -> dict[str, int]:
        return dict(self.assignment)

    def fold_of(self, image_id: str) -> int:
        return self.as_dict()[image_id]

    def members(self, fold_index: int) -> tuple[str, ...]:
        """Image ids of one fold, in assignment order."""
        return tuple(i for i, f in self.assignment if f == fold_index)

    def sizes(self) -> dict[int, int]:
        out = {i: 0 for i in range(1, self.n + 1)}
        for _, f in self.assignment:
            out[f] += 1
        return out


def _dominant_class_token(dataset: Dataset, image_id: str) -> str:
    """Most frequent annotation class of an image; ties to the lowest token."""
    counts: dict[str, int] = {}
    for ann in dataset.annotations_for(image_id):
        counts[ann.label.token] = counts.get(ann.label.token, 0) + 1
    if not counts:
        return ""
    return min(counts, key=lambda token: (-counts[token], token))


def partition(
    dataset: Dataset, n: int, seed: int, stratify_by_class: bool = False
) -> FoldAssignment:
    """Seeded shuffle then round-robin: folds differ in size by at most 1.

    Deterministic for a fixed seed regardless of the dataset's image
    order (ids are sorted before shuffling). With ``stratify_by_class``,
    images are grouped by their dominant annotation class and each group
    is dealt round-robin, spreading every class as evenly as the counts
    allow while keeping the overall size law.
    """
    if n < 2:
        raise ValueError("need at least 2 folds")
    ids = sorted(dataset.image_ids)
    if n > len(ids):
        raise ValueError(f"cannot make {n} folds from {len(ids)} images")
    rng = random.Random(seed)
    if stratify_by_class:
        groups: dict[str, list[str]] = {}
        for image_id in ids:
            groups.setdefault(_dominant_class_token(dataset, image_id), []).append(image_id)
        order: list[str] = []
        for token in sorted(groups):
            rng.shuffle(groups[token])
            order.extend(groups[token])
    else:
        rng.shuffle(ids)
        order = ids
    return FoldAssignment(
        n=n,
        seed=seed,
        assignment=tuple((image_id, (i % n) + 1) for i, image_id in enumerate(order)),
    )


def fold_subset(dataset: Dataset, folds: FoldAssignment, fold_index: int) -> Dataset:
    """The sub-dataset of one fold (source images and their annotations)."""
    if not 1 <= fold_index <= folds.n:
        raise ValueError(f"fold index {fold_index} outside 1..{folds.n}")
    return dataset.subset(folds.members(fold_index))


@dataclass(frozen=True)
class Split:
    """One cross-validation round: validation fold j vs the rest."""

    j: int
    training: AugmentedFold
    validation: AugmentedFold


def build_split(
    folds: FoldAssignment, augmented: Mapping[int, AugmentedFold], j: int
) -> Split:
    """Training = union of augmented folds i != j, validation = fold j.

    Requires augmentation to have been applied per fold (each
    ``augmented[i]`` derived solely from fold i's images).
    """
    if not 1 <= j <= folds.n:
        raise ValueError(f"validation fold {j} outside 1..{folds.n}")
    missing = [i for i in range(1, folds.n + 1) if i not in augmented]
    if missing:
        raise ValueError(f"missing augmented folds: {missing}")

    train_folds = [augmented[i] for i in range(1, folds.n + 1) if i != j]
    training = AugmentedFold(
        dataset=merge_datasets(f.dataset for f in train_folds),
        variants=tuple(v for f in train_folds for v in f.variants),
        fold_index=None,
    )
    split = Split(j=j, training=training, validation=augmented[j])
    shared = leaked_sources(split)
    if shared:
        raise ValueError(f"leakage between training and validation: {sorted(shared)}")
    return split


def leaked_sources(split: Split) -> frozenset[str]:
    """Source image ids appearing on both sides of a split (empty = leak-free)."""
    return split.training.source_image_ids & split.validation.source_image_ids
