"""Shared domain types: boxes, labels, image records, datasets and pixel buffers.

Coordinate conventions used everywhere in this package:

* pixel coordinates are continuous, origin at the top-left corner,
  x grows rightward, y grows downward;
* a bounding box ``(xmin, ymin, xmax, ymax)`` has an exclusive max edge,
  so a box covering a full W x H image is ``(0, 0, W, H)``;
* pixel intensities are stored normalized to [0, 1] (8-bit codes map
  via v / 255 on load and round-half-up on write).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class CellPipeError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(CellPipeError, ValueError):
    """Malformed annotation, manifest or config content."""


class CellClass(Enum):
    """The five region labels, in the order annotators were given them."""

    SINGLE_CANCER_CELL = "Single_cancer_cell"
    CANCER_CLUSTER = "Cancer_cluster"
    SINGLE_MSC_CELL = "Single_MSC_cell"
    MSC_CLUSTER = "MSC_cluster"
    ARTIFACT = "Artifact"

    @property
    def token(self) -> str:
        """Serialized form used in CSV, XML and manifests."""
        return self.value

    @classmethod
    def from_token(cls, text: str) -> "CellClass":
        """Parse a serialized class name.

        Surrounding whitespace is trimmed; anything other than the five
        known tokens is an error (closed enumeration).
        """
        token = text.strip()
        for member in cls:
            if member.value == token:
                return member
        raise FormatError(f"unknown class name: {text!r}")


#: class -> contiguous integer id, 1-based (0 is reserved for background).
def label_map() -> dict[CellClass, int]:
    """Return the canonical class-id mapping (1..5, enumeration order)."""
    return {member: i for i, member in enumerate(CellClass, start=1)}


BACKGROUND_ID = 0


@dataclass(frozen=True, order=True)
class BoundingBox:
    """Axis-aligned rectangle in pixel coordinates, exclusive max edge."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self) -> None:
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError(
                f"degenerate box: ({self.xmin}, {self.ymin}, {self.xmax}, {self.ymax})"
            )

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))

    def within(self, width: float, height: float) -> bool:
        """True when the box lies inside a width x height image."""
        return 0 <= self.xmin and 0 <= self.ymin and self.xmax <= width and self.ymax <= height

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.xmin, self.ymin, self.xmax, self.ymax)


def box_area(box: BoundingBox) -> float:
    """Area of a box; strictly positive by construction."""
    return (box.xmax - box.xmin) * (box.ymax - box.ymin)


def intersect(a: BoundingBox, b: BoundingBox) -> BoundingBox | None:
    """Overlap rectangle of two boxes, or None when they are disjoint.

    Boxes that merely touch along an edge count as disjoint (the shared
    edge has zero area).
    """
    xmin = max(a.xmin, b.xmin)
    ymin = max(a.ymin, b.ymin)
    xmax = min(a.xmax, b.xmax)
    ymax = min(a.ymax, b.ymax)
    if xmin >= xmax or ymin >= ymax:
        return None
    return BoundingBox(xmin, ymin, xmax, ymax)


VALID_COLORSPACES = ("rgb", "mono", "gray")


@dataclass(frozen=True)
class ImageRecord:
    """Identity and pixel geometry of one dataset image."""

    image_id: str
    file_path: str
    width: int
    height: int
    colorspace: str = "rgb"

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"non-positive image size for {self.image_id!r}")
        if self.colorspace not in VALID_COLORSPACES:
            raise ValueError(f"unknown colorspace {self.colorspace!r}")


@dataclass(frozen=True)
class Annotation:
    """One labeled rectangular region on one image."""

    image_id: str
    box: BoundingBox
    label: CellClass


@dataclass(frozen=True)
class Dataset:
    """A set of images plus their labeled regions.

    Invariants enforced at construction: image ids are unique, every
    annotation references an existing image, and every box lies inside
    its image.
    """

    images: tuple[ImageRecord, ...]
    annotations: tuple[Annotation, ...]
    _by_id: dict[str, ImageRecord] = field(
        init=False, repr=False, compare=False, hash=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        by_id: dict[str, ImageRecord] = {}
        for rec in self.images:
            if rec.image_id in by_id:
                raise ValueError(f"duplicate image_id {rec.image_id!r}")
            by_id[rec.image_id] = rec
        for ann in self.annotations:
            rec = by_id.get(ann.image_id)
            if rec is None:
                raise ValueError(f"annotation references unknown image {ann.image_id!r}")
            if not ann.box.within(rec.width, rec.height):
                raise ValueError(
                    f"box {ann.box.as_tuple()} outside image {ann.image_id!r} "
                    f"({rec.width}x{rec.height})"
                )
        object.__setattr__(self, "_by_id", by_id)

    def __len__(self) -> int:
        return len(self.images)

    @property
    def image_ids(self) -> tuple[str, ...]:
        return tuple(rec.image_id for rec in self.images)

    def image(self, image_id: str) -> ImageRecord:
        try:
            return self._by_id[image_id]
        except KeyError:
            raise KeyError(f"no image {image_id!r} in dataset") from None

    def annotations_for(self, image_id: str) -> tuple[Annotation, ...]:
        return tuple(a for a in self.annotations if a.image_id == image_id)

    def class_counts(self) -> dict[CellClass, int]:
        counts = {member: 0 for member in CellClass}
        for ann in self.annotations:
            counts[ann.label] += 1
        return counts

    def subset(self, image_ids) -> "Dataset":
        """New Dataset restricted to the given image ids (order preserved)."""
        wanted = set(image_ids)
        missing = wanted - set(self._by_id)
        if missing:
            raise KeyError(f"unknown image ids: {sorted(missing)}")
        return Dataset(
            images=tuple(r for r in self.images if r.image_id in wanted),
            annotations=tuple(a for a in self.annotations if a.image_id in wanted),
        )


def merge_datasets(datasets) -> Dataset:
    """Union of datasets with disjoint image ids."""
    images: list[ImageRecord] = []
    annotations: list[Annotation] = []
    for d in datasets:
        images.extend(d.images)
        annotations.extend(d.annotations)
    return Dataset(images=tuple(images), annotations=tuple(annotations))


class ImageBuffer:
    """In-memory image: float64 pixels in [0, 1], shape (height, width, channels).

    Channel count is 1 (mono/gray) or 3 (rgb). Values are kept at full
    precision in memory; quantization back to 8 bits happens only on file
    write (see :mod:`cellpipe.imageio`).
    """

    __slots__ = ("pixels",)

    def __init__(self, pixels: np.ndarray):
        arr = np.asarray(pixels, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"expected (H, W, 1|3) pixel grid, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("empty image")
        if float(arr.min()) < 0.0 or float(arr.max()) > 1.0:
            raise ValueError("intensities outside [0, 1]")
        self.pixels = arr

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @classmethod
    def from_uint8(cls, codes: np.ndarray) -> "ImageBuffer":
        """Normalize 8-bit codes to [0, 1] by exact division by 255."""
        return cls(np.asarray(codes, dtype=np.float64) / 255.0)

    def to_uint8(self) -> np.ndarray:
        """Quantize to 8-bit codes with round-half-up.

        Inverse of :meth:`from_uint8` on values that came from 8-bit
        files, which makes load-then-save byte-exact.
        """
        return np.floor(self.pixels * 255.0 + 0.5).astype(np.uint8)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and np.array_equal(
            self.pixels, other.pixels
        )

    def __repr__(self) -> str:
        return f"ImageBuffer({self.width}x{self.height}, channels={self.channels})"
