"""Offline dataset expansion: D4 symmetries, power-law intensity, grayscale.

Spatial augmentation applies the dihedral group of the square (4
rotations + 4 reflections) to images and their boxes; intensity
augmentation applies ``o = c * i**gamma`` per channel on normalized
pixels. The full default schedule multiplies a fold by 8 * 5 = 40.

Conventions: rotations are counterclockwise in display orientation
(row 0 on top), FlipH mirrors across the vertical axis (x -> W - x).
All transforms are exact coordinate arithmetic; no resampling occurs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import Annotation, BoundingBox, Dataset, ImageBuffer, ImageRecord


class D4Element:
    """One symmetry of the square; the 8 instances form a group.

    Composition and inverses are table-driven (see CAYLEY_TABLE below);
    ``index`` fixes the canonical 0..7 ordering used for deterministic
    output listings.
    """

    __slots__ = ("index", "token", "swaps_axes")
    _registry: dict[str, "D4Element"] = {}

    def __init__(self, index: int, token: str, swaps_axes: bool):
        self.index = index
        self.token = token
        self.swaps_axes = swaps_axes
        D4Element._registry[token] = self

    @classmethod
    def from_token(cls, token: str) -> "D4Element":
        try:
            return cls._registry[token.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown D4 element {token!r}") from None

    def compose(self, other: "D4Element") -> "D4Element":
        """self after other: apply(self.compose(g), x) == apply(self, apply(g, x))."""
        return D4_ELEMENTS[CAYLEY_TABLE[self.index][other.index]]

    def inverse(self) -> "D4Element":
        return D4_ELEMENTS[_INVERSE[self.index]]

    def output_size(self, width: int, height: int) -> tuple[int, int]:
        return (height, width) if self.swaps_axes else (width, height)

    def map_point(self, x: float, y: float, width: float, height: float) -> tuple[float, float]:
        """Map a point of a width x height frame into the transformed frame."""
        w, h = width, height
        return _POINT_MAPS[self.index](x, y, w, h)

    def __repr__(self) -> str:
        return f"D4Element({self.token!r})"


_POINT_MAPS = (
    lambda x, y, w, h: (x, y),          # identity
    lambda x, y, w, h: (y, w - x),      # rot90
    lambda x, y, w, h: (w - x, h - y),  # rot180
    lambda x, y, w, h: (h - y, x),      # rot270
    lambda x, y, w, h: (w - x, y),      # fliph
    lambda x, y, w, h: (x, h - y),      # flipv
    lambda x, y, w, h: (y, x),          # transpose
    lambda x, y, w, h: (h - y, w - x),  # antitranspose
)

IDENTITY = D4Element(0, "identity", swaps_axes=False)
ROT90 = D4Element(1, "rot90", swaps_axes=True)
ROT180 = D4Element(2, "rot180", swaps_axes=False)
ROT270 = D4Element(3, "rot270", swaps_axes=True)
FLIP_H = D4Element(4, "fliph", swaps_axes=False)
FLIP_V = D4Element(5, "flipv", swaps_axes=False)
TRANSPOSE = D4Element(6, "transpose", swaps_axes=True)
ANTITRANSPOSE = D4Element(7, "antitranspose", swaps_axes=True)

D4_ELEMENTS: tuple[D4Element, ...] = (
    IDENTITY,
    ROT90,
    ROT180,
    ROT270,
    FLIP_H,
    FLIP_V,
    TRANSPOSE,
    ANTITRANSPOSE,
)

# CAYLEY_TABLE[g][h] = index of g∘h (h applied first). Row/column order
# follows D4_ELEMENTS. Derived from the point maps and frozen here; the
# test suite re-derives it by functional composition.
CAYLEY_TABLE: tuple[tuple[int, ...], ...] = (
    (0, 1, 2, 3, 4, 5, 6, 7),
    (1, 2, 3, 0, 6, 7, 5, 4),
    (2, 3, 0, 1, 5, 4, 7, 6),
    (3, 0, 1, 2, 7, 6, 4, 5),
    (4, 7, 5, 6, 0, 2, 3, 1),
    (5, 6, 4, 7, 2, 0, 1, 3),
    (6, 4, 7, 5, 1, 3, 0, 2),
    (7, 5, 6, 4, 3, 1, 2, 0),
)

_INVERSE = (0, 3, 2, 1, 4, 5, 6, 7)


def apply_d4_image(img: ImageBuffer, g: D4Element) -> ImageBuffer:
    """Permute the pixel grid by a square symmetry.

    Intensities are never altered, only moved; width and height swap for
    the axis-swapping elements.
    """
    a = img.pixels
    if g is IDENTITY:
        out = a
    elif g is ROT90:
        out = np.rot90(a, 1)
    elif g is ROT180:
        out = np.rot90(a, 2)
    elif g is ROT270:
        out = np.rot90(a, 3)
    elif g is FLIP_H:
        out = a[:, ::-1]
    elif g is FLIP_V:
        out = a[::-1, :]
    elif g is TRANSPOSE:
        out = np.swapaxes(a, 0, 1)
    else:  # ANTITRANSPOSE
        out = np.swapaxes(a, 0, 1)[::-1, ::-1]
    return ImageBuffer(np.ascontiguousarray(out))


def apply_d4_box(box: BoundingBox, g: D4Element, width: int, height: int) -> BoundingBox:
    """Map a box of a width x height image into the transformed frame.

    The two corners are mapped and re-sorted per axis; area is preserved
    exactly because every symmetry is a signed axis permutation.
    """
    x0, y0 = g.map_point(box.xmin, box.ymin, width, height)
    x1, y1 = g.map_point(box.xmax, box.ymax, width, height)
    return BoundingBox(min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1))


@dataclass(frozen=True)
class PowerLawParams:
    """Parameters of the intensity transform o = c * i**gamma.

    gamma is kept as an exact rational so derived-image ids and schedule
    bookkeeping stay exact; c defaults to 1, which preserves [0, 1].
    """

    gamma: Fraction
    c: float = 1.0

    def __post_init__(self) -> None:
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.c <= 0:
            raise ValueError("c must be positive")

    @property
    def gamma_token(self) -> str:
        g = Fraction(self.gamma)
        return f"g{g.numerator}x{g.denominator}"


#: the published intensity schedule: gamma in {3/4, 4/5, 1, 5/4, 4/3}, c = 1.
DEFAULT_GAMMAS: tuple[Fraction, ...] = (
    Fraction(3, 4),
    Fraction(4, 5),
    Fraction(1, 1),
    Fraction(5, 4),
    Fraction(4, 3),
)


def default_power_law_schedule() -> tuple[PowerLawParams, ...]:
    return tuple(PowerLawParams(gamma=g) for g in DEFAULT_GAMMAS)


def power_law(img: ImageBuffer, params: PowerLawParams, clamp: bool = False) -> ImageBuffer:
    """Apply o = c * i**gamma per pixel and channel.

    Inputs are normalized to [0, 1], so with c = 1 the output range is
    preserved for any gamma > 0. With c > 1 the transform can exceed 1;
    that is an error unless ``clamp`` is set.
    """
    if params.c > 1.0 and not clamp:
        raise ValueError(
            f"c={params.c} pushes intensities above 1; pass clamp=True to saturate"
        )
    gamma = float(params.gamma)
    if gamma == 1.0 and params.c == 1.0:
        return ImageBuffer(img.pixels.copy())
    out = params.c * np.power(img.pixels, gamma)
    if clamp:
        out = np.clip(out, 0.0, 1.0)
    return ImageBuffer(out)


LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def to_grayscale(img: ImageBuffer) -> ImageBuffer:
    """Reduce to one channel with the classical luma weights.

    Already single-channel input is returned unchanged (idempotent).
    """
    if img.channels == 1:
        return img
    w = np.asarray(LUMA_WEIGHTS, dtype=np.float64)
    gray = img.pixels @ w
    # weights sum to 1, but guard against float drift at the top end
    return ImageBuffer(np.clip(gray, 0.0, 1.0)[:, :, np.newaxis])


@dataclass(frozen=True)
class AugmentationVariant:
    """Provenance of one derived image: which source, which transforms."""

    source_image_id: str
    d4: D4Element
    params: PowerLawParams
    derived_image_id: str


def derived_image_id(source_image_id: str, g: D4Element, params: PowerLawParams) -> str:
    """Deterministic, human-auditable derived id: <src>__<d4>__g<num>x<den>."""
    return f"{source_image_id}__{g.token}__{params.gamma_token}"


@dataclass(frozen=True)
class AugmentedFold:
    """A fold after offline expansion: derived records, boxes, provenance.

    ``dataset`` holds the derived image records and transformed
    annotations; ``variants`` maps every derived image back to its
    source. ``fold_index`` is None for merged training unions.
    """

    dataset: Dataset
    variants: tuple[AugmentationVariant, ...]
    fold_index: int | None = None

    @property
    def source_image_ids(self) -> frozenset[str]:
        return frozenset(v.source_image_id for v in self.variants)

    def variant_for(self, derived_id: str) -> AugmentationVariant:
        for v in self.variants:
            if v.derived_image_id == derived_id:
                return v
        raise KeyError(f"no variant for {derived_id!r}")


def expand(
    fold: Dataset,
    d4_schedule=D4_ELEMENTS,
    power_schedule: tuple[PowerLawParams, ...] | None = None,
    fold_index: int | None = None,
) -> AugmentedFold:
    """Expand a fold by the Cartesian product of spatial x intensity variants.

    Pure bookkeeping: derived records and transformed boxes are computed
    here; pixel materialization is a separate step (:func:`materialize`).
    Output ordering is (source id in fold order, d4 index, gamma index),
    so the listing is deterministic regardless of how callers
    parallelize the pixel work. Cardinality is
    ``len(fold) * len(d4_schedule) * len(power_schedule)``.
    """
    if len(fold.images) == 0:
        raise ValueError("cannot expand an empty fold")
    d4s = tuple(d4_schedule)
    powers = tuple(power_schedule if power_schedule is not None else default_power_law_schedule())
    if not d4s or not powers:
        raise ValueError("augmentation schedule must be non-empty")

    records: list[ImageRecord] = []
    annotations: list[Annotation] = []
    variants: list[AugmentationVariant] = []
    for rec in fold.images:
        source_anns = fold.annotations_for(rec.image_id)
        for g in d4s:
            new_w, new_h = g.output_size(rec.width, rec.height)
            moved = [
                apply_d4_box(ann.box, g, rec.width, rec.height) for ann in source_anns
            ]
            for params in powers:
                new_id = derived_image_id(rec.image_id, g, params)
                records.append(
                    ImageRecord(
                        image_id=new_id,
                        file_path=f"{new_id}.png",
                        width=new_w,
                        height=new_h,
                        colorspace=rec.colorspace,
                    )
                )
                annotations.extend(
                    Annotation(image_id=new_id, box=box, label=ann.label)
                    for ann, box in zip(source_anns, moved)
                )
                variants.append(
                    AugmentationVariant(
                        source_image_id=rec.image_id,
                        d4=g,
                        params=params,
                        derived_image_id=new_id,
                    )
                )

    return AugmentedFold(
        dataset=Dataset(images=tuple(records), annotations=tuple(annotations)),
        variants=tuple(variants),
        fold_index=fold_index,
    )


def transform_pixels(img: ImageBuffer, variant: AugmentationVariant) -> ImageBuffer:
    """Pixel content of one derived image (spatial first, then intensity)."""
    return power_law(apply_d4_image(img, variant.d4), variant.params)
