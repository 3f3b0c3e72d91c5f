"""Pluggable detectors: a classical blob baseline and a ground-truth perturber.

The deep classification network is deliberately out of scope; the
``Detector`` protocol is the seam where it would plug in. The blob
detector exercises the pipeline on synthetic fixtures; the perturbation
detector corrupts ground truth in controlled, seeded ways so the
evaluation module can be validated against known error rates.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np
from scipy import ndimage

from .augment import to_grayscale
from .geometry import ScoredBox
from .model import Annotation, BoundingBox, CellClass, Dataset, ImageBuffer


class Detector(Protocol):
    """Behavioral contract every detector satisfies.

    detect() must be deterministic for fixed construction parameters,
    return scores in [0, 1], and clip boxes to the image. The image id
    is passed so oracle detectors can resolve per-image state; pixel
    detectors are free to ignore it.
    """

    name: str

    def detect(self, image: ImageBuffer, image_id: str) -> list[ScoredBox]: ...


def otsu_threshold(histogram: Sequence[int] | np.ndarray) -> int:
    """Threshold level maximizing between-class variance on a 256-bin histogram.

    Level t splits codes into {0..t} and {t+1..255}; only splits with
    both sides non-empty compete, and ties go to the lowest level. A
    histogram whose mass sits in a single bin has no valid split and
    returns that bin's index.
    """
    hist = np.asarray(histogram, dtype=np.float64)
    if hist.shape != (256,):
        raise ValueError("expected a 256-bin histogram")
    if hist.sum() <= 0:
        raise ValueError("empty histogram")

    nonzero = np.nonzero(hist)[0]
    if len(nonzero) == 1:
        return int(nonzero[0])

    levels = np.arange(256, dtype=np.float64)
    total = hist.sum()
    cum_w = np.cumsum(hist)
    cum_mean = np.cumsum(hist * levels)
    grand_mean = cum_mean[-1] / total

    w0 = cum_w / total
    w1 = 1.0 - w0
    valid = (w0 > 0) & (w1 > 0)
    mu0 = np.divide(cum_mean / total, w0, out=np.zeros(256), where=valid)
    mu1 = np.divide(grand_mean - cum_mean / total, w1, out=np.zeros(256), where=valid)
    between = np.where(valid, w0 * w1 * (mu0 - mu1) ** 2, -np.inf)
    return int(np.argmax(between))  # argmax returns the first (lowest) maximizer


def connected_components(binary_mask: np.ndarray) -> list[np.ndarray]:
    """8-connected components of a {0,1} mask.

    Returns one (n, 2) array of (row, col) pixel coordinates per
    component, pixels in raster order, components ordered by their
    topmost-leftmost pixel.
    """
    mask = np.asarray(binary_mask)
    if mask.ndim != 2:
        raise ValueError("mask must be 2-D")
    labeled, count = ndimage.label(mask != 0, structure=np.ones((3, 3), dtype=int))
    components = []
    for lbl in range(1, count + 1):
        rows, cols = np.nonzero(labeled == lbl)
        order = np.lexsort((cols, rows))
        components.append(np.stack([rows[order], cols[order]], axis=1))
    components.sort(key=lambda px: (int(px[0, 0]), int(px[0, 1])))
    return components


@dataclass(frozen=True)
class BlobDetectorParams:
    """Classical baseline knobs.

    The baseline cannot tell cell types apart from geometry alone, so it
    labels purely by size: components smaller than cluster_area_px get
    ``single_class``, the rest ``cluster_class``.
    """

    threshold_mode: str = "otsu"  # "otsu" or "fixed"
    fixed_level: int | None = None
    min_area_px: int = 20
    cluster_area_px: int = 200
    polarity: str = "dark_on_light"  # or "light_on_dark"
    single_class: CellClass = CellClass.SINGLE_CANCER_CELL
    cluster_class: CellClass = CellClass.CANCER_CLUSTER

    def __post_init__(self) -> None:
        if self.threshold_mode not in ("otsu", "fixed"):
            raise ValueError(f"unknown threshold mode {self.threshold_mode!r}")
        if self.threshold_mode == "fixed" and not (
            isinstance(self.fixed_level, int) and 0 <= self.fixed_level <= 255
        ):
            raise ValueError("fixed threshold mode needs fixed_level in 0..255")
        if self.polarity not in ("dark_on_light", "light_on_dark"):
            raise ValueError(f"unknown polarity {self.polarity!r}")
        if not 0 < self.min_area_px < self.cluster_area_px:
            raise ValueError("need 0 < min_area_px < cluster_area_px")


def blob_detect(image: ImageBuffer, params: BlobDetectorParams) -> list[ScoredBox]:
    """Threshold + connected components + tight boxes.

    Pipeline: grayscale, quantize to 8-bit codes, threshold (Otsu or
    fixed), binarize by polarity (dark_on_light keeps codes <= level),
    drop components below min_area_px, emit their tight bounding boxes.
    Score is min(1, area / (2 * cluster_area_px)) - a heuristic;
    evaluation relies only on score ordering.
    """
    gray = to_grayscale(image)
    codes = gray.to_uint8()[:, :, 0]
    if codes.min() == codes.max():
        return []  # constant image: nothing to separate from background

    if params.threshold_mode == "fixed":
        level = params.fixed_level
    else:
        histogram = np.bincount(codes.ravel(), minlength=256)
        level = otsu_threshold(histogram)

    if params.polarity == "dark_on_light":
        mask = codes <= level
    else:
        mask = codes > level

    detections: list[ScoredBox] = []
    for pixels in connected_components(mask):
        area = len(pixels)
        if area < params.min_area_px:
            continue
        rows = pixels[:, 0]
        cols = pixels[:, 1]
        box = BoundingBox(
            float(cols.min()),
            float(rows.min()),
            float(cols.max() + 1),
            float(rows.max() + 1),
        )
        label = params.single_class if area < params.cluster_area_px else params.cluster_class
        score = min(1.0, area / (2.0 * params.cluster_area_px))
        detections.append(ScoredBox(box=box, score=score, label=label))
    return detections


class BlobDetector:
    """Detector wrapper around :func:`blob_detect`."""

    name = "blob"

    def __init__(self, params: BlobDetectorParams | None = None):
        self.params = params or BlobDetectorParams()

    def detect(self, image: ImageBuffer, image_id: str) -> list[ScoredBox]:
        return blob_detect(image, self.params)


@dataclass(frozen=True)
class PerturbationParams:
    """Controlled corruption of ground truth (evaluation oracle)."""

    jitter_px: float = 0.0
    class_corruption_rate: float = 0.0
    drop_rate: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.jitter_px < 0:
            raise ValueError("jitter_px must be non-negative")
        for name in ("class_corruption_rate", "drop_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")


def perturb_detect(
    gt: Sequence[Annotation],
    params: PerturbationParams,
    image_width: int | None = None,
    image_height: int | None = None,
) -> list[ScoredBox]:
    """Emit ground truth with seeded drops, corner jitter and label flips.

    Per annotation: drop with probability drop_rate; otherwise jitter
    each of the four coordinates by an independent uniform offset in
    [-jitter_px, +jitter_px] (coordinate pairs re-sorted if inverted,
    clipped to the image when its size is given), flip the label to a
    uniformly random other class with probability class_corruption_rate,
    and score uniformly in [0.5, 1]. Fully deterministic for fixed seed
    and input order.
    """
    rng = random.Random(params.seed)
    out: list[ScoredBox] = []
    classes = list(CellClass)
    for ann in gt:
        if rng.random() < params.drop_rate:
            continue
        b = ann.box
        if params.jitter_px > 0:
            j = params.jitter_px
            x0 = b.xmin + rng.uniform(-j, j)
            x1 = b.xmax + rng.uniform(-j, j)
            y0 = b.ymin + rng.uniform(-j, j)
            y1 = b.ymax + rng.uniform(-j, j)
            xmin, xmax = sorted((x0, x1))
            ymin, ymax = sorted((y0, y1))
            if image_width is not None:
                xmin = max(0.0, xmin)
                xmax = min(float(image_width), xmax)
            if image_height is not None:
                ymin = max(0.0, ymin)
                ymax = min(float(image_height), ymax)
            if xmin >= xmax:
                xmax = xmin + 1e-9
            if ymin >= ymax:
                ymax = ymin + 1e-9
            box = BoundingBox(xmin, ymin, xmax, ymax)
        else:
            box = b

        label = ann.label
        if rng.random() < params.class_corruption_rate:
            label = rng.choice([c for c in classes if c is not ann.label])
        out.append(ScoredBox(box=box, score=rng.uniform(0.5, 1.0), label=label))
    return out


def _stable_seed(seed: int, image_id: str) -> int:
    digest = hashlib.sha256(f"{seed}:{image_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


class PerturbationDetector:
    """Detector that replays (possibly corrupted) ground truth per image.

    The per-image RNG seed derives from (seed, image_id), so results do
    not depend on the order images are visited.
    """

    name = "perturb"

    def __init__(self, ground_truth: Dataset, params: PerturbationParams | None = None):
        self.ground_truth = ground_truth
        self.params = params or PerturbationParams()

    def detect(self, image: ImageBuffer, image_id: str) -> list[ScoredBox]:
        record = self.ground_truth.image(image_id)
        per_image = PerturbationParams(
            jitter_px=self.params.jitter_px,
            class_corruption_rate=self.params.class_corruption_rate,
            drop_rate=self.params.drop_rate,
            seed=_stable_seed(self.params.seed, image_id),
        )
        return perturb_detect(
            self.ground_truth.annotations_for(image_id),
            per_image,
            image_width=record.width,
            image_height=record.height,
        )
