"""Region-proposal geometry: anchors, IoU, box regression, NMS, top-N.

This is the geometric core a two-stage detector configures; nothing here
is learned. Anchor generation follows the sliding-window scheme: one
anchor per (scale, aspect ratio) pair at every feature-map location,
area-preserving sqrt-ratio parameterization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import BoundingBox, CellClass, box_area, intersect


@dataclass(frozen=True)
class AnchorConfig:
    """Anchor layout: base size and stride in pixels, relative scales/ratios.

    The defaults reproduce the 4-scale x 3-ratio grid (12 anchors per
    location); base_size and stride are conventions of the reference
    detector family, exposed as fields because only the relative scales
    are prescribed.
    """

    base_size: float = 256.0
    scales: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0)
    aspect_ratios: tuple[float, ...] = (0.5, 1.0, 2.0)  # height / width
    stride: float = 16.0

    def __post_init__(self) -> None:
        if self.base_size <= 0 or self.stride <= 0:
            raise ValueError("base_size and stride must be positive")
        if not self.scales or any(s <= 0 for s in self.scales):
            raise ValueError("scales must be positive and non-empty")
        if not self.aspect_ratios or any(r <= 0 for r in self.aspect_ratios):
            raise ValueError("aspect ratios must be positive and non-empty")

    @property
    def anchors_per_location(self) -> int:
        return len(self.scales) * len(self.aspect_ratios)


@dataclass(frozen=True)
class BoxDelta:
    """Box regression offsets: center shifts normalized by anchor size, log size ratios."""

    tx: float
    ty: float
    tw: float
    th: float


@dataclass(frozen=True)
class ScoredBox:
    """A box with an objectness/class score and an optional label."""

    box: BoundingBox
    score: float
    label: CellClass | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")


def generate_anchors(
    cfg: AnchorConfig, feat_w: int, feat_h: int, image_w: int, image_h: int
) -> list[BoundingBox]:
    """All anchors of a feat_w x feat_h feature map, unclipped.

    Centers sit at ((col + 0.5) * stride, (row + 0.5) * stride); each
    (scale, ratio) pair yields width base*scale/sqrt(ratio) and height
    base*scale*sqrt(ratio), so area is constant across ratios. Anchors
    may extend beyond the image_w x image_h bounds; clipping is the
    caller's choice (clip_to_image).
    """
    if feat_w < 1 or feat_h < 1 or image_w < 1 or image_h < 1:
        raise ValueError("dimensions must be positive")
    shapes = [
        (
            cfg.base_size * scale / math.sqrt(ratio),
            cfg.base_size * scale * math.sqrt(ratio),
        )
        for scale in cfg.scales
        for ratio in cfg.aspect_ratios
    ]
    anchors: list[BoundingBox] = []
    for row in range(feat_h):
        cy = (row + 0.5) * cfg.stride
        for col in range(feat_w):
            cx = (col + 0.5) * cfg.stride
            anchors.extend(
                BoundingBox(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)
                for w, h in shapes
            )
    return anchors


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union; 0 when disjoint, 1 for identical boxes."""
    overlap = intersect(a, b)
    if overlap is None:
        return 0.0
    inter = box_area(overlap)
    return inter / (box_area(a) + box_area(b) - inter)


def iou_matrix(a: Sequence[BoundingBox], b: Sequence[BoundingBox]) -> np.ndarray:
    """Pairwise IoU, shape (len(a), len(b)). Vectorized helper for matching."""
    if not a or not b:
        return np.zeros((len(a), len(b)))
    A = np.asarray([box.as_tuple() for box in a])
    B = np.asarray([box.as_tuple() for box in b])
    iw = np.minimum(A[:, None, 2], B[None, :, 2]) - np.maximum(A[:, None, 0], B[None, :, 0])
    ih = np.minimum(A[:, None, 3], B[None, :, 3]) - np.maximum(A[:, None, 1], B[None, :, 1])
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
    area_a = (A[:, 2] - A[:, 0]) * (A[:, 3] - A[:, 1])
    area_b = (B[:, 2] - B[:, 0]) * (B[:, 3] - B[:, 1])
    return inter / (area_a[:, None] + area_b[None, :] - inter)


def encode(box: BoundingBox, anchor: BoundingBox) -> BoxDelta:
    """Box -> regression offsets relative to an anchor."""
    bx, by = box.center
    ax, ay = anchor.center
    return BoxDelta(
        tx=(bx - ax) / anchor.width,
        ty=(by - ay) / anchor.height,
        tw=math.log(box.width / anchor.width),
        th=math.log(box.height / anchor.height),
    )


def decode(delta: BoxDelta, anchor: BoundingBox) -> BoundingBox:
    """Regression offsets -> box; exact inverse of :func:`encode`."""
    ax, ay = anchor.center
    cx = delta.tx * anchor.width + ax
    cy = delta.ty * anchor.height + ay
    w = math.exp(delta.tw) * anchor.width
    h = math.exp(delta.th) * anchor.height
    return BoundingBox(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)


def _canonical_order(candidates: Sequence[ScoredBox]) -> list[int]:
    """Indices sorted by descending score; ties by (ymin, xmin, input index)."""
    return sorted(
        range(len(candidates)),
        key=lambda i: (
            -candidates[i].score,
            candidates[i].box.ymin,
            candidates[i].box.xmin,
            i,
        ),
    )


def nms(candidates: Sequence[ScoredBox], iou_threshold: float) -> list[ScoredBox]:
    """Greedy non-maximum suppression.

    Repeatedly keeps the highest-scoring remaining box and discards all
    others whose IoU with it exceeds the threshold. The canonical order
    (score desc, then ymin, xmin, input index) makes the result
    deterministic; output is sorted by descending score.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError("iou_threshold must be in (0, 1]")
    if not candidates:
        return []
    order = _canonical_order(candidates)
    boxes = np.asarray([candidates[i].box.as_tuple() for i in order])
    areas = (boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])

    kept: list[int] = []
    alive = np.ones(len(order), dtype=bool)
    for pos in range(len(order)):
        if not alive[pos]:
            continue
        kept.append(order[pos])
        rest = alive.copy()
        rest[: pos + 1] = False
        if not rest.any():
            break
        iw = np.minimum(boxes[rest, 2], boxes[pos, 2]) - np.maximum(boxes[rest, 0], boxes[pos, 0])
        ih = np.minimum(boxes[rest, 3], boxes[pos, 3]) - np.maximum(boxes[rest, 1], boxes[pos, 1])
        inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
        overlap = inter / (areas[rest] + areas[pos] - inter)
        suppress = np.where(rest)[0][overlap > iou_threshold]
        alive[suppress] = False
    return [candidates[i] for i in kept]


def top_proposals(
    candidates: Sequence[ScoredBox], n: int, iou_threshold: float = 0.7
) -> list[ScoredBox]:
    """NMS, then the n highest-scoring survivors (all of them if fewer)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return nms(candidates, iou_threshold)[:n]


def clip_to_image(box: BoundingBox, width: int, height: int) -> BoundingBox | None:
    """Intersection with the image rectangle; None when fully outside."""
    return intersect(box, BoundingBox(0.0, 0.0, float(width), float(height)))
