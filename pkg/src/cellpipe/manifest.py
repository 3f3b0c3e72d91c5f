"""Versioned dataset manifest: images, annotations, folds, provenance.

One self-describing JSON document per dataset. Key ordering and float
serialization are deterministic, so identical inputs produce identical
bytes. Box coordinates are stored at full float precision here (the CSV
listing is the integer-rounded interchange form).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .augment import AugmentationVariant, D4Element, PowerLawParams, derived_image_id
from .crossval import FoldAssignment
from .model import Annotation, BoundingBox, CellClass, Dataset, FormatError, ImageRecord

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Manifest:
    dataset: Dataset
    folds: FoldAssignment | None = None
    variants: tuple[AugmentationVariant, ...] = ()
    config_hash: str | None = None


def write_manifest(
    dataset: Dataset,
    folds: FoldAssignment | None = None,
    variants: tuple[AugmentationVariant, ...] = (),
    config_hash: str | None = None,
) -> str:
    """Serialize dataset + fold ids + augmentation provenance to JSON."""
    fold_of = folds.as_dict() if folds is not None else {}
    known_ids = set(dataset.image_ids)
    for image_id in fold_of:
        if image_id not in known_ids:
            raise FormatError(f"fold assignment references unknown image {image_id!r}")
    for v in variants:
        if v.source_image_id not in known_ids:
            raise FormatError(
                f"variant references unknown source image {v.source_image_id!r}"
            )
        if v.derived_image_id not in known_ids:
            raise FormatError(
                f"variant references unknown derived image {v.derived_image_id!r}"
            )

    doc = {
        "format_version": FORMAT_VERSION,
        "config_hash": config_hash,
        "images": [
            {
                "image_id": rec.image_id,
                "file_path": rec.file_path,
                "width": rec.width,
                "height": rec.height,
                "colorspace": rec.colorspace,
                "fold": fold_of.get(rec.image_id),
            }
            for rec in sorted(dataset.images, key=lambda r: r.image_id)
        ],
        "annotations": [
            {
                "image_id": ann.image_id,
                "class": ann.label.token,
                "xmin": ann.box.xmin,
                "ymin": ann.box.ymin,
                "xmax": ann.box.xmax,
                "ymax": ann.box.ymax,
            }
            for ann in sorted(
                dataset.annotations,
                key=lambda a: (a.image_id, a.box.ymin, a.box.xmin, a.label.token),
            )
        ],
        "folds": {"n": folds.n, "seed": folds.seed} if folds is not None else None,
        "variants": [
            {
                "source_image_id": v.source_image_id,
                "d4": v.d4.token,
                "gamma": str(Fraction(v.params.gamma)),
                "c": v.params.c,
                "derived_image_id": v.derived_image_id,
            }
            for v in sorted(
                variants,
                key=lambda v: (v.source_image_id, v.d4.index, float(v.params.gamma)),
            )
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def read_manifest(text: str) -> Manifest:
    """Parse a manifest document; inverse of :func:`write_manifest`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed manifest: {exc}") from None
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported manifest format_version: {version!r}")

    images = []
    fold_pairs: list[tuple[str, int]] = []
    for entry in doc.get("images", []):
        images.append(
            ImageRecord(
                image_id=entry["image_id"],
                file_path=entry["file_path"],
                width=entry["width"],
                height=entry["height"],
                colorspace=entry["colorspace"],
            )
        )
        if entry.get("fold") is not None:
            fold_pairs.append((entry["image_id"], entry["fold"]))

    annotations = tuple(
        Annotation(
            image_id=entry["image_id"],
            box=BoundingBox(entry["xmin"], entry["ymin"], entry["xmax"], entry["ymax"]),
            label=CellClass.from_token(entry["class"]),
        )
        for entry in doc.get("annotations", [])
    )
    dataset = Dataset(images=tuple(images), annotations=annotations)

    folds = None
    if doc.get("folds") is not None:
        folds = FoldAssignment(
            n=doc["folds"]["n"], seed=doc["folds"]["seed"], assignment=tuple(fold_pairs)
        )

    variants = []
    for entry in doc.get("variants", []):
        params = PowerLawParams(gamma=Fraction(entry["gamma"]), c=entry["c"])
        g = D4Element.from_token(entry["d4"])
        expected = derived_image_id(entry["source_image_id"], g, params)
        if entry["derived_image_id"] != expected:
            raise FormatError(
                f"variant id {entry['derived_image_id']!r} does not match its "
                f"transform provenance (expected {expected!r})"
            )
        variants.append(
            AugmentationVariant(
                source_image_id=entry["source_image_id"],
                d4=g,
                params=params,
                derived_image_id=entry["derived_image_id"],
            )
        )

    return Manifest(
        dataset=dataset,
        folds=folds,
        variants=tuple(variants),
        config_hash=doc.get("config_hash"),
    )
