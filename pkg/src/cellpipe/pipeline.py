"""Filesystem pipeline steps: import, augment, split, detect, evaluate, report.

Each step reads and writes artifacts under the run's output directory
and embeds the config hash, so a re-run with the same RunConfig is
byte-identical and mixed-settings artifacts are rejected instead of
silently aggregated.

Layout under out_dir:

    manifest.json            dataset + folds + augmentation provenance
    augmented/               materialized derived images (8-bit PNG)
    augmented.csv            canonical CSV for the derived annotations
    splits/split_<j>.json    training/validation id listings
    detections/fold_<j>.json detector output for validation fold j
    reports/fold_<j>.json    evaluation report for fold j
    aggregate.json           cross-fold mean/std summary
"""

from __future__ import annotations

import json
from pathlib import Path

from . import annotations as ann_io
from .augment import AugmentedFold, expand, to_grayscale, transform_pixels
from .config import (
    RunConfig,
    blob_params_from_config,
    perturbation_params_from_config,
)
from .crossval import FoldAssignment, build_split, partition
from .detectors import BlobDetector, PerturbationDetector
from .evaluate import EvaluationReport, FoldAggregate, aggregate, evaluate_images
from .geometry import ScoredBox
from .imageio import load_image, save_image
from .manifest import Manifest, read_manifest, write_manifest
from .model import (
    BoundingBox,
    CellClass,
    CellPipeError,
    Dataset,
    FormatError,
    merge_datasets,
)


class PipelineStateError(CellPipeError):
    """A step was invoked before its inputs exist."""


def _manifest_path(config: RunConfig) -> Path:
    return Path(config.out_dir) / "manifest.json"


def _load_manifest(config: RunConfig, step: str) -> Manifest:
    path = _manifest_path(config)
    if not path.exists():
        raise PipelineStateError(f"{step}: no manifest at {path}; run 'import' first")
    manifest = read_manifest(path.read_text(encoding="utf-8"))
    if manifest.config_hash is not None and manifest.config_hash != config.config_hash():
        raise FormatError(
            f"{step}: manifest at {path} was produced with a different config "
            f"({manifest.config_hash} != {config.config_hash()})"
        )
    return manifest


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def source_dataset(manifest: Manifest) -> Dataset:
    """The non-derived images of a manifest (inputs to augmentation)."""
    derived = {v.derived_image_id for v in manifest.variants}
    return manifest.dataset.subset(
        [i for i in manifest.dataset.image_ids if i not in derived]
    )


def derived_fold(manifest: Manifest, fold_index: int) -> AugmentedFold:
    """Reassemble one fold's AugmentedFold from manifest provenance."""
    if not manifest.variants:
        raise PipelineStateError("manifest has no augmentation provenance; run 'augment' first")
    if manifest.folds is None:
        raise PipelineStateError("manifest has no fold assignment; run 'split' first")
    members = set(manifest.folds.members(fold_index))
    variants = tuple(v for v in manifest.variants if v.source_image_id in members)
    derived_ids = [v.derived_image_id for v in variants]
    return AugmentedFold(
        dataset=manifest.dataset.subset(derived_ids),
        variants=variants,
        fold_index=fold_index,
    )


def run_import(config: RunConfig, input_format: str = "csv") -> Path:
    """Parse the dataset dir's annotations (CSV or VOC XML) into a manifest."""
    dataset_dir = Path(config.dataset_dir)
    if input_format == "csv":
        csv_path = dataset_dir / "annotations.csv"
        if not csv_path.exists():
            raise PipelineStateError(f"import: no {csv_path}")
        dataset = ann_io.parse_csv(csv_path.read_text(encoding="utf-8"))
    elif input_format == "voc":
        xml_paths = sorted(dataset_dir.glob("*.xml"))
        if not xml_paths:
            raise PipelineStateError(f"import: no *.xml files in {dataset_dir}")
        dataset = ann_io.dataset_from_voc_files(
            p.read_text(encoding="utf-8") for p in xml_paths
        )
    else:
        raise FormatError(f"unknown import format {input_format!r}")

    out = _manifest_path(config)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(
        write_manifest(dataset, config_hash=config.config_hash()), encoding="utf-8"
    )
    return out


def run_split(config: RunConfig) -> FoldAssignment:
    """Partition source images into folds; write split listings."""
    manifest = _load_manifest(config, "split")
    sources = source_dataset(manifest)
    folds = partition(
        sources, n=config.folds, seed=config.seed, stratify_by_class=config.stratify
    )

    _manifest_path(config).write_text(
        write_manifest(
            manifest.dataset,
            folds=folds,
            variants=manifest.variants,
            config_hash=config.config_hash(),
        ),
        encoding="utf-8",
    )

    if manifest.variants:
        refreshed = read_manifest(_manifest_path(config).read_text(encoding="utf-8"))
        augmented = {i: derived_fold(refreshed, i) for i in range(1, folds.n + 1)}
        for j in range(1, folds.n + 1):
            build_split(folds, augmented, j)  # raises on leakage

    by_derived: dict[str, list[str]] = {}
    for v in manifest.variants:
        by_derived.setdefault(v.source_image_id, []).append(v.derived_image_id)
    for j in range(1, folds.n + 1):
        validation = list(folds.members(j))
        training = [i for i in sorted(sources.image_ids) if i not in set(validation)]
        doc = {
            "config_hash": config.config_hash(),
            "fold_index": j,
            "validation_sources": validation,
            "training_sources": training,
            "validation_derived": sorted(
                d for s in validation for d in by_derived.get(s, [])
            ),
            "training_derived": sorted(
                d for s in training for d in by_derived.get(s, [])
            ),
        }
        _write_json(Path(config.out_dir) / "splits" / f"split_{j}.json", doc)
    return folds


def run_augment(config: RunConfig) -> int:
    """Materialize every (D4, gamma) variant of every source image.

    Writes derived PNGs under out_dir/augmented/, appends derived
    records + provenance to the manifest, and emits augmented.csv.
    Returns the number of derived images written. Output ordering is
    deterministic: (source id, d4 index, gamma index).
    """
    manifest = _load_manifest(config, "augment")
    if manifest.variants:
        raise PipelineStateError("augment: manifest already carries augmentation provenance")
    sources = source_dataset(manifest)
    augmented = expand(
        sources,
        d4_schedule=config.d4_schedule(),
        power_schedule=config.power_schedule(),
    )

    out_images = Path(config.out_dir) / "augmented"
    out_images.mkdir(parents=True, exist_ok=True)
    dataset_dir = Path(config.dataset_dir)
    buffers = {}
    for rec in sources.images:
        buffers[rec.image_id] = load_image(dataset_dir / rec.file_path)
    for variant in augmented.variants:
        derived = transform_pixels(buffers[variant.source_image_id], variant)
        save_image(derived, out_images / f"{variant.derived_image_id}.png")

    combined = merge_datasets([manifest.dataset, augmented.dataset])
    _manifest_path(config).write_text(
        write_manifest(
            combined,
            folds=manifest.folds,
            variants=augmented.variants,
            config_hash=config.config_hash(),
        ),
        encoding="utf-8",
    )
    (Path(config.out_dir) / "augmented.csv").write_text(
        ann_io.write_csv(augmented.dataset), encoding="utf-8"
    )
    return len(augmented.variants)


def _detector_for(config: RunConfig, validation_gt: Dataset):
    if config.detector == "blob":
        return BlobDetector(blob_params_from_config(config))
    return PerturbationDetector(validation_gt, perturbation_params_from_config(config))


def _scored_box_to_dict(sb: ScoredBox) -> dict:
    return {
        "class": sb.label.token if sb.label is not None else None,
        "score": sb.score,
        "xmin": sb.box.xmin,
        "ymin": sb.box.ymin,
        "xmax": sb.box.xmax,
        "ymax": sb.box.ymax,
    }


def _scored_box_from_dict(d: dict) -> ScoredBox:
    label = CellClass.from_token(d["class"]) if d.get("class") else None
    return ScoredBox(
        box=BoundingBox(d["xmin"], d["ymin"], d["xmax"], d["ymax"]),
        score=d["score"],
        label=label,
    )


def run_detect(config: RunConfig, fold_index: int) -> Path:
    """Run the configured detector over validation fold j's derived images."""
    manifest = _load_manifest(config, "detect")
    validation = derived_fold(manifest, fold_index)

    detector = _detector_for(config, validation.dataset)
    image_root = Path(config.out_dir) / "augmented"
    detections: dict[str, list[dict]] = {}
    for rec in sorted(validation.dataset.images, key=lambda r: r.image_id):
        path = image_root / rec.file_path
        if not path.exists():
            raise PipelineStateError(
                f"detect: missing derived image {path}; run 'augment' first"
            )
        buf = load_image(path)
        if config.grayscale:
            buf = to_grayscale(buf)
        found = detector.detect(buf, rec.image_id)
        detections[rec.image_id] = [_scored_box_to_dict(sb) for sb in found]

    doc = {
        "format_version": 1,
        "config_hash": config.config_hash(),
        "fingerprint": config.fingerprint(),
        "fold_index": fold_index,
        "detector": config.detector,
        "grayscale": config.grayscale,
        "detections": detections,
    }
    path = Path(config.out_dir) / "detections" / f"fold_{fold_index}.json"
    _write_json(path, doc)
    return path


def load_detections(path: Path) -> tuple[dict, dict[str, list[ScoredBox]]]:
    doc = json.loads(path.read_text(encoding="utf-8"))
    boxes = {
        image_id: [_scored_box_from_dict(d) for d in entries]
        for image_id, entries in doc["detections"].items()
    }
    return doc, boxes


def run_evaluate(config: RunConfig, fold_index: int) -> EvaluationReport:
    """Match fold j's detections against derived ground truth and report."""
    manifest = _load_manifest(config, "evaluate")
    det_path = Path(config.out_dir) / "detections" / f"fold_{fold_index}.json"
    if not det_path.exists():
        raise PipelineStateError(
            f"evaluate: no detections at {det_path}; run 'detect' first"
        )
    doc, det_by_image = load_detections(det_path)
    if doc.get("fingerprint") != config.fingerprint():
        raise FormatError(
            "evaluate: detections were produced under different settings "
            f"({doc.get('fingerprint')} != {config.fingerprint()})"
        )

    validation = derived_fold(manifest, fold_index)
    gt_by_image = {
        rec.image_id: validation.dataset.annotations_for(rec.image_id)
        for rec in validation.dataset.images
    }
    report = evaluate_images(
        gt_by_image, det_by_image, config.iou_threshold, config.class_aware_matching
    )

    out = {
        "format_version": 1,
        "config_hash": config.config_hash(),
        "fingerprint": config.fingerprint(),
        "fold_index": fold_index,
        "iou_threshold": config.iou_threshold,
        "report": report.to_dict(),
    }
    _write_json(Path(config.out_dir) / "reports" / f"fold_{fold_index}.json", out)
    return report


def run_report(config: RunConfig) -> FoldAggregate:
    """Aggregate every per-fold report into the mean ± std summary."""
    reports_dir = Path(config.out_dir) / "reports"
    paths = sorted(reports_dir.glob("fold_*.json"))
    if not paths:
        raise PipelineStateError(f"report: no reports under {reports_dir}; run 'evaluate' first")

    accuracies: list[float] = []
    fingerprints: set[str] = set()
    for path in paths:
        doc = json.loads(path.read_text(encoding="utf-8"))
        fingerprints.add(doc.get("fingerprint"))
        accuracies.append(doc["report"]["accuracy"])
    if len(fingerprints) > 1:
        raise FormatError(
            f"report: refusing to aggregate reports with mismatched settings: {sorted(fingerprints)}"
        )
    if fingerprints != {config.fingerprint()}:
        raise FormatError(
            "report: reports were produced under different settings than the current config"
        )

    agg = aggregate(accuracies)
    doc = {
        "format_version": 1,
        "config_hash": config.config_hash(),
        "fingerprint": config.fingerprint(),
        "per_fold_accuracy": list(agg.per_fold_accuracy),
        "mean": agg.mean,
        "std": agg.std,
        "std_undefined": agg.std_undefined,
        "formatted": agg.formatted(),
    }
    _write_json(Path(config.out_dir) / "aggregate.json", doc)
    return agg


def run_full_pipeline(config: RunConfig) -> FoldAggregate:
    """import -> augment -> split -> detect/evaluate per fold -> report."""
    run_import(config)
    run_augment(config)
    run_split(config)
    for j in range(1, config.folds + 1):
        run_detect(config, j)
        run_evaluate(config, j)
    return run_report(config)
