"""cellpipe: reproducible microscopy cell-detection data pipeline.

Library layout, one module per concern:

* :mod:`cellpipe.model` - boxes, labels, image records, datasets, buffers
* :mod:`cellpipe.annotations` - CSV listing + LabelImg XML import
* :mod:`cellpipe.augment` - D4 spatial group, power-law intensity, grayscale
* :mod:`cellpipe.crossval` - fold partitioning and leak-free splits
* :mod:`cellpipe.geometry` - anchors, IoU, box regression, NMS
* :mod:`cellpipe.detectors` - blob baseline + ground-truth perturbation oracle
* :mod:`cellpipe.evaluate` - matching, confusion matrix, fold aggregation
* :mod:`cellpipe.manifest` - versioned dataset manifest documents
* :mod:`cellpipe.pipeline` / :mod:`cellpipe.cli` - end-to-end runs
* :mod:`cellpipe.serve` - review-UI data API
"""

from .model import (
    Annotation,
    BoundingBox,
    CellClass,
    CellPipeError,
    Dataset,
    FormatError,
    ImageBuffer,
    ImageRecord,
    box_area,
    intersect,
    label_map,
)

__all__ = [
    "Annotation",
    "BoundingBox",
    "CellClass",
    "CellPipeError",
    "Dataset",
    "FormatError",
    "ImageBuffer",
    "ImageRecord",
    "box_area",
    "intersect",
    "label_map",
]

__version__ = "0.1.0"
