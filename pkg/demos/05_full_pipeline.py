"""End-to-end run on a synthetic dataset, exactly as the CLI would do it.

Builds 60 blob-fixture images with known ground truth, then runs
import -> augment -> split -> detect (blob baseline) -> evaluate ->
report, and prints the per-fold accuracies with the mean ± std summary.
Everything lands under demos/out/pipeline/, and a second run reproduces
the same bytes.

Equivalent CLI session:

    cellpipe import   --dataset-dir data --out-dir out
    cellpipe augment  --dataset-dir data --out-dir out
    cellpipe split    --dataset-dir data --out-dir out --folds 5 --seed 3
    cellpipe detect   --dataset-dir data --out-dir out --fold-index 1   # .. 5
    cellpipe evaluate --dataset-dir data --out-dir out --fold-index 1   # .. 5
    cellpipe report   --dataset-dir data --out-dir out
"""

import time
from pathlib import Path

from cellpipe.config import RunConfig
from cellpipe.pipeline import (
    run_augment,
    run_detect,
    run_evaluate,
    run_import,
    run_report,
    run_split,
)
from cellpipe.synthetic import build_blob_dataset

OUT_DIR = Path(__file__).parent / "out" / "pipeline"


def main():
    data_dir = OUT_DIR / "data"
    dataset = build_blob_dataset(data_dir, n_images=60, width=64, height=64, seed=7)
    print(f"built {len(dataset)} synthetic images "
          f"({len(dataset.annotations)} labeled regions) in {data_dir}")

    config = RunConfig(
        dataset_dir=str(data_dir), out_dir=str(OUT_DIR / "run"), folds=5, seed=3
    )
    start = time.monotonic()
    run_import(config)
    count = run_augment(config)
    print(f"materialized {count} derived images")
    folds = run_split(config)
    print(f"fold sizes: {list(folds.sizes().values())}")
    for j in range(1, 6):
        run_detect(config, j)
        report = run_evaluate(config, j)
        print(f"fold {j}: accuracy {report.accuracy:.4f} "
              f"({report.n_gt} objects, {report.n_det} detections)")
    agg = run_report(config)
    print(f"\naccuracy over 5 folds: {agg.formatted()}  "
          f"({time.monotonic() - start:.1f}s)")


if __name__ == "__main__":
    main()
