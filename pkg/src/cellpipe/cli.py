"""Command-line entry point wiring the pipeline end to end.

Configuration comes from an optional JSON file (--config) overridden by
flags; flags win. Every subcommand exits non-zero with an actionable
message when its inputs are missing or inconsistent.
"""

from __future__ import annotations

import argparse
import sys

from .config import RunConfig, apply_overrides, load_config
from .evaluate import CLASS_ORDER
from .model import CellPipeError
from . import pipeline
from .serve import serve


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run-config file; flags override it")
    p.add_argument("--dataset-dir", help="directory with images + annotations.csv")
    p.add_argument("--out-dir", help="output directory for all artifacts")
    p.add_argument("--folds", type=int, help="fold count n (default 5)")
    p.add_argument("--seed", type=int, help="partition shuffle seed")
    p.add_argument("--gammas", help="comma-separated gamma list, e.g. 3/4,4/5,1,5/4,4/3")
    p.add_argument("--d4", help="comma-separated D4 subset, e.g. identity,rot90,fliph")
    p.add_argument("--detector", choices=["blob", "perturb"], help="detector to run")
    p.add_argument("--iou-threshold", type=float, dest="iou_threshold")
    p.add_argument(
        "--grayscale",
        action="store_const",
        const=True,
        default=None,
        help="convert images to grayscale before detection",
    )
    p.add_argument(
        "--stratify",
        action="store_const",
        const=True,
        default=None,
        help="stratify the fold partition by each image's dominant class",
    )


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    return apply_overrides(
        config,
        dataset_dir=args.dataset_dir,
        out_dir=args.out_dir,
        folds=args.folds,
        seed=args.seed,
        gammas=args.gammas.split(",") if args.gammas else None,
        d4=args.d4.split(",") if args.d4 else None,
        detector=args.detector,
        iou_threshold=args.iou_threshold,
        grayscale=args.grayscale,
        stratify=args.stratify,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cellpipe",
        description="Cell-detection dataset pipeline: annotate, augment, split, detect, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import", help="parse CSV/VOC annotations into a manifest")
    _add_common_flags(p)
    p.add_argument("--format", choices=["csv", "voc"], default="csv")

    p = sub.add_parser("augment", help="materialize D4 x power-law variants")
    _add_common_flags(p)

    p = sub.add_parser("split", help="partition into folds and emit split listings")
    _add_common_flags(p)

    p = sub.add_parser("detect", help="run the detector on a validation fold")
    _add_common_flags(p)
    p.add_argument("--fold-index", type=int, required=True, dest="fold_index")

    p = sub.add_parser("evaluate", help="match detections against ground truth")
    _add_common_flags(p)
    p.add_argument("--fold-index", type=int, required=True, dest="fold_index")

    p = sub.add_parser("report", help="aggregate per-fold reports into mean ± std")
    _add_common_flags(p)

    p = sub.add_parser("serve", help="host the dataset for the review UI")
    _add_common_flags(p)
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--detections", help="detections JSON to overlay")
    p.add_argument("--ui-dir", help="static frontend directory to serve at /")

    return parser


def _print_report_table(report) -> None:
    print(f"{'class':<22}{'tp':>6}{'fp':>6}{'fn':>6}{'prec':>8}{'rec':>8}")
    for cls in CLASS_ORDER:
        c = report.per_class[cls]
        print(
            f"{cls.token:<22}{c.tp:>6}{c.fp:>6}{c.fn:>6}"
            f"{report.precision[cls]:>8.3f}{report.recall[cls]:>8.3f}"
        )
    print(f"objects: {report.n_gt}  detections: {report.n_det}  accuracy: {report.accuracy:.4f}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _resolve_config(args)
        if args.command == "import":
            path = pipeline.run_import(config, input_format=args.format)
            print(f"wrote {path}")
        elif args.command == "augment":
            count = pipeline.run_augment(config)
            print(f"materialized {count} derived images under {config.out_dir}/augmented")
        elif args.command == "split":
            folds = pipeline.run_split(config)
            sizes = folds.sizes()
            print(
                f"assigned {len(folds.assignment)} images to {folds.n} folds "
                f"(sizes {[sizes[i] for i in range(1, folds.n + 1)]}, seed {folds.seed})"
            )
        elif args.command == "detect":
            path = pipeline.run_detect(config, args.fold_index)
            print(f"wrote {path}")
        elif args.command == "evaluate":
            report = pipeline.run_evaluate(config, args.fold_index)
            _print_report_table(report)
        elif args.command == "report":
            agg = pipeline.run_report(config)
            for j, acc in enumerate(agg.per_fold_accuracy, start=1):
                print(f"fold {j}: accuracy {acc:.4f}")
            print(f"accuracy: {agg.formatted()}")
        elif args.command == "serve":
            server = serve(
                dataset_dir=config.dataset_dir,
                port=args.port,
                detections_path=args.detections,
                iou_threshold=config.iou_threshold,
                ui_dir=args.ui_dir,
            )
            host, port = server.server_address[:2]
            print(f"serving {config.dataset_dir} on http://{host}:{port}")
            try:
                server.serve_forever()
            except KeyboardInterrupt:
                server.shutdown()
        return 0
    except CellPipeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
