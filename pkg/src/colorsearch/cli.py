"""Command-line pipeline: prepare, train, label, search, evaluate, export-tree.

Every subcommand reads one YAML config; selected flags override config
fields.  Stage artifacts live in the configured workdir so the expensive
preparation step amortizes across training experiments.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 internal.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import io as cio
from . import pipeline, search as search_mod, survey, tree as tree_mod
from .config import PipelineConfig, load_config, require_paths
from .errors import ConfigError, DataError, QueryError
from .io import atomic_write_text

log = logging.getLogger("colorsearch")


def cmd_prepare(cfg: PipelineConfig, args) -> int:
    require_paths(cfg, "survey")
    params = cfg.filter
    provenance: dict = {
        "params": {
            "tau": params.tau,
            "outlier_k": params.outlier_k,
            "outlier_radius": params.outlier_radius,
            "smote_k": params.smote_k,
            "seed": cfg.seed,
            "clean": cfg.prepare.clean,
            "smote": cfg.prepare.smote,
            "sample_size": cfg.prepare.sample_size,
            "labels": list(cfg.labels),
        },
        "stages": [],
    }

    def record(stage: str, d: survey.ColorNameDataset, **extra):
        counts = d.label_counts
        entry = {
            "stage": stage,
            "samples": len(d),
            "labels": len(d.vocab),
            "min_label_count": min(counts.values()),
            **extra,
        }
        provenance["stages"].append(entry)
        print(f"{stage:<10} {len(d):>9} samples  {len(d.vocab):>5} labels")
        if args.keep_stages:
            out = cfg.paths.workdir / f"stage_{stage}.csv"
            survey.save_dataset(d, out, params={"seed": cfg.seed})

    dataset, malformed = survey.parse_survey(cfg.paths.survey)
    record("raw", dataset, malformed_rows=malformed)
    if cfg.prepare.sample_size:
        dataset = survey.subsample(dataset, cfg.prepare.sample_size, seed=cfg.seed)
        record("sampled", dataset)
    dataset = survey.filter_by_frequency(dataset, params.tau)
    record("filtered", dataset)
    if cfg.prepare.clean:
        dataset = survey.remove_outliers(dataset, k=params.outlier_k, radius=params.outlier_radius)
        record("cleaned", dataset)
    if cfg.prepare.smote:
        dataset = survey.resample_smote(dataset, k=params.smote_k, seed=cfg.seed)
        record("resampled", dataset)
    dataset = survey.restrict_labels(dataset, cfg.labels)
    record("restricted", dataset)

    survey.save_dataset(dataset, cfg.paths.dataset_file, params={
        "tau": params.tau,
        "outlier_k": params.outlier_k,
        "outlier_radius": params.outlier_radius,
        "smote_k": params.smote_k,
        "seed": cfg.seed,
    })
    atomic_write_text(cfg.paths.provenance_file, json.dumps(provenance, sort_keys=True, indent=2))
    print(f"wrote {cfg.paths.dataset_file}")
    return 0


def cmd_train(cfg: PipelineConfig, args) -> int:
    require_paths(cfg)
    if not cfg.paths.dataset_file.exists():
        raise DataError(
            f"prepared dataset not found at {cfg.paths.dataset_file}; run 'prepare' first"
        )
    dataset, _ = survey.load_dataset(cfg.paths.dataset_file)
    train_set, test_set = tree_mod.split_dataset(dataset, test_fraction=0.1, seed=cfg.seed)
    t = tree_mod.train_tree(train_set, cfg.tree)
    accuracy = tree_mod.evaluate_accuracy(t, test_set)
    tree_mod.save_tree(t, cfg.paths.tree_file)
    metrics = {
        "held_out_accuracy": accuracy,
        "train_samples": len(train_set),
        "test_samples": len(test_set),
        "n_nodes": t.n_nodes,
        "n_leaves": t.n_leaves,
        "depth": t.depth(),
        "labels": list(t.labels),
    }
    atomic_write_text(cfg.paths.metrics_file, json.dumps(metrics, sort_keys=True, indent=2))
    print(f"held-out accuracy: {100.0 * accuracy:.1f}%  "
          f"({t.n_nodes} nodes, depth {t.depth()})")
    print(f"wrote {cfg.paths.tree_file}")
    return 0


def cmd_label(cfg: PipelineConfig, args) -> int:
    require_paths(cfg, "manifest", "class_names")
    if not cfg.paths.tree_file.exists():
        raise DataError(f"tree not found at {cfg.paths.tree_file}; run 'train' first")
    t = tree_mod.load_tree(cfg.paths.tree_file)
    class_names = cio.load_class_names(cfg.paths.class_names)
    rows = cio.load_manifest(cfg.paths.manifest)

    grouped: dict[str, list[pipeline.Frame]] = {}
    load_failures = 0
    for row in rows:
        try:
            img = cio.load_image(row.image_path)
            smap = cio.load_semantic_map(row.mask_path, n_classes=max(class_names) + 1)
        except (OSError, DataError, ValueError):
            load_failures += 1
            log.exception("frame %s/%s failed to load; skipped", row.identity, row.frame)
            continue
        grouped.setdefault(row.identity, []).append((row.frame, img, smap))
    if not grouped:
        raise DataError("no frame could be loaded from the manifest")

    records = pipeline.label_identities(grouped, t, class_names, cfg)
    if not records:
        raise DataError("labeling produced no records")
    search_mod.save_records(records, cfg.paths.records_file)
    print(f"labeled {len(records)} identities "
          f"({load_failures} frame load failures) -> {cfg.paths.records_file}")
    return 0


def cmd_search(cfg: PipelineConfig, args) -> int:
    require_paths(cfg)
    if not cfg.paths.records_file.exists():
        raise DataError(f"records not found at {cfg.paths.records_file}; run 'label' first")
    records = search_mod.load_records(cfg.paths.records_file)
    known_classes = {cls for rec in records for cls in rec.labels}
    known_labels = set(cfg.labels) | {lab for rec in records for lab in rec.labels.values()}
    query = search_mod.parse_query(args.query, known_classes=known_classes,
                                   known_labels=known_labels)
    for identity in search_mod.search(query, records):
        print(identity)
    return 0


def cmd_evaluate(cfg: PipelineConfig, args) -> int:
    require_paths(cfg, "ground_truth")
    if not cfg.paths.records_file.exists():
        raise DataError(f"records not found at {cfg.paths.records_file}; run 'label' first")
    predictions = search_mod.load_records(cfg.paths.records_file)
    truth = search_mod.load_records(cfg.paths.ground_truth)
    class_map = None
    if cfg.paths.class_map is not None:
        class_map = search_mod.load_class_map(cfg.paths.class_map)
    report = search_mod.evaluate(predictions, truth, class_map=class_map)
    print(report.to_text())
    atomic_write_text(cfg.paths.workdir / "evaluation.json",
                      json.dumps(report.to_json_dict(), sort_keys=True, indent=2))
    atomic_write_text(cfg.paths.workdir / "confusion.csv", report.confusion_csv())
    print(f"wrote {cfg.paths.workdir / 'evaluation.json'}")
    return 0


def cmd_export_tree(cfg: PipelineConfig, args) -> int:
    require_paths(cfg)
    if not cfg.paths.tree_file.exists():
        raise DataError(f"tree not found at {cfg.paths.tree_file}; run 'train' first")
    t = tree_mod.load_tree(cfg.paths.tree_file)
    out = Path(args.out) if args.out else cfg.paths.workdir / "tree.dot"
    atomic_write_text(out, tree_mod.export_dot(t))
    print(f"wrote {out}")
    return 0


def _apply_overrides(cfg: PipelineConfig, args) -> PipelineConfig:
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
        cfg.tree = replace(cfg.tree, seed=args.seed)
        cfg.quantization = replace(cfg.quantization, seed=args.seed)
    if getattr(args, "tau", None) is not None:
        cfg.filter = replace(cfg.filter, tau=args.tau)
    if getattr(args, "no_clean", False):
        cfg.prepare.clean = False
    if getattr(args, "no_smote", False):
        cfg.prepare.smote = False
    if getattr(args, "sample_size", None) is not None:
        cfg.prepare.sample_size = args.sample_size
    if getattr(args, "sigma", None) is not None:
        cfg.smoothing = replace(cfg.smoothing, sigma=args.sigma, half_size=None)
    if getattr(args, "pooling", None) is not None:
        cfg.pooling.mode = args.pooling
    if getattr(args, "preprocess", None) is not None:
        cfg.preprocess.mode = args.preprocess
    if getattr(args, "workdir", None) is not None:
        cfg.paths.workdir = Path(args.workdir)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="colorsearch",
        description="Color naming for person search: survey-trained decision "
                    "trees applied to segmented pedestrian crops.",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", "-c", required=True, help="pipeline config YAML")
        p.add_argument("--seed", type=int, help="override the global seed")
        p.add_argument("--workdir", help="override paths.workdir")

    p = sub.add_parser("prepare", help="survey dump -> training set stages")
    common(p)
    p.add_argument("--tau", type=float, help="frequency-filter coverage ratio")
    p.add_argument("--no-clean", action="store_true", help="skip outlier removal")
    p.add_argument("--no-smote", action="store_true", help="skip re-balancing")
    p.add_argument("--sample-size", type=int, help="seeded subsample of the dump")
    p.add_argument("--keep-stages", action="store_true",
                   help="also write every intermediate stage file")
    p.set_defaults(fn=cmd_prepare)

    p = sub.add_parser("train", help="train the decision tree on the prepared set")
    common(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("label", help="label identities from a frame manifest")
    common(p)
    p.add_argument("--sigma", type=float, help="semantic smoothing strength")
    p.add_argument("--pooling", choices=("random", "average", "satsort"))
    p.add_argument("--preprocess", choices=("none", "enhance", "msrcp"))
    p.set_defaults(fn=cmd_label)

    p = sub.add_parser("search", help="query the record database")
    common(p)
    p.add_argument("query", nargs="+", metavar="class=color",
                   help="conjunctive predicates, e.g. upper=red lower=blue")
    p.set_defaults(fn=cmd_search)

    p = sub.add_parser("evaluate", help="score records against ground truth")
    common(p)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("export-tree", help="render the tree as Graphviz DOT")
    common(p)
    p.add_argument("--out", help="output path (default workdir/tree.dot)")
    p.set_defaults(fn=cmd_export_tree)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; we reserve 1
        return 0 if exc.code == 0 else 1
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config)
        cfg = _apply_overrides(cfg, args)
        return args.fn(cfg, args)
    except (ConfigError, QueryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
