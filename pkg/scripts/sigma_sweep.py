#!/usr/bin/env python3
"""Precision/recall versus semantic-map smoothing strength.

Degrades the semantic maps of a seeded pedestrian fixture with
increasing Gaussian smoothing and measures how region precision and
recall hold up, emulating progressively worse segmentation.
"""
from __future__ import annotations

import argparse
import csv
import sys

from colorsearch import pipeline, regions, survey, tree
from colorsearch import search as search_mod
from colorsearch.regions import QuantizationParams, SmoothingParams
from colorsearch.survey import BERLIN_KAY_LABELS
from colorsearch.synth import CLASS_NAMES, generate_identities, synthetic_survey


def build_tree(seed: int):
    raw = synthetic_survey(n=40_000, seed=seed)
    d = survey.filter_by_frequency(raw, tau=0.95)
    d = survey.remove_outliers(d, k=5, radius=8.0)
    d = survey.resample_smote(d, k=5, seed=seed)
    d = survey.restrict_labels(d, BERLIN_KAY_LABELS)
    return tree.train_tree(d, tree.TreeTrainParams(min_samples_leaf=4, seed=seed))


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--identities", type=int, default=100)
    ap.add_argument("--sigmas", type=float, nargs="+",
                    default=[0, 5, 10, 20, 30, 40, 50, 60, 70, 80])
    ap.add_argument("--seed", type=int, default=22)
    ap.add_argument("--out", default="sigma_sweep.csv")
    ap.add_argument("--plot", help="optional PNG path for a precision/recall plot")
    args = ap.parse_args()

    t = build_tree(0)
    quant = QuantizationParams(seed=0)
    fixtures = list(generate_identities(
        args.identities, frames_per_identity=1, seed=args.seed, scale_range=(0.9, 1.1),
    ))
    truth = [search_mod.PersonRecord(identity=f.identity, labels=dict(f.truth))
             for f in fixtures]

    rows = []
    for sigma in args.sigmas:
        records = []
        for f in fixtures:
            try:
                records.append(pipeline.process_identity(
                    f.identity, f.frames, t, CLASS_NAMES, lambda im: im,
                    quant, SmoothingParams(sigma=float(sigma)), "average", 3, 0,
                ))
            except Exception:
                continue
        report = search_mod.evaluate(records, truth)
        rows.append({"sigma": sigma, "ras": round(100 * report.ras, 2),
                     "recall": round(100 * report.recall, 2),
                     "tp": report.tp, "fp": report.fp, "fn": report.fn})
        print(f"sigma={sigma:5.1f}  RAS={100 * report.ras:5.1f}  "
              f"recall={100 * report.recall:5.1f}")

    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {args.out}")

    if args.plot:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        sigmas = [r["sigma"] for r in rows]
        plt.figure(figsize=(6, 4))
        plt.plot(sigmas, [r["ras"] for r in rows], "o-", label="precision (RAS)")
        plt.plot(sigmas, [r["recall"] for r in rows], "s--", label="recall")
        plt.xlabel("smoothing sigma (px)")
        plt.ylabel("percent")
        plt.ylim(0, 105)
        plt.grid(alpha=0.3)
        plt.legend()
        plt.tight_layout()
        plt.savefig(args.plot, dpi=120)
        print(f"wrote {args.plot}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
