#!/usr/bin/env python3
"""Held-out classification accuracy per data-preparation configuration.

Runs the four combinations of outlier cleaning and SMOTE re-balancing,
either on a real survey dump (--dump) or on the built-in synthetic
survey, and reports held-out accuracy for each.
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from colorsearch import survey, tree
from colorsearch.survey import BERLIN_KAY_LABELS
from colorsearch.synth import synthetic_survey


def prepare(raw, clean: bool, smote: bool, tau: float, seed: int):
    d = survey.filter_by_frequency(raw, tau=tau)
    if clean:
        d = survey.remove_outliers(d, k=5, radius=8.0)
    if smote:
        d = survey.resample_smote(d, k=5, seed=seed)
    return survey.restrict_labels(d, BERLIN_KAY_LABELS)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dump", help="survey dump file; default uses synthetic data")
    ap.add_argument("--sample-size", type=int, default=200_000,
                    help="seeded subsample of the dump (0 = full)")
    ap.add_argument("--synthetic-size", type=int, default=60_000)
    ap.add_argument("--tau", type=float, default=None,
                    help="coverage ratio (default 0.65 for dumps, 0.95 synthetic)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="ablation.csv")
    args = ap.parse_args()

    if args.dump:
        raw, malformed = survey.parse_survey(args.dump)
        print(f"parsed {len(raw)} samples ({malformed} malformed rows)")
        if args.sample_size:
            raw = survey.subsample(raw, args.sample_size, seed=args.seed)
        tau = args.tau if args.tau is not None else 0.65
    else:
        raw = synthetic_survey(n=args.synthetic_size, seed=args.seed)
        tau = args.tau if args.tau is not None else 0.95

    rows = []
    for clean in (False, True):
        for smote in (False, True):
            d = prepare(raw, clean, smote, tau, args.seed)
            train, test = tree.split_dataset(d, test_fraction=0.1, seed=args.seed)
            t = tree.train_tree(train, tree.TreeTrainParams(seed=args.seed))
            acc = 100.0 * tree.evaluate_accuracy(t, test)
            rows.append({"clean": clean, "smote": smote, "samples": len(d),
                         "accuracy": round(acc, 2)})
            print(f"clean={clean!s:5} smote={smote!s:5} samples={len(d):>8} "
                  f"accuracy={acc:5.1f}")

    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
