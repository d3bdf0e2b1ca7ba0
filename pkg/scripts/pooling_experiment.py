#!/usr/bin/env python3
"""Region precision per (pre-processing, pooling) combination.

Builds a seeded multi-frame pedestrian fixture, learns enhancement
parameters on a validation slice, then scores every combination of
{none, learned, msrcp} pre-processing and {random, average, satsort}
pooling, like a camera-pipeline tuning sweep.
"""
from __future__ import annotations

import argparse
import csv
import sys
import zlib

from colorsearch import imgproc, regions, survey, tree
from colorsearch import search as search_mod
from colorsearch.imgproc import EnhancementGrid, RetinexParams, ValidationSample
from colorsearch.regions import QuantizationParams
from colorsearch.survey import BERLIN_KAY_LABELS
from colorsearch.synth import CLASS_NAMES, generate_identities, synthetic_survey

NAME_TO_IDX = {v: k for k, v in CLASS_NAMES.items()}


def build_tree(seed: int):
    raw = synthetic_survey(n=40_000, seed=seed)
    d = survey.filter_by_frequency(raw, tau=0.95)
    d = survey.remove_outliers(d, k=5, radius=8.0)
    d = survey.resample_smote(d, k=5, seed=seed)
    d = survey.restrict_labels(d, BERLIN_KAY_LABELS)
    return tree.train_tree(d, tree.TreeTrainParams(min_samples_leaf=4, seed=seed))


def extract(fixtures, preprocess, quant):
    out = {}
    for f in fixtures:
        per_class = {}
        for _, img, smap in sorted(f.frames, key=lambda fr: fr[0]):
            for k, part in regions.extract_part_colors(preprocess(img), smap, quant).items():
                per_class.setdefault(k, []).append(part)
        out[f.identity] = per_class
    return out


def score(extracted, fixtures, t, mode, seed):
    truth = [search_mod.PersonRecord(identity=f.identity, labels=dict(f.truth))
             for f in fixtures]
    records = []
    for f in fixtures:
        per_class = extracted[f.identity]
        if not per_class:
            continue
        ident_hash = zlib.crc32(f.identity.encode())
        pooled = {
            CLASS_NAMES[k]: regions.pool_parts(per_class[k], mode, seed=[seed, ident_hash, k])
            for k in sorted(per_class)
        }
        records.append(search_mod.build_record(f.identity, pooled, t, pooling=mode))
    return 100.0 * search_mod.evaluate(records, truth).ras


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--identities", type=int, default=200)
    ap.add_argument("--frames", type=int, default=4)
    ap.add_argument("--washout", type=float, default=0.55,
                    help="camera washout strength (contrast/saturation loss)")
    ap.add_argument("--shadow-prob", type=float, default=0.3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="pooling.csv")
    args = ap.parse_args()

    t = build_tree(args.seed)
    quant = QuantizationParams(seed=args.seed)
    fixtures = list(generate_identities(
        args.identities, frames_per_identity=args.frames, seed=args.seed + 1,
        shadow_prob=args.shadow_prob, washout=args.washout,
    ))
    validation = [
        ValidationSample(image=f.frames[0][1], smap=f.frames[0][2],
                         truth={NAME_TO_IDX[n]: lab for n, lab in f.truth.items()})
        for f in fixtures[: max(10, args.identities // 10)]
    ]
    learned = imgproc.learn_enhancement(validation, t, EnhancementGrid(), quant)
    print(f"learned enhancement: {learned}")

    preprocessors = {
        "none": lambda im: im,
        "learned": lambda im: imgproc.enhance(im, learned),
        "msrcp": lambda im: imgproc.msrcp(im, RetinexParams()),
    }
    rows = []
    for pname, fn in preprocessors.items():
        extracted = extract(fixtures, fn, quant)
        for mode in ("random", "average", "satsort"):
            ras = score(extracted, fixtures, t, mode, args.seed)
            rows.append({"preprocess": pname, "pooling": mode, "ras": round(ras, 2)})
            print(f"{pname:>8} / {mode:<8} RAS = {ras:5.1f}")

    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
