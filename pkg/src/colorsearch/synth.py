"""Synthetic data generators for experiments and offline testing.

Two generators: a noisy crowd-survey-style color-name dataset (clustered
shades per basic color term, junk names, mislabeled rows) and rendered
pedestrian crops with part masks, per-frame illumination jitter, shadow
frames and an optional washed-out camera model.  Both are fully seeded.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .regions import BACKGROUND, SemanticMap
from .survey import ColorNameDataset, Stage

#: Shade clusters per basic color term (survey generator).
SHADES: dict[str, list[tuple[int, int, int]]] = {
    "black":  [(10, 10, 10), (25, 22, 28), (8, 12, 18)],
    "white":  [(245, 245, 245), (235, 240, 235), (250, 248, 240)],
    "red":    [(205, 35, 40), (230, 25, 55), (170, 30, 35)],
    "green":  [(40, 160, 60), (25, 120, 45), (90, 180, 60)],
    "yellow": [(235, 225, 45), (250, 240, 80), (210, 195, 40)],
    "blue":   [(35, 70, 200), (20, 110, 220), (50, 50, 160)],
    "brown":  [(120, 75, 35), (95, 60, 30), (140, 95, 50)],
    "pink":   [(245, 150, 185), (250, 120, 160), (235, 175, 205)],
    "orange": [(245, 140, 30), (255, 115, 20), (225, 160, 45)],
    "purple": [(130, 45, 170), (100, 30, 140), (160, 80, 200)],
    "gray":   [(128, 128, 128), (105, 110, 115), (160, 160, 155)],
}

#: Representative triplet per label, used as fixture part colors.
PALETTE: dict[str, tuple[int, int, int]] = {name: shades[0] for name, shades in SHADES.items()}

_FREQUENCIES = {
    "black": 0.14, "white": 0.12, "red": 0.12, "green": 0.12, "blue": 0.13,
    "yellow": 0.09, "gray": 0.08, "purple": 0.07, "orange": 0.06,
    "brown": 0.04, "pink": 0.03,
}

_JUNK_NAMES = [f"junk{i:03d}" for i in range(160)]


def synthetic_survey(n: int = 40000, seed: int = 0, spread: float = 14.0,
                     mislabel_rate: float = 0.04, junk_rate: float = 0.03) -> ColorNameDataset:
    """Noisy raw survey-style dataset over the 11 basic color terms.

    junk_rate of the rows carry rare throwaway names on random colors
    (removed by the frequency filter); mislabel_rate carry a wrong basic
    term (removed by outlier cleaning).  Class frequencies are skewed so
    re-balancing has something to do.
    """
    rng = np.random.default_rng(seed)
    names = list(_FREQUENCIES)
    probs = np.asarray([_FREQUENCIES[l] for l in names])
    probs = probs / probs.sum()

    which = rng.choice(len(names), size=n, p=probs)
    rgb = np.empty((n, 3), dtype=np.float64)
    labels = np.empty(n, dtype=object)
    for i, name in enumerate(names):
        rows = np.nonzero(which == i)[0]
        shades = np.asarray(SHADES[name], dtype=np.float64)
        pick = rng.integers(len(shades), size=len(rows))
        rgb[rows] = shades[pick] + rng.normal(0.0, spread, size=(len(rows), 3))
        labels[rows] = name

    flip = rng.random(n) < mislabel_rate
    for row in np.nonzero(flip)[0]:
        others = [l for l in names if l != labels[row]]
        labels[row] = others[int(rng.integers(len(others)))]

    junk = rng.random(n) < junk_rate
    junk_rows = np.nonzero(junk)[0]
    rgb[junk_rows] = rng.uniform(0, 255, size=(len(junk_rows), 3))
    for row in junk_rows:
        labels[row] = _JUNK_NAMES[int(rng.integers(len(_JUNK_NAMES)))]

    rgb = np.clip(np.rint(rgb), 0, 255).astype(np.uint8)
    return ColorNameDataset.from_arrays(rgb, labels, Stage.RAW)


def write_survey_csv(d: ColorNameDataset, path: str | Path, delimiter: str = ",") -> None:
    """Dump a dataset in the raw survey format (no header)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter, quoting=csv.QUOTE_NONNUMERIC)
        for (r, g, b), c in zip(d.rgb, d.label_codes):
            writer.writerow([int(r), int(g), int(b), d.vocab[c]])


# --- pedestrian crop fixtures -----------------------------------------------

CLASS_NAMES = {0: "hair", 1: "upper", 2: "lower", 3: "shoes"}
_PART_LABELS = {
    "hair": ("black", "brown", "yellow"),
    "upper": ("red", "blue", "green", "yellow", "purple", "orange", "pink", "white", "black"),
    "lower": ("blue", "black", "brown", "red", "purple", "white"),
    "shoes": ("black", "white", "brown", "red"),
}
_SKIN = (172, 124, 96)
_BG_COLORS = [(112, 116, 108), (96, 96, 100), (130, 125, 115), (88, 104, 92)]


@dataclass
class IdentityFixture:
    identity: str
    frames: list[tuple[str, np.ndarray, SemanticMap]]
    truth: dict[str, str]  # class name -> color label
    part_rgb: dict[str, tuple[int, int, int]] = field(default_factory=dict)


def _person_boxes(height: int, width: int, scale: float):
    """Part rectangles (row0, row1, col0, col1) for a person-shaped layout.

    The lower body and shoes are split into two components separated by a
    background gap, like real legs, so blurred masks behave like real
    segmentation output.
    """
    person_h = min(height, int(height * scale))
    person_w = min(width - 2, int(width * (0.55 + 0.4 * scale)))
    top = (height - person_h) // 2
    left = (width - person_w) // 2

    def rows(a, b):
        return top + int(a * person_h), top + int(b * person_h)

    head_inset = person_w // 4
    gap = max(4, person_w // 4)
    leg_w = (person_w - gap) // 2
    boxes: dict[str, list[tuple[int, int, int, int]]] = {}
    r0, r1 = rows(0.00, 0.10)
    boxes["hair"] = [(r0, r1, left + head_inset, left + person_w - head_inset)]
    r0, r1 = rows(0.10, 0.22)
    boxes["face"] = [(r0, r1, left + head_inset, left + person_w - head_inset)]
    r0, r1 = rows(0.22, 0.56)
    boxes["upper"] = [(r0, r1, left, left + person_w)]
    r0, r1 = rows(0.56, 0.92)
    boxes["lower"] = [
        (r0, r1, left, left + leg_w),
        (r0, r1, left + person_w - leg_w, left + person_w),
    ]
    r0, r1 = rows(0.92, 1.00)
    boxes["shoes"] = [
        (r0, r1, left, left + leg_w),
        (r0, r1, left + person_w - leg_w, left + person_w),
    ]
    return boxes


def render_person(rng: np.random.Generator, part_rgb: dict[str, tuple[int, int, int]],
                  height: int = 128, width: int = 64, scale: float = 1.0,
                  bg: tuple[int, int, int] = _BG_COLORS[0],
                  noise: float = 6.0) -> tuple[np.ndarray, SemanticMap]:
    """Draw one crop and its semantic map (face is unlabeled skin)."""
    img = np.empty((height, width, 3), dtype=np.float64)
    img[:] = bg
    assignment = np.full((height, width), BACKGROUND, dtype=np.int16)

    name_to_idx = {v: k for k, v in CLASS_NAMES.items()}
    for name in ("hair", "face", "upper", "lower", "shoes"):
        color = _SKIN if name == "face" else part_rgb[name]
        for r0, r1, c0, c1 in _person_boxes(height, width, scale)[name]:
            img[r0:r1, c0:c1] = color
            if name != "face":
                assignment[r0:r1, c0:c1] = name_to_idx[name]

    img += rng.normal(0.0, noise, size=img.shape)
    img = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    return img, SemanticMap(assignment=assignment, n_classes=len(CLASS_NAMES))


def _degrade(img: np.ndarray, gain: float, washout: float | None,
             rng: np.random.Generator) -> np.ndarray:
    """Camera model: illumination gain, optional low-contrast desaturation."""
    out = img.astype(np.float64) * gain
    if washout is not None:
        out = 128.0 + washout * (out - 128.0)
        mean = out.mean(axis=2, keepdims=True)
        out = mean + washout * (out - mean)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def generate_identities(n_identities: int, frames_per_identity: int = 1, seed: int = 0,
                        shadow_prob: float = 0.0, washout: float | None = None,
                        height: int = 128, width: int = 64,
                        scale_range: tuple[float, float] = (0.92, 1.0),
                        noise: float = 6.0) -> Iterator[IdentityFixture]:
    """Seeded stream of rendered identities with ground-truth part labels."""
    rng = np.random.default_rng(seed)
    part_names = list(_PART_LABELS)
    for i in range(n_identities):
        identity = f"id{i:04d}"
        labels = {
            name: _PART_LABELS[name][int(rng.integers(len(_PART_LABELS[name])))]
            for name in part_names
        }
        part_rgb = {name: PALETTE[lab] for name, lab in labels.items()}
        bg = _BG_COLORS[int(rng.integers(len(_BG_COLORS)))]
        scale = float(rng.uniform(*scale_range))
        frames = []
        for j in range(frames_per_identity):
            img, smap = render_person(
                rng, part_rgb, height=height, width=width, scale=scale, bg=bg, noise=noise,
            )
            if shadow_prob > 0 and rng.random() < shadow_prob:
                gain = float(rng.uniform(0.3, 0.45))
            else:
                gain = float(rng.uniform(0.9, 1.1))
            img = _degrade(img, gain, washout, rng)
            frames.append((f"f{j:03d}", img, smap))
        truth = {name: labels[name] for name in ("hair", "upper", "lower", "shoes")}
        yield IdentityFixture(identity=identity, frames=frames, truth=truth,
                              part_rgb=part_rgb)


def write_fixture_tree(root: Path, fixtures: list[IdentityFixture]) -> dict[str, Path]:
    """Materialize fixtures as images/masks/manifest/truth on disk."""
    from . import io as cio
    from .search import PersonRecord, save_records

    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "masks").mkdir(parents=True, exist_ok=True)
    manifest_rows = ["identity,frame,image,mask"]
    truth_records = []
    for fx in fixtures:
        for frame_id, img, smap in fx.frames:
            img_rel = f"images/{fx.identity}_{frame_id}.png"
            mask_rel = f"masks/{fx.identity}_{frame_id}.png"
            cio.save_image(img, root / img_rel)
            cio.save_semantic_map(smap, root / mask_rel)
            manifest_rows.append(f"{fx.identity},{frame_id},{img_rel},{mask_rel}")
        truth_records.append(PersonRecord(identity=fx.identity, labels=dict(fx.truth)))
    (root / "manifest.csv").write_text("\n".join(manifest_rows) + "\n", encoding="utf-8")
    cio.save_class_names(CLASS_NAMES, root / "classes.txt")
    save_records(truth_records, root / "truth.jsonl")
    return {
        "manifest": root / "manifest.csv",
        "class_names": root / "classes.txt",
        "truth": root / "truth.jsonl",
    }
