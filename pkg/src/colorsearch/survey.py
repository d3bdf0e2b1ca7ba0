"""Color-name survey ingestion and training-set preparation.

A raw survey dump (RGB triplet + free-form name per row) is reduced to a
training set in four stages: frequency filtering, per-class outlier
removal, SMOTE re-balancing and label restriction.  Every stage returns a
new immutable dataset; stages may be skipped but never reordered.
"""
from __future__ import annotations

import csv
import logging
import re
import sys
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import IO, Iterator, NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import DataError, EmptyDatasetError

log = logging.getLogger(__name__)

#: The 11 basic (prototype) color terms of Berlin and Kay.
BERLIN_KAY_LABELS = frozenset({
    "black", "white", "red", "green", "yellow", "blue",
    "brown", "pink", "orange", "purple", "gray",
})

_WHITESPACE = re.compile(r"\s+")


class Stage(IntEnum):
    """Preparation stages, in the only order they may occur."""

    RAW = 0
    FILTERED = 1
    CLEANED = 2
    RESAMPLED = 3
    RESTRICTED = 4


@dataclass(frozen=True)
class ColorSample:
    r: int
    g: int
    b: int
    label: str


@dataclass(frozen=True)
class DatasetFilterParams:
    """Tunables of the preparation pipeline."""

    tau: float = 0.65
    outlier_k: int = 5
    outlier_radius: float = 8.0
    smote_k: int = 5

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must be in (0, 1], got {self.tau}")
        if self.outlier_k < 1:
            raise ValueError("outlier_k must be >= 1")
        if self.outlier_radius <= 0:
            raise ValueError("outlier_radius must be > 0")
        if self.smote_k < 1:
            raise ValueError("smote_k must be >= 1")


def normalize_label(raw: str) -> str:
    return _WHITESPACE.sub(" ", raw.strip().lower())


def _read_only(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ColorNameDataset:
    """Immutable (rgb, label) sample collection at a known stage.

    Labels are stored as integer codes into a lexicographically sorted
    vocabulary so that identical inputs always yield byte-identical
    arrays.
    """

    rgb: np.ndarray          # (n, 3) uint8, read-only
    label_codes: np.ndarray  # (n,) int32 into vocab, read-only
    vocab: tuple[str, ...]
    stage: Stage = Stage.RAW

    @classmethod
    def from_arrays(cls, rgb: np.ndarray, labels, stage: Stage) -> "ColorNameDataset":
        """Build a dataset from an (n, 3) array and per-row label strings."""
        rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
        labels = np.asarray(labels, dtype=object)
        if rgb.ndim != 2 or rgb.shape[1] != 3 or len(labels) != len(rgb):
            raise ValueError("rgb must be (n, 3) with one label per row")
        vocab, codes = np.unique(labels, return_inverse=True)
        return cls(
            rgb=_read_only(rgb),
            label_codes=_read_only(codes.astype(np.int32)),
            vocab=tuple(str(v) for v in vocab),
            stage=stage,
        )

    def _subset(self, mask_or_idx, stage: Stage) -> "ColorNameDataset":
        rgb = self.rgb[mask_or_idx]
        codes = self.label_codes[mask_or_idx]
        if len(rgb) == 0:
            raise EmptyDatasetError(f"no samples left entering stage {stage.name}")
        present = np.unique(codes)
        vocab = tuple(self.vocab[c] for c in present)
        remap = np.full(len(self.vocab), -1, dtype=np.int32)
        remap[present] = np.arange(len(present), dtype=np.int32)
        return ColorNameDataset(
            rgb=_read_only(np.ascontiguousarray(rgb)),
            label_codes=_read_only(remap[codes]),
            vocab=vocab,
            stage=stage,
        )

    def __len__(self) -> int:
        return len(self.rgb)

    @property
    def label_counts(self) -> dict[str, int]:
        counts = np.bincount(self.label_codes, minlength=len(self.vocab))
        return {lab: int(c) for lab, c in zip(self.vocab, counts)}

    def samples(self) -> Iterator[ColorSample]:
        for (r, g, b), c in zip(self.rgb, self.label_codes):
            yield ColorSample(int(r), int(g), int(b), self.vocab[c])

    def class_rows(self, code: int) -> np.ndarray:
        return np.nonzero(self.label_codes == code)[0]


def _check_stage(d: ColorNameDataset, output: Stage) -> None:
    if d.stage >= output:
        raise ValueError(
            f"cannot move dataset from stage {d.stage.name} to {output.name}: "
            "stages only advance forward"
        )


class ParseResult(NamedTuple):
    dataset: ColorNameDataset
    rows_malformed: int


def parse_survey(source: str | Path | IO) -> ParseResult:
    """Parse a survey dump into a RAW dataset.

    Accepts comma- or tab-delimited rows ``r,g,b,"label"``.  Labels are
    lower-cased, trimmed and internal whitespace collapsed.  Rows with a
    wrong field count, non-integer or out-of-range channels, or an empty
    label are counted as malformed and skipped.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return _parse_stream(fh)
    if hasattr(source, "read") and "b" in getattr(source, "mode", ""):
        import io as _io
        return _parse_stream(_io.TextIOWrapper(source, encoding="utf-8", newline=""))
    return _parse_stream(source)


def _parse_stream(fh: IO[str]) -> ParseResult:
    first = fh.readline()
    if first == "":
        raise EmptyDatasetError("survey source is empty")
    delimiter = "\t" if "\t" in first else ","
    reader = csv.reader(_chain_lines(first, fh), delimiter=delimiter)

    rs: list[int] = []
    gs: list[int] = []
    bs: list[int] = []
    labels: list[str] = []
    malformed = 0
    for row in reader:
        if not row:
            continue
        if len(row) != 4:
            malformed += 1
            continue
        try:
            r, g, b = int(row[0]), int(row[1]), int(row[2])
        except ValueError:
            malformed += 1
            continue
        if not (0 <= r <= 255 and 0 <= g <= 255 and 0 <= b <= 255):
            malformed += 1
            continue
        label = normalize_label(row[3])
        if not label:
            malformed += 1
            continue
        rs.append(r)
        gs.append(g)
        bs.append(b)
        labels.append(sys.intern(label))

    if not rs:
        raise EmptyDatasetError("survey source contains no valid rows")
    rgb = np.column_stack([
        np.asarray(rs, dtype=np.uint8),
        np.asarray(gs, dtype=np.uint8),
        np.asarray(bs, dtype=np.uint8),
    ])
    dataset = ColorNameDataset.from_arrays(rgb, labels, Stage.RAW)
    if malformed:
        log.info("skipped %d malformed survey rows", malformed)
    return ParseResult(dataset, malformed)


def _chain_lines(first: str, fh: IO[str]) -> Iterator[str]:
    yield first
    yield from fh


def filter_by_frequency(d: ColorNameDataset, tau: float) -> ColorNameDataset:
    """Keep the most frequent labels covering a cumulative share >= tau.

    Labels are sorted by descending occurrence (ties by name); the
    smallest prefix whose cumulative sample share reaches tau is kept,
    including the label that crosses the boundary.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    _check_stage(d, Stage.FILTERED)
    counts = np.bincount(d.label_codes, minlength=len(d.vocab))
    # descending count, ascending name; vocab is already name-sorted
    order = np.argsort(-counts, kind="stable")
    cum = np.cumsum(counts[order]) / len(d)
    cutoff = int(np.searchsorted(cum, tau, side="left"))
    kept_codes = order[: cutoff + 1]
    mask = np.isin(d.label_codes, kept_codes)
    return d._subset(mask, Stage.FILTERED)


def remove_outliers(d: ColorNameDataset, k: int = 5, radius: float = 8.0) -> ColorNameDataset:
    """Drop samples with fewer than k same-label neighbors within radius.

    Neighbor counts are computed once on the input (single pass, not
    iterated); duplicates of a point count as zero-distance neighbors.
    Classes with <= k samples are left untouched with a warning, since
    deleting whole rare classes would defeat the later re-balancing.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if radius <= 0:
        raise ValueError("radius must be > 0")
    _check_stage(d, Stage.CLEANED)

    keep = np.zeros(len(d), dtype=bool)
    for code in range(len(d.vocab)):
        rows = d.class_rows(code)
        if len(rows) == 0:
            continue
        if len(rows) <= k:
            log.warning(
                "class %r has only %d samples (<= k=%d); kept unchanged",
                d.vocab[code], len(rows), k,
            )
            keep[rows] = True
            continue
        pts = d.rgb[rows].astype(np.float64)
        cells, inverse, counts = np.unique(
            pts, axis=0, return_inverse=True, return_counts=True
        )
        tree = cKDTree(cells)
        balls = tree.query_ball_point(cells, r=radius, workers=-1)
        flat = np.concatenate([np.asarray(b, dtype=np.intp) for b in balls])
        offsets = np.cumsum([0] + [len(b) for b in balls])[:-1]
        in_ball = np.add.reduceat(counts[flat], offsets)
        # neighbors of a sample = all same-class samples in its ball minus itself
        cell_ok = (in_ball - 1) >= k
        keep[rows] = cell_ok[inverse]
    return d._subset(keep, Stage.CLEANED)


def resample_smote(d: ColorNameDataset, k: int = 5, seed: int = 0) -> ColorNameDataset:
    """Balance every class up to the majority count by SMOTE interpolation.

    Each synthetic sample lies on the segment between an existing sample
    and one of its k nearest same-class neighbors, rounded to integer
    channels.  Original rows are preserved in order; synthetic rows are
    appended grouped by label.  Deterministic for a fixed seed.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_stage(d, Stage.RESAMPLED)

    counts = np.bincount(d.label_codes, minlength=len(d.vocab))
    target = int(counts.max())
    new_rgb = [d.rgb]
    new_codes = [d.label_codes]
    for code in range(len(d.vocab)):
        deficit = target - int(counts[code])
        if deficit <= 0:
            continue
        rows = d.class_rows(code)
        pts = d.rgb[rows].astype(np.float64)
        rng = np.random.default_rng([seed, code])
        if len(rows) == 1:
            log.warning(
                "class %r has a single sample; oversampling by duplication",
                d.vocab[code],
            )
            synth = np.repeat(pts, deficit, axis=0)
        else:
            kq = min(k, len(rows) - 1)
            tree = cKDTree(pts)
            _, nbr = tree.query(pts, k=kq + 1, workers=-1)
            nbr = np.atleast_2d(nbr)[:, 1:]  # drop the self column
            base = rng.integers(0, len(rows), size=deficit)
            pick = rng.integers(0, kq, size=deficit)
            lam = rng.random(deficit)
            other = pts[nbr[base, pick]]
            synth = pts[base] + lam[:, None] * (other - pts[base])
        synth = np.clip(np.rint(synth), 0, 255).astype(np.uint8)
        new_rgb.append(synth)
        new_codes.append(np.full(deficit, code, dtype=np.int32))

    rgb = np.concatenate(new_rgb)
    codes = np.concatenate(new_codes)
    return ColorNameDataset(
        rgb=_read_only(np.ascontiguousarray(rgb)),
        label_codes=_read_only(codes),
        vocab=d.vocab,
        stage=Stage.RESAMPLED,
    )


def restrict_labels(d: ColorNameDataset, labels) -> ColorNameDataset:
    """Keep only samples whose label belongs to the given set."""
    wanted = {normalize_label(l) for l in labels}
    if not wanted:
        raise ValueError("label set must be non-empty")
    _check_stage(d, Stage.RESTRICTED)
    kept_codes = [c for c, lab in enumerate(d.vocab) if lab in wanted]
    if not kept_codes:
        raise EmptyDatasetError("no sample carries any of the requested labels")
    mask = np.isin(d.label_codes, np.asarray(kept_codes, dtype=np.int32))
    return d._subset(mask, Stage.RESTRICTED)


def subsample(d: ColorNameDataset, n: int, seed: int = 0) -> ColorNameDataset:
    """Uniform random subsample of n rows (without replacement), seeded."""
    if n <= 0:
        raise ValueError("n must be positive")
    if n >= len(d):
        return d
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(d), size=n, replace=False))
    labels = [d.vocab[c] for c in d.label_codes[idx]]
    return ColorNameDataset.from_arrays(d.rgb[idx], labels, d.stage)


_HEADER_PREFIX = "# colorsearch-dataset v1"


def save_dataset(d: ColorNameDataset, path: str | Path, params: dict | None = None) -> None:
    """Write the dataset as delimited text with a one-line header.

    The header records the stage, row count, and any preparation
    parameters (tau, k, radius, seed) passed in ``params``.
    """
    path = Path(path)
    extra = "".join(
        f" {key}={params[key]}" for key in sorted(params or {})
    )
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"{_HEADER_PREFIX} stage={d.stage.name.lower()} rows={len(d)}{extra}\n")
        writer = csv.writer(fh, quoting=csv.QUOTE_NONNUMERIC)
        vocab = d.vocab
        for (r, g, b), c in zip(d.rgb, d.label_codes):
            writer.writerow([int(r), int(g), int(b), vocab[c]])
    tmp.replace(path)


def load_dataset(path: str | Path) -> tuple[ColorNameDataset, dict[str, str]]:
    """Load a dataset written by :func:`save_dataset`."""
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith(_HEADER_PREFIX):
            raise DataError(f"{path}: not a colorsearch dataset file")
        fields = dict(
            part.split("=", 1) for part in header[len(_HEADER_PREFIX):].split() if "=" in part
        )
        try:
            stage = Stage[fields.pop("stage").upper()]
            rows = int(fields.pop("rows"))
        except (KeyError, ValueError) as exc:
            raise DataError(f"{path}: malformed dataset header") from exc
        result = _parse_stream_body(fh, path)
    if len(result) != rows:
        raise DataError(f"{path}: header says {rows} rows, found {len(result)}")
    rgb, labels = result.arrays()
    return ColorNameDataset.from_arrays(rgb, labels, stage), fields


class _Body:
    def __init__(self):
        self.rs, self.gs, self.bs, self.labels = [], [], [], []

    def __len__(self):
        return len(self.rs)

    def arrays(self):
        rgb = np.column_stack([
            np.asarray(self.rs, dtype=np.uint8),
            np.asarray(self.gs, dtype=np.uint8),
            np.asarray(self.bs, dtype=np.uint8),
        ])
        return rgb, self.labels


def _parse_stream_body(fh: IO[str], path: Path) -> _Body:
    body = _Body()
    reader = csv.reader(fh)
    for row in reader:
        if not row:
            continue
        if len(row) != 4:
            raise DataError(f"{path}: malformed row {row!r}")
        try:
            r, g, b = int(float(row[0])), int(float(row[1])), int(float(row[2]))
        except ValueError as exc:
            raise DataError(f"{path}: malformed row {row!r}") from exc
        body.rs.append(r)
        body.gs.append(g)
        body.bs.append(b)
        body.labels.append(sys.intern(row[3]))
    if not body.rs:
        raise EmptyDatasetError(f"{path}: dataset file has no rows")
    return body
