"""Binary decision tree over 8-bit RGB triplets.

Training is greedy top-down induction with exact split search: candidate
thresholds are the midpoints between consecutive distinct channel values,
scored by Gini impurity or entropy via per-channel histograms.  Inference
uses channel comparisons only (no distance computations), so a triplet is
routed to exactly one leaf whose label distribution is the prediction.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO

import numpy as np

from .errors import EmptyDatasetError, TreeFormatError
from .survey import ColorNameDataset

CHANNEL_NAMES = ("R", "G", "B")
_FORMAT = "colorsearch-tree"
_VERSION = 1


@dataclass(frozen=True)
class TreeTrainParams:
    max_depth: int = 16
    min_samples_leaf: int = 32
    criterion: str = "gini"  # "gini" or "entropy"
    seed: int = 0

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.criterion not in ("gini", "entropy"):
            raise ValueError(f"unknown criterion {self.criterion!r}")


@dataclass(frozen=True)
class ColorPrediction:
    """Ranked (label, probability) pairs, descending probability.

    Ties are broken lexicographically by label; zero-probability labels
    are omitted, so the listed probabilities sum to 1.
    """

    ranked: tuple[tuple[str, float], ...]

    @property
    def top(self) -> str:
        return self.ranked[0][0]

    @property
    def top_probability(self) -> float:
        return self.ranked[0][1]


@dataclass
class DecisionTree:
    """Array-of-nodes tree.  feature == -1 marks a leaf."""

    feature: np.ndarray    # (n,) int8: 0/1/2 channel index, -1 for leaves
    threshold: np.ndarray  # (n,) float64
    left: np.ndarray       # (n,) int32, -1 for leaves
    right: np.ndarray      # (n,) int32, -1 for leaves
    dist: np.ndarray       # (n, L) float64 label distribution at each node
    count: np.ndarray      # (n,) int64 training samples reaching each node
    labels: tuple[str, ...]
    meta: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature == -1))

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int32)
        for i in range(self.n_nodes):
            if self.feature[i] != -1:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max(initial=0))

    def _top1(self) -> np.ndarray:
        # argmax returns the first maximum; labels are sorted, so ties
        # resolve lexicographically
        return np.argmax(self.dist, axis=1).astype(np.int32)


def _impurity(counts: np.ndarray, criterion: str) -> np.ndarray:
    """Impurity of count rows (..., L); zero-total rows yield 0."""
    total = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(total > 0, counts / np.maximum(total, 1), 0.0)
        if criterion == "gini":
            out = 1.0 - np.sum(p * p, axis=-1)
        else:
            out = -np.sum(np.where(p > 0, p * np.log2(np.maximum(p, 1e-300)), 0.0), axis=-1)
    return np.where(total[..., 0] > 0, out, 0.0)


def _best_split(x: np.ndarray, y: np.ndarray, n_labels: int,
                min_leaf: int, criterion: str):
    """Return (weighted_child_impurity, channel, threshold) or None."""
    n = len(y)
    best = None
    for chan in range(3):
        comb = x[:, chan].astype(np.int64) * n_labels + y
        hist = np.bincount(comb, minlength=256 * n_labels).reshape(256, n_labels)
        present = np.nonzero(hist.sum(axis=1) > 0)[0]
        if len(present) < 2:
            continue
        cum = np.cumsum(hist, axis=0)
        cand = present[:-1]
        thresholds = (cand + present[1:]) / 2.0
        left_counts = cum[cand]
        right_counts = hist.sum(axis=0)[None, :] - left_counts
        n_left = left_counts.sum(axis=1)
        n_right = n - n_left
        valid = (n_left >= min_leaf) & (n_right >= min_leaf)
        if not valid.any():
            continue
        w = (
            n_left * _impurity(left_counts, criterion)
            + n_right * _impurity(right_counts, criterion)
        ) / n
        w = np.where(valid, w, np.inf)
        i = int(np.argmin(w))
        if best is None or w[i] < best[0]:
            best = (float(w[i]), chan, float(thresholds[i]))
    if best is None or not np.isfinite(best[0]):
        return None
    return best


def dataset_fingerprint(d: ColorNameDataset) -> str:
    h = hashlib.sha256()
    h.update(",".join(d.vocab).encode())
    h.update(d.rgb.tobytes())
    h.update(d.label_codes.tobytes())
    h.update(d.stage.name.encode())
    return h.hexdigest()[:16]


def train_tree(d: ColorNameDataset, params: TreeTrainParams = TreeTrainParams()) -> DecisionTree:
    """Greedy top-down CART induction on a prepared dataset.

    Deterministic: node order, split choice and tie-breaks (channel
    order R,G,B then lowest threshold) depend only on the data and
    params.
    """
    if len(d) == 0:
        raise EmptyDatasetError("cannot train on an empty dataset")
    x = d.rgb
    y = d.label_codes
    n_labels = len(d.vocab)

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    dist: list[np.ndarray] = []
    count: list[int] = []

    def new_node(idx: np.ndarray) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts = np.bincount(y[idx], minlength=n_labels).astype(np.float64)
        dist.append(counts / counts.sum())
        count.append(len(idx))
        return node

    root_idx = np.arange(len(d), dtype=np.intp)
    stack = [(new_node(root_idx), root_idx, 0)]
    while stack:
        node, idx, depth = stack.pop()
        n = len(idx)
        counts = np.bincount(y[idx], minlength=n_labels)
        parent_imp = float(_impurity(counts.astype(np.float64), params.criterion))
        if (
            depth >= params.max_depth
            or n < 2 * params.min_samples_leaf
            or parent_imp <= 0.0
        ):
            continue
        split = _best_split(x[idx], y[idx], n_labels, params.min_samples_leaf, params.criterion)
        if split is None or split[0] >= parent_imp - 1e-12:
            continue
        _, chan, thr = split
        go_left = x[idx, chan] <= thr
        li = new_node(idx[go_left])
        ri = new_node(idx[~go_left])
        feature[node] = chan
        threshold[node] = thr
        left[node] = li
        right[node] = ri
        stack.append((ri, idx[~go_left], depth + 1))
        stack.append((li, idx[go_left], depth + 1))

    return DecisionTree(
        feature=np.asarray(feature, dtype=np.int8),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        dist=np.asarray(dist, dtype=np.float64),
        count=np.asarray(count, dtype=np.int64),
        labels=d.vocab,
        meta={
            "params": {
                "max_depth": params.max_depth,
                "min_samples_leaf": params.min_samples_leaf,
                "criterion": params.criterion,
                "seed": params.seed,
            },
            "n_samples": len(d),
            "dataset_fingerprint": dataset_fingerprint(d),
        },
    )


def _check_rgb(rgb) -> tuple[int, int, int]:
    r, g, b = rgb
    for v in (r, g, b):
        if not 0 <= v <= 255:
            raise ValueError(f"channel value {v} outside [0, 255]")
    return int(r), int(g), int(b)


def route(tree: DecisionTree, rgb) -> int:
    """Index of the leaf an RGB triplet reaches."""
    r, g, b = _check_rgb(rgb)
    vals = (r, g, b)
    node = 0
    while tree.feature[node] != -1:
        if vals[tree.feature[node]] <= tree.threshold[node]:
            node = int(tree.left[node])
        else:
            node = int(tree.right[node])
    return node


def classify(tree: DecisionTree, rgb) -> ColorPrediction:
    """Leaf label distribution for one triplet, ranked."""
    leaf = route(tree, rgb)
    probs = tree.dist[leaf]
    order = sorted(
        (i for i in range(len(probs)) if probs[i] > 0),
        key=lambda i: (-probs[i], tree.labels[i]),
    )
    return ColorPrediction(tuple((tree.labels[i], float(probs[i])) for i in order))


def classify_batch(tree: DecisionTree, rgb: np.ndarray) -> np.ndarray:
    """Top-1 label codes for an (n, 3) array of triplets.

    Vectorized iterative routing; this is the throughput path.
    """
    rgb = np.asarray(rgb)
    if rgb.ndim != 2 or rgb.shape[1] != 3:
        raise ValueError("expected an (n, 3) array")
    node = np.zeros(len(rgb), dtype=np.int32)
    vals = rgb.astype(np.int16)
    while True:
        feat = tree.feature[node]
        active = feat != -1
        if not active.any():
            break
        an = node[active]
        af = feat[active]
        v = vals[active, af]
        go_left = v <= tree.threshold[an]
        node[active] = np.where(go_left, tree.left[an], tree.right[an])
    return tree._top1()[node]


def decision_path(tree: DecisionTree, rgb) -> list[str]:
    """Root-to-leaf comparisons explaining a prediction."""
    r, g, b = _check_rgb(rgb)
    vals = (r, g, b)
    node = 0
    clauses: list[str] = []
    while tree.feature[node] != -1:
        chan = int(tree.feature[node])
        thr = tree.threshold[node]
        if vals[chan] <= thr:
            clauses.append(f"{CHANNEL_NAMES[chan]} <= {thr:g}")
            node = int(tree.left[node])
        else:
            clauses.append(f"{CHANNEL_NAMES[chan]} > {thr:g}")
            node = int(tree.right[node])
    return clauses


def evaluate_accuracy(tree: DecisionTree, d: ColorNameDataset) -> float:
    """Top-1 accuracy of the tree on a labeled dataset."""
    code_of = {lab: i for i, lab in enumerate(tree.labels)}
    truth = np.asarray([code_of.get(d.vocab[c], -1) for c in d.label_codes])
    pred = classify_batch(tree, d.rgb)
    return float(np.mean(pred == truth))


def validate(tree: DecisionTree) -> None:
    """Raise if the node array is not a proper binary tree."""
    n = tree.n_nodes
    if n == 0:
        raise TreeFormatError("tree has no nodes")
    seen = np.zeros(n, dtype=np.int8)
    internal = tree.feature != -1
    for i in range(n):
        if internal[i]:
            li, ri = int(tree.left[i]), int(tree.right[i])
            if not (0 <= li < n and 0 <= ri < n) or li <= i or ri <= i:
                raise TreeFormatError(f"node {i}: bad child indices {li}, {ri}")
            seen[li] += 1
            seen[ri] += 1
            if not 0.0 <= tree.threshold[i] <= 255.0:
                raise TreeFormatError(f"node {i}: threshold outside [0, 255]")
        else:
            if tree.left[i] != -1 or tree.right[i] != -1:
                raise TreeFormatError(f"leaf {i} has children")
    if seen[0] != 0 or not np.all(seen[1:] == 1):
        raise TreeFormatError("node array is not a single-rooted binary tree")
    sums = tree.dist[tree.feature == -1].sum(axis=1)
    if not np.allclose(sums, 1.0, atol=1e-9):
        raise TreeFormatError("leaf distributions must sum to 1")


def save_tree(tree: DecisionTree, sink: str | Path | IO[str]) -> None:
    """Persist as a self-describing JSON document."""
    doc = {
        "format": _FORMAT,
        "version": _VERSION,
        "labels": list(tree.labels),
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "count": tree.count.tolist(),
        "dist": [row.tolist() for row in tree.dist],
        "meta": tree.meta,
    }
    text = json.dumps(doc, sort_keys=True)
    if isinstance(sink, (str, Path)):
        path = Path(sink)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(text, encoding="utf-8")
        tmp.replace(path)
    else:
        sink.write(text)


def load_tree(source: str | Path | IO[str]) -> DecisionTree:
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TreeFormatError(f"corrupt tree file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != _FORMAT:
        raise TreeFormatError("not a colorsearch tree file")
    if doc.get("version") != _VERSION:
        raise TreeFormatError(
            f"unsupported tree format version {doc.get('version')!r} (expected {_VERSION})"
        )
    try:
        tree = DecisionTree(
            feature=np.asarray(doc["feature"], dtype=np.int8),
            threshold=np.asarray(doc["threshold"], dtype=np.float64),
            left=np.asarray(doc["left"], dtype=np.int32),
            right=np.asarray(doc["right"], dtype=np.int32),
            dist=np.asarray(doc["dist"], dtype=np.float64),
            count=np.asarray(doc["count"], dtype=np.int64),
            labels=tuple(doc["labels"]),
            meta=doc.get("meta", {}),
        )
    except (KeyError, ValueError) as exc:
        raise TreeFormatError(f"corrupt tree file: {exc}") from exc
    validate(tree)
    return tree


def export_dot(tree: DecisionTree) -> str:
    """Graphviz DOT rendering of the tree for visualization."""
    lines = ["digraph color_tree {", '  node [shape=box, fontname="sans-serif"];']
    top1 = tree._top1()
    for i in range(tree.n_nodes):
        if tree.feature[i] != -1:
            label = f"{CHANNEL_NAMES[tree.feature[i]]} <= {tree.threshold[i]:g}"
            lines.append(f'  n{i} [label="{label}\\nn={tree.count[i]}"];')
            lines.append(f"  n{i} -> n{tree.left[i]} [label=yes];")
            lines.append(f"  n{i} -> n{tree.right[i]} [label=no];")
        else:
            lab = tree.labels[top1[i]]
            p = tree.dist[i, top1[i]]
            lines.append(
                f'  n{i} [style=filled, label="{lab}\\np={p:.2f} n={tree.count[i]}"];'
            )
    lines.append("}")
    return "\n".join(lines) + "\n"


def split_dataset(d: ColorNameDataset, test_fraction: float, seed: int) -> tuple[ColorNameDataset, ColorNameDataset]:
    """Seeded train/test split preserving the stage tag."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(d))
    n_test = max(1, int(round(len(d) * test_fraction)))
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    if len(train_idx) == 0:
        raise EmptyDatasetError("split left no training rows")

    def take(idx):
        labels = [d.vocab[c] for c in d.label_codes[idx]]
        return ColorNameDataset.from_arrays(d.rgb[idx], labels, d.stage)

    return take(train_idx), take(test_idx)
