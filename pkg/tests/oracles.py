"""Independent brute-force reference implementations used only by tests.

Everything here is deliberately written with plain loops and none of the
package's code paths, so a test comparing the two routes actually checks
something.
"""
from __future__ import annotations

import math

import numpy as np


def outlier_keep_mask(points: np.ndarray, k: int, radius: float) -> np.ndarray:
    """Per-point keep decision: at least k neighbors within radius (O(n^2))."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    keep = np.zeros(n, dtype=bool)
    for i in range(n):
        neighbors = 0
        for j in range(n):
            if i == j:
                continue
            if math.dist(pts[i], pts[j]) <= radius:
                neighbors += 1
        keep[i] = neighbors >= k
    return keep


def kmeans_plain(points: np.ndarray, k: int, seed: int, max_iters: int):
    """Loop-based K-means with farthest-point init, lowest-index ties."""
    pts = [tuple(map(float, p)) for p in points]
    n = len(pts)
    rng = np.random.default_rng(seed)

    def sqdist(a, b):
        return sum((x - y) ** 2 for x, y in zip(a, b))

    centers = [pts[int(rng.integers(n))]]
    while len(centers) < k:
        best_i, best_d = 0, -1.0
        for i, p in enumerate(pts):
            d = min(sqdist(p, c) for c in centers)
            if d > best_d:
                best_i, best_d = i, d
        centers.append(pts[best_i])

    assign = [-1] * n
    for _ in range(max_iters):
        new_assign = []
        for p in pts:
            dists = [sqdist(p, c) for c in centers]
            new_assign.append(dists.index(min(dists)))
        if new_assign == assign:
            break
        assign = new_assign
        for c in range(k):
            members = [pts[i] for i in range(n) if assign[i] == c]
            if members:
                centers[c] = tuple(sum(col) / len(members) for col in zip(*members))
    return np.asarray(centers), np.asarray(assign)


def reflect_index(i: int, n: int) -> int:
    """Symmetric border reflection: (d c b a | a b c d | d c b a)."""
    period = 2 * n
    i = i % period
    if i >= n:
        i = period - 1 - i
    return i


def gaussian_weight(s: int, t: int, sigma: float) -> float:
    if sigma == 0:
        return 1.0 if (s == 0 and t == 0) else 0.0
    return math.exp(-(s * s + t * t) / (2.0 * sigma * sigma))


def smooth_map_double_sum(assignment: np.ndarray, class_values: list[int],
                          sigma: float, h: int) -> np.ndarray:
    """Direct evaluation of the smoothing responses, one class at a time.

    Returns a (len(class_values), H, W) stack of responses computed with
    the normalized Gaussian kernel and reflected borders.
    """
    a = np.asarray(assignment)
    height, width = a.shape
    weights = np.array(
        [[gaussian_weight(s, t, sigma) for t in range(-h, h + 1)] for s in range(-h, h + 1)]
    )
    weights = weights / weights.sum()
    out = np.zeros((len(class_values), height, width))
    for ci, cls in enumerate(class_values):
        m = (a == cls).astype(float)
        for x in range(height):
            for y in range(width):
                acc = 0.0
                for si, s in enumerate(range(-h, h + 1)):
                    for ti, t in enumerate(range(-h, h + 1)):
                        acc += weights[si, ti] * m[reflect_index(x - s, height),
                                                   reflect_index(y - t, width)]
                out[ci, x, y] = acc
    return out


def nearest_prototype(centroids: dict[str, np.ndarray], rgb) -> str:
    """Classify by nearest per-label centroid (Euclidean in RGB)."""
    best_label, best_d = None, float("inf")
    for label in sorted(centroids):
        d = math.dist(centroids[label], rgb)
        if d < best_d:
            best_label, best_d = label, d
    return best_label


def class_centroids(dataset) -> dict[str, np.ndarray]:
    out = {}
    for code, label in enumerate(dataset.vocab):
        rows = dataset.label_codes == code
        out[label] = dataset.rgb[rows].astype(float).mean(axis=0)
    return out


def enumerate_best_split(x: np.ndarray, y: np.ndarray, criterion: str = "gini"):
    """Exhaustive split search over all channels and midpoint thresholds.

    Returns (best_weighted_impurity, [(channel, threshold), ...]) where the
    list holds every argmin split.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    n = len(y)

    def impurity(labels):
        if len(labels) == 0:
            return 0.0
        _, counts = np.unique(labels, return_counts=True)
        p = counts / counts.sum()
        if criterion == "gini":
            return 1.0 - float(np.sum(p * p))
        return float(-np.sum(p * np.log2(p)))

    best = math.inf
    argmins = []
    for chan in range(3):
        values = sorted(set(int(v) for v in x[:, chan]))
        for a, b in zip(values, values[1:]):
            thr = (a + b) / 2.0
            left = y[x[:, chan] <= thr]
            right = y[x[:, chan] > thr]
            w = (len(left) * impurity(left) + len(right) * impurity(right)) / n
            if w < best - 1e-12:
                best = w
                argmins = [(chan, thr)]
            elif abs(w - best) <= 1e-12:
                argmins.append((chan, thr))
    return best, argmins
