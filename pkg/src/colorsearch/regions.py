"""Per-part color extraction from semantically segmented images.

A semantic map assigns each pixel a part class (or background).  Masks
are eroded to avoid border bleed, the masked pixels are quantized with
K-means in RGB space, and the biggest cluster's centre becomes the part
color.  Multi-frame part colors can be pooled, and maps can be degraded
with Gaussian semantic smoothing to study robustness to bad segmentation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import EmptyRegionError

#: Sentinel class index for pixels belonging to no part.
BACKGROUND = 255

POOLING_MODES = ("random", "average", "satsort")


@dataclass(frozen=True)
class QuantizationParams:
    kmeans_k: int = 5
    erosion_radius: int = 2
    max_iters: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.kmeans_k < 1:
            raise ValueError("kmeans_k must be >= 1")
        if self.erosion_radius < 0:
            raise ValueError("erosion_radius must be >= 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class SmoothingParams:
    """Gaussian smoothing of class maps; half_size defaults to ceil(3*sigma)."""

    sigma: float = 0.0
    half_size: int | None = None

    def __post_init__(self):
        if not math.isfinite(self.sigma) or self.sigma < 0:
            raise ValueError("sigma must be finite and >= 0")
        if self.half_size is not None and self.half_size < math.ceil(3 * self.sigma):
            raise ValueError("half_size must be >= ceil(3*sigma)")

    @property
    def resolved_half_size(self) -> int:
        if self.half_size is not None:
            return self.half_size
        return math.ceil(3 * self.sigma)


@dataclass(frozen=True)
class PartColor:
    class_index: int
    rgb: tuple[int, int, int]
    share: float  # fraction of masked pixels in the winning cluster


@dataclass(frozen=True)
class SemanticMap:
    """Per-pixel class assignment in [0, n_classes) plus BACKGROUND."""

    assignment: np.ndarray  # (h, w) integer array
    n_classes: int

    def __post_init__(self):
        if not 1 <= self.n_classes < BACKGROUND:
            raise ValueError(f"n_classes must be in [1, {BACKGROUND})")
        a = np.asarray(self.assignment)
        if a.ndim != 2:
            raise ValueError("assignment must be a 2-d array")
        bad = (a >= self.n_classes) & (a != BACKGROUND)
        if bad.any() or (a < 0).any():
            raise ValueError("assignment values must be in [0, n_classes) or BACKGROUND")
        a = np.ascontiguousarray(a, dtype=np.uint8)
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)

    @property
    def shape(self) -> tuple[int, int]:
        return self.assignment.shape

    def mask(self, class_index: int) -> np.ndarray:
        return self.assignment == class_index

    def present_classes(self) -> list[int]:
        vals = np.unique(self.assignment)
        return [int(v) for v in vals if v != BACKGROUND]


def disc_element(radius: int) -> np.ndarray:
    """Boolean disc: offsets with dx^2 + dy^2 <= radius^2."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    r = int(radius)
    yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
    return (yy * yy + xx * xx) <= r * r


def erode_mask(mask: np.ndarray, radius: int) -> np.ndarray:
    """Morphological erosion by a disc; radius 0 is the identity."""
    mask = np.asarray(mask, dtype=bool)
    if radius == 0:
        return mask.copy()
    return ndimage.binary_erosion(mask, structure=disc_element(radius), border_value=0)


def _luma(rgb: np.ndarray) -> np.ndarray:
    return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]


def kmeans_rgb(pixels: np.ndarray, k: int, seed: int, max_iters: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded K-means with farthest-point initialization.

    Returns (centers (k, 3), assignment (n,)).  Duplicate inputs may
    collapse several centers onto one point; empty clusters keep their
    previous center.  Assignment ties go to the lowest center index, so
    the result is deterministic for a fixed seed.
    """
    pts = np.asarray(pixels, dtype=np.float64)
    n = len(pts)
    rng = np.random.default_rng(seed)
    centers = np.empty((k, 3), dtype=np.float64)
    centers[0] = pts[rng.integers(n)]
    d2 = np.sum((pts - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        centers[i] = pts[int(np.argmax(d2))]
        d2 = np.minimum(d2, np.sum((pts - centers[i]) ** 2, axis=1))

    assign = np.full(n, -1, dtype=np.int32)
    for _ in range(max_iters):
        dist = np.sum((pts[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_assign = np.argmin(dist, axis=1).astype(np.int32)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(k):
            members = pts[assign == c]
            if len(members):
                centers[c] = members.mean(axis=0)
    return centers, assign


def dominant_color(img: np.ndarray, mask: np.ndarray, p: QuantizationParams,
                   class_index: int = -1) -> PartColor:
    """Centre of the biggest K-means cluster over the masked pixels.

    Cluster-size ties are broken toward the lower-luminance centre.  The
    mask is used as given; erode beforehand (see extract_part_colors).
    """
    mask = np.asarray(mask, dtype=bool)
    pixels = np.asarray(img)[mask]
    if len(pixels) == 0:
        raise EmptyRegionError("mask selects no pixels")
    centers, assign = kmeans_rgb(pixels, p.kmeans_k, p.seed, p.max_iters)
    sizes = np.bincount(assign, minlength=p.kmeans_k)
    biggest = sizes.max()
    tied = np.nonzero(sizes == biggest)[0]
    winner = tied[int(np.argmin(_luma(centers[tied])))]
    rgb = np.clip(np.rint(centers[winner]), 0, 255).astype(int)
    return PartColor(
        class_index=class_index,
        rgb=(int(rgb[0]), int(rgb[1]), int(rgb[2])),
        share=float(biggest / len(pixels)),
    )


def extract_part_colors(img: np.ndarray, smap: SemanticMap,
                        p: QuantizationParams) -> dict[int, PartColor]:
    """Dominant color per part class; fully-eroded parts are skipped."""
    if np.asarray(img).shape[:2] != smap.shape:
        raise ValueError("image and semantic map dimensions differ")
    out: dict[int, PartColor] = {}
    for k in smap.present_classes():
        eroded = erode_mask(smap.mask(k), p.erosion_radius)
        if not eroded.any():
            continue
        out[k] = dominant_color(img, eroded, p, class_index=k)
    return out


def saturation(rgb) -> float:
    """HSV-style saturation of an RGB triplet: (max-min)/max, 0 for black."""
    mx = max(rgb)
    if mx == 0:
        return 0.0
    return (mx - min(rgb)) / mx


def pool_parts(frames: Sequence[PartColor], mode: str, seed=0,
               top_m: int = 3) -> tuple[int, int, int]:
    """Combine one part's dominant colors across frames into one triplet.

    random: one seeded-uniformly chosen frame's color.
    average: per-channel mean over all frames, rounded.
    satsort: per-channel mean of the top_m most saturated frame colors.

    The caller provides frames in a canonical order (sorted by frame id);
    random picks depend only on that order and the seed.
    """
    if not frames:
        raise ValueError("cannot pool an empty frame collection")
    if mode not in POOLING_MODES:
        raise ValueError(f"unknown pooling mode {mode!r}")
    colors = np.asarray([f.rgb for f in frames], dtype=np.float64)
    if mode == "random":
        rng = np.random.default_rng(seed)
        pick = int(rng.integers(len(frames)))
        chosen = colors[pick]
    elif mode == "average":
        chosen = colors.mean(axis=0)
    else:
        if top_m < 1:
            raise ValueError("top_m must be >= 1")
        sats = np.asarray([saturation(f.rgb) for f in frames])
        order = np.argsort(-sats, kind="stable")
        chosen = colors[order[:top_m]].mean(axis=0)
    rgb = np.clip(np.rint(chosen), 0, 255).astype(int)
    return (int(rgb[0]), int(rgb[1]), int(rgb[2]))


def gaussian_kernel_1d(sigma: float, half_size: int) -> np.ndarray:
    """Normalized 1-d Gaussian on [-h, h]; sigma 0 gives a unit impulse."""
    if sigma == 0:
        k = np.zeros(2 * half_size + 1)
        k[half_size] = 1.0
        return k
    offsets = np.arange(-half_size, half_size + 1, dtype=np.float64)
    k = np.exp(-(offsets ** 2) / (2.0 * sigma * sigma))
    return k / k.sum()


def _convolve_reflect(field: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable 2-d convolution with symmetric (reflected) borders."""
    h = (len(kernel) - 1) // 2
    if h == 0:
        return field * kernel[0]
    out = field
    for axis in (0, 1):
        padding = [(0, 0), (0, 0)]
        padding[axis] = (h, h)
        padded = np.pad(out, padding, mode="symmetric")
        windows = np.lib.stride_tricks.sliding_window_view(padded, len(kernel), axis=axis)
        out = windows @ kernel
    return out


def smooth_semantic_map(smap: SemanticMap, p: SmoothingParams) -> SemanticMap:
    """Blur each class map and re-assign pixels to the strongest class.

    Background competes as its own map so the silhouette structure
    survives; on exact ties the lowest class index wins and background
    loses to any part class.  sigma 0 returns the input unchanged.
    """
    if p.sigma == 0:
        return smap
    kernel = gaussian_kernel_1d(p.sigma, p.resolved_half_size)
    # 2-d kernel = outer(k, k); normalizing k makes responses a partition
    # of unity, so the per-pixel argmax is always well defined
    maps = [
        _convolve_reflect((smap.assignment == k).astype(np.float64), kernel)
        for k in range(smap.n_classes)
    ]
    maps.append(_convolve_reflect((smap.assignment == BACKGROUND).astype(np.float64), kernel))
    stack = np.stack(maps)
    winner = np.argmax(stack, axis=0)
    assignment = np.where(winner == smap.n_classes, BACKGROUND, winner)
    return SemanticMap(assignment=assignment, n_classes=smap.n_classes)
