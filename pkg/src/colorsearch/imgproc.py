"""Image pre-processing for color classification.

Two mutually exclusive modes: a domain-specific contrast/brightness/
saturation enhancement whose parameters can be grid-searched on a
validation set, and the general MSRCP retinex (multi-scale retinex on the
intensity channel with chromaticity-preserving per-pixel rescaling).

Images are (h, w, 3) uint8 RGB arrays throughout; all intermediate math
is floating point and quantization happens only at the output boundary.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy import ndimage

from . import regions, tree as tree_mod
from .regions import QuantizationParams, SemanticMap

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnhancementParams:
    contrast: float = 1.0
    brightness: float = 0.0
    saturation: float = 1.0

    def __post_init__(self):
        if not np.isfinite([self.contrast, self.brightness, self.saturation]).all():
            raise ValueError("enhancement parameters must be finite")
        if self.contrast < 0 or self.saturation < 0:
            raise ValueError("contrast and saturation gains must be >= 0")
        if not -255.0 <= self.brightness <= 255.0:
            raise ValueError("brightness must be in [-255, 255]")

    @property
    def is_identity(self) -> bool:
        return self.contrast == 1.0 and self.brightness == 0.0 and self.saturation == 1.0


IDENTITY_ENHANCEMENT = EnhancementParams()


@dataclass(frozen=True)
class RetinexParams:
    scales: tuple[float, ...] = (15.0, 80.0, 250.0)
    low_clip: float = 0.01
    high_clip: float = 0.01

    def __post_init__(self):
        if not self.scales or any(s <= 0 for s in self.scales):
            raise ValueError("scales must be non-empty and strictly positive")
        if not (0 <= self.low_clip < 0.5 and 0 <= self.high_clip < 0.5):
            raise ValueError("clip fractions must be in [0, 0.5)")


@dataclass(frozen=True)
class EnhancementGrid:
    contrasts: tuple[float, ...] = (0.8, 1.0, 1.2, 1.4, 1.6)
    brightnesses: tuple[float, ...] = (-20.0, -10.0, 0.0, 10.0, 20.0, 30.0, 40.0)
    saturations: tuple[float, ...] = (1.0, 1.25, 1.5, 1.75, 2.0)

    def __post_init__(self):
        if not (self.contrasts and self.brightnesses and self.saturations):
            raise ValueError("grid axes must be non-empty")

    def candidates(self) -> Iterable[EnhancementParams]:
        for c, b, s in itertools.product(self.contrasts, self.brightnesses, self.saturations):
            yield EnhancementParams(contrast=c, brightness=b, saturation=s)


class ValidationSample(NamedTuple):
    """One labeled image for enhancement learning."""

    image: np.ndarray
    smap: SemanticMap
    truth: Mapping[int, str]  # class index -> expected color label


def check_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ValueError("expected an (h, w, 3) uint8 RGB image")
    if img.shape[0] == 0 or img.shape[1] == 0:
        raise ValueError("image has zero area")
    return img


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Vectorized RGB->HSV on float arrays in [0, 1]."""
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=-1)
    c = v - rgb.min(axis=-1)
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)
    safe_c = np.where(c > 0, c, 1.0)
    h = np.zeros_like(v)
    h = np.where(v == r, ((g - b) / safe_c) % 6.0, h)
    h = np.where(v == g, (b - r) / safe_c + 2.0, h)
    h = np.where(v == b, (r - g) / safe_c + 4.0, h)
    h = np.where(c > 0, h / 6.0, 0.0)
    return np.stack([h, s, v], axis=-1)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    """Inverse of rgb_to_hsv."""
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    i = np.floor(h * 6.0)
    f = h * 6.0 - i
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    i = i.astype(int) % 6
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)


def enhance(img: np.ndarray, p: EnhancementParams) -> np.ndarray:
    """Apply contrast around mid-gray, brightness offset, saturation gain.

    Identity parameters reproduce the input exactly.
    """
    img = check_image(img)
    out = p.contrast * (img.astype(np.float64) - 128.0) + 128.0 + p.brightness
    out = np.clip(out, 0.0, 255.0)
    if p.saturation != 1.0:
        hsv = rgb_to_hsv(out / 255.0)
        hsv[..., 1] = np.clip(hsv[..., 1] * p.saturation, 0.0, 1.0)
        out = hsv_to_rgb(hsv) * 255.0
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def _stretch(values: np.ndarray, low_clip: float, high_clip: float) -> np.ndarray:
    """Simplest color balance: clip at percentiles, stretch to [0, 255].

    A constant field (zero dynamic range) maps to mid-range 128.
    """
    lo = np.percentile(values, low_clip * 100.0)
    hi = np.percentile(values, 100.0 - high_clip * 100.0)
    if hi <= lo:
        return np.full_like(values, 128.0)
    return np.clip((values - lo) / (hi - lo) * 255.0, 0.0, 255.0)


def msrcp(img: np.ndarray, p: RetinexParams = RetinexParams()) -> np.ndarray:
    """Multi-scale retinex with chromaticity preservation.

    The retinex runs on the intensity channel (per-pixel channel mean);
    each pixel is then rescaled by newIntensity/oldIntensity, capped so
    no channel exceeds 255, which preserves the input channel ratios.
    """
    img = check_image(img)
    if min(img.shape[:2]) <= min(p.scales):
        log.warning(
            "image min dimension %d not larger than smallest retinex scale %g",
            min(img.shape[:2]), min(p.scales),
        )
    f = img.astype(np.float64)
    intensity = f.mean(axis=2)
    log_i = np.log(intensity + 1.0)
    msr = np.zeros_like(intensity)
    for s in p.scales:
        blurred = ndimage.gaussian_filter(intensity, sigma=s, mode="reflect")
        msr += log_i - np.log(blurred + 1.0)
    msr /= len(p.scales)

    new_intensity = _stretch(msr, p.low_clip, p.high_clip)
    max_channel = f.max(axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        amp = np.minimum(
            new_intensity / np.where(intensity > 0, intensity, 1.0),
            255.0 / np.where(max_channel > 0, max_channel, 1.0),
        )
    amp = np.where(intensity > 0, amp, 0.0)
    out = f * amp[..., None]
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def _pipeline_ras(samples: Sequence[ValidationSample], t, quant: QuantizationParams,
                  params: EnhancementParams) -> float:
    """Region precision of enhance -> quantize -> classify over samples."""
    tp = 0
    fp = 0
    for sample in samples:
        processed = enhance(sample.image, params)
        parts = regions.extract_part_colors(processed, sample.smap, quant)
        for k, part in parts.items():
            expected = sample.truth.get(k)
            if expected is None:
                continue
            if tree_mod.classify(t, part.rgb).top == expected:
                tp += 1
            else:
                fp += 1
    if tp + fp == 0:
        return 0.0
    return tp / (tp + fp)


def evaluate_enhancement(samples: Sequence[ValidationSample], t, quant: QuantizationParams,
                         params: EnhancementParams) -> float:
    """Public scoring hook used by the grid search (and by its tests)."""
    return _pipeline_ras(samples, t, quant, params)


def learn_enhancement(validation: Sequence[ValidationSample], t,
                      grid: EnhancementGrid = EnhancementGrid(),
                      quant: QuantizationParams = QuantizationParams()) -> EnhancementParams:
    """Exhaustive grid search maximizing region precision on a validation set.

    Ties break toward the identity parameters, then toward the earlier
    candidate in grid order, so the result is deterministic.
    """
    if not validation:
        raise ValueError("validation set must be non-empty")
    best: EnhancementParams | None = None
    best_score = -1.0
    for cand in grid.candidates():
        score = _pipeline_ras(validation, t, quant, cand)
        wins = score > best_score or (
            score == best_score and cand.is_identity and not (best is not None and best.is_identity)
        )
        if wins:
            best, best_score = cand, score
    assert best is not None
    log.info("learned enhancement %s (validation precision %.3f)", best, best_score)
    return best
