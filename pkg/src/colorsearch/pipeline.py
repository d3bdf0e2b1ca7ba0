"""Per-identity labeling engine shared by the CLI, scripts and tests.

For one identity: pre-process each frame, optionally degrade the
semantic map with smoothing, erode masks, extract dominant part colors,
pool them across frames and classify the pooled colors into a record.
"""
from __future__ import annotations

import logging
import zlib
from typing import Callable, Mapping, Sequence

import numpy as np

from . import imgproc, regions
from . import search as search_mod
from .config import PipelineConfig
from .regions import PartColor, QuantizationParams, SemanticMap, SmoothingParams
from .tree import DecisionTree

log = logging.getLogger(__name__)

Frame = tuple[str, np.ndarray, SemanticMap]  # (frame id, image, map)


def make_preprocess_fn(cfg: PipelineConfig) -> Callable[[np.ndarray], np.ndarray]:
    if cfg.preprocess.mode == "none":
        return lambda img: img
    if cfg.preprocess.mode == "enhance":
        params = cfg.preprocess.enhancement
        return lambda img: imgproc.enhance(img, params)
    retinex = cfg.preprocess.retinex
    return lambda img: imgproc.msrcp(img, retinex)


def process_identity(identity: str, frames: Sequence[Frame], tree: DecisionTree,
                     class_names: Mapping[int, str],
                     preprocess: Callable[[np.ndarray], np.ndarray],
                     quant: QuantizationParams,
                     smoothing: SmoothingParams = SmoothingParams(),
                     pooling_mode: str = "average", top_m: int = 3,
                     seed: int = 0) -> search_mod.PersonRecord:
    """Label one identity from its frames.

    Frames are canonically sorted by frame id so pooling (including the
    seeded random mode) is reproducible regardless of input order.
    """
    ordered = sorted(frames, key=lambda f: f[0])
    per_class: dict[int, list[PartColor]] = {}
    for frame_id, img, smap in ordered:
        processed = preprocess(img)
        degraded = regions.smooth_semantic_map(smap, smoothing)
        parts = regions.extract_part_colors(processed, degraded, quant)
        for k, part in parts.items():
            per_class.setdefault(k, []).append(part)

    ident_hash = zlib.crc32(identity.encode())
    pooled: dict[str, tuple[int, int, int]] = {}
    for k in sorted(per_class):
        name = class_names.get(k)
        if name is None:
            log.warning("identity %s: class id %d has no name; skipped", identity, k)
            continue
        pooled[name] = regions.pool_parts(
            per_class[k], pooling_mode, seed=[seed, ident_hash, k], top_m=top_m,
        )
    return search_mod.build_record(
        identity,
        pooled,
        tree,
        frames=tuple(fid for fid, _, _ in ordered),
        pooling=pooling_mode,
    )


def label_identities(grouped: Mapping[str, Sequence[Frame]], tree: DecisionTree,
                     class_names: Mapping[int, str], cfg: PipelineConfig) -> list[search_mod.PersonRecord]:
    """Run process_identity over a batch, skipping per-identity failures."""
    preprocess = make_preprocess_fn(cfg)
    records = []
    failures = 0
    for identity in sorted(grouped):
        try:
            records.append(process_identity(
                identity, grouped[identity], tree, class_names, preprocess,
                cfg.quantization, cfg.smoothing,
                pooling_mode=cfg.pooling.mode, top_m=cfg.pooling.top_m,
                seed=cfg.seed,
            ))
        except Exception:
            failures += 1
            log.exception("identity %s failed; skipped", identity)
    if failures:
        log.warning("%d of %d identities failed", failures, len(grouped))
    return records
