"""Declarative pipeline configuration (YAML) with validation.

One file drives every subcommand; command-line flags override single
fields.  Seeds for the individual stages all derive from the global
seed so a fixed config reproduces byte-identical artifacts.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .errors import ConfigError
from .imgproc import EnhancementParams, RetinexParams
from .regions import POOLING_MODES, QuantizationParams, SmoothingParams
from .survey import BERLIN_KAY_LABELS, DatasetFilterParams, normalize_label
from .tree import TreeTrainParams

PREPROCESS_MODES = ("none", "enhance", "msrcp")


@dataclass
class PathsConfig:
    workdir: Path = Path("out")
    survey: Path | None = None
    manifest: Path | None = None
    class_names: Path | None = None
    ground_truth: Path | None = None
    class_map: Path | None = None

    @property
    def dataset_file(self) -> Path:
        return self.workdir / "dataset.csv"

    @property
    def provenance_file(self) -> Path:
        return self.workdir / "provenance.json"

    @property
    def tree_file(self) -> Path:
        return self.workdir / "tree.json"

    @property
    def metrics_file(self) -> Path:
        return self.workdir / "metrics.json"

    @property
    def records_file(self) -> Path:
        return self.workdir / "records.jsonl"


@dataclass
class PreprocessConfig:
    mode: str = "none"
    enhancement: EnhancementParams = field(default_factory=EnhancementParams)
    retinex: RetinexParams = field(default_factory=RetinexParams)

    def __post_init__(self):
        if self.mode not in PREPROCESS_MODES:
            raise ConfigError(
                f"preprocess.mode must be one of {PREPROCESS_MODES}, got {self.mode!r}"
            )


@dataclass
class PoolingConfig:
    mode: str = "average"
    top_m: int = 3

    def __post_init__(self):
        if self.mode not in POOLING_MODES:
            raise ConfigError(f"pooling.mode must be one of {POOLING_MODES}, got {self.mode!r}")
        if self.top_m < 1:
            raise ConfigError("pooling.top_m must be >= 1")


@dataclass
class PrepareConfig:
    clean: bool = True
    smote: bool = True
    sample_size: int | None = None  # desk-scale seeded subsample of the dump


@dataclass
class PipelineConfig:
    seed: int = 0
    labels: tuple[str, ...] = tuple(sorted(BERLIN_KAY_LABELS))
    paths: PathsConfig = field(default_factory=PathsConfig)
    filter: DatasetFilterParams = field(default_factory=DatasetFilterParams)
    prepare: PrepareConfig = field(default_factory=PrepareConfig)
    tree: TreeTrainParams = field(default_factory=TreeTrainParams)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    quantization: QuantizationParams = field(default_factory=QuantizationParams)
    pooling: PoolingConfig = field(default_factory=PoolingConfig)
    smoothing: SmoothingParams = field(default_factory=SmoothingParams)

    def __post_init__(self):
        if not self.labels:
            raise ConfigError("labels must be non-empty")
        self.labels = tuple(normalize_label(l) for l in self.labels)
        # stage seeds derive from the global seed unless set explicitly
        if self.tree.seed == 0 and self.seed != 0:
            self.tree = replace(self.tree, seed=self.seed)
        if self.quantization.seed == 0 and self.seed != 0:
            self.quantization = replace(self.quantization, seed=self.seed)


def _build(cls, doc: dict, where: str):
    known = {f.name for f in fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")
    converted = {}
    for f in fields(cls):
        if f.name not in doc:
            continue
        value = doc[f.name]
        converted[f.name] = _convert(f.type, value, f"{where}.{f.name}")
    try:
        return cls(**converted)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where}: {exc}") from exc


_NESTED = {
    "paths": PathsConfig,
    "filter": DatasetFilterParams,
    "prepare": PrepareConfig,
    "tree": TreeTrainParams,
    "preprocess": PreprocessConfig,
    "quantization": QuantizationParams,
    "pooling": PoolingConfig,
    "smoothing": SmoothingParams,
    "enhancement": EnhancementParams,
    "retinex": RetinexParams,
}


def _convert(typ, value, where: str):
    if isinstance(value, dict):
        name = where.rsplit(".", 1)[-1]
        if name in _NESTED:
            return _build(_NESTED[name], value, where)
        raise ConfigError(f"unexpected mapping at {where}")
    if isinstance(value, list):
        return tuple(value)
    if "Path" in str(typ) and isinstance(value, str):
        return Path(value)
    return value


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config root must be a mapping")
    cfg = _build(PipelineConfig, doc, "config")
    # resolve relative paths against the config file location
    base = path.parent
    p = cfg.paths
    for name in ("workdir", "survey", "manifest", "class_names", "ground_truth", "class_map"):
        val = getattr(p, name)
        if val is not None and not Path(val).is_absolute():
            setattr(p, name, base / val)
    return cfg


def require_paths(cfg: PipelineConfig, *names: str) -> None:
    """Check the named input paths are configured and exist (workdir is created)."""
    cfg.paths.workdir.mkdir(parents=True, exist_ok=True)
    for name in names:
        val = getattr(cfg.paths, name)
        if val is None:
            raise ConfigError(f"paths.{name} must be set for this command")
        if not Path(val).exists():
            raise ConfigError(f"paths.{name} does not exist: {val}")
