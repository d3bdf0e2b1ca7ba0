"""File formats: raster images, index-PNG semantic maps, manifests.

Semantic maps travel as single-channel PNGs whose pixel value is the
class id, with 255 reserved for background, plus a sidecar text file
naming the classes ("<id> <name>" per line).  Frame manifests are CSV
with header identity,frame,image,mask; relative paths resolve against
the manifest's directory.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import NamedTuple

import numpy as np
from PIL import Image

from .errors import DataError
from .regions import BACKGROUND, SemanticMap


def load_image(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def save_image(img: np.ndarray, path: str | Path) -> None:
    Image.fromarray(np.asarray(img, dtype=np.uint8), mode="RGB").save(path)


def load_semantic_map(path: str | Path, n_classes: int) -> SemanticMap:
    with Image.open(path) as im:
        if im.mode not in ("L", "P", "I", "I;16"):
            raise DataError(f"{path}: semantic map must be a single-channel index image")
        # P-mode arrays already hold the palette indices, i.e. the class ids
        arr = np.asarray(im)
    arr = arr.astype(np.int32)
    bad = (arr != BACKGROUND) & ((arr < 0) | (arr >= n_classes))
    if bad.any():
        raise DataError(
            f"{path}: mask contains class ids outside [0, {n_classes}) "
            f"(offending values: {sorted(np.unique(arr[bad]).tolist())[:5]})"
        )
    return SemanticMap(assignment=arr, n_classes=n_classes)


def save_semantic_map(smap: SemanticMap, path: str | Path) -> None:
    Image.fromarray(smap.assignment.astype(np.uint8), mode="L").save(path)


def load_class_names(path: str | Path) -> dict[int, str]:
    names: dict[int, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise DataError(f"{path}: malformed class-name line {line!r}")
        try:
            idx = int(parts[0])
        except ValueError as exc:
            raise DataError(f"{path}: malformed class-name line {line!r}") from exc
        names[idx] = parts[1].strip().lower()
    if not names:
        raise DataError(f"{path}: no class names defined")
    return names


def save_class_names(names: dict[int, str], path: str | Path) -> None:
    atomic_write_text(
        Path(path),
        "".join(f"{idx} {name}\n" for idx, name in sorted(names.items())),
    )


class ManifestRow(NamedTuple):
    identity: str
    frame: str
    image_path: Path
    mask_path: Path


def load_manifest(path: str | Path) -> list[ManifestRow]:
    path = Path(path)
    rows: list[ManifestRow] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"identity", "frame", "image", "mask"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DataError(f"{path}: manifest needs columns identity,frame,image,mask")
        for row in reader:
            rows.append(ManifestRow(
                identity=row["identity"].strip(),
                frame=row["frame"].strip(),
                image_path=(path.parent / row["image"].strip()),
                mask_path=(path.parent / row["mask"].strip()),
            ))
    if not rows:
        raise DataError(f"{path}: manifest is empty")
    return rows


def atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)
