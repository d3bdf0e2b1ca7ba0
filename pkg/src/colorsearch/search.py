"""Per-identity color records, conjunctive queries and precision scoring.

A record stores one color label per semantic part for an identity.
Queries are conjunctions of class=color predicates.  Evaluation is
region-wise: every (identity, class) pair with ground truth is one
region; a correct prediction is a true positive, a wrong one counts as a
false positive for the predicted label and a false negative for the true
one, and a missing prediction is a false negative.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from . import tree as tree_mod
from .errors import DataError, QueryError


@dataclass(frozen=True)
class PersonRecord:
    identity: str
    labels: dict[str, str]  # class name -> top-1 color label
    predictions: dict[str, tuple[tuple[str, float], ...]] = field(default_factory=dict)
    frames: tuple[str, ...] = ()
    pooling: str = ""

    def to_json(self) -> str:
        doc = {
            "id": self.identity,
            "labels": self.labels,
            "predictions": {k: [[l, p] for l, p in v] for k, v in self.predictions.items()},
            "frames": list(self.frames),
            "pooling": self.pooling,
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "PersonRecord":
        try:
            doc = json.loads(line)
            return cls(
                identity=str(doc["id"]),
                labels={str(k): str(v) for k, v in doc["labels"].items()},
                predictions={
                    str(k): tuple((str(l), float(p)) for l, p in v)
                    for k, v in doc.get("predictions", {}).items()
                },
                frames=tuple(doc.get("frames", [])),
                pooling=str(doc.get("pooling", "")),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed record line: {line!r}") from exc


@dataclass(frozen=True)
class Query:
    """Conjunction of (class, color) predicates; classes are unique."""

    predicates: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if not self.predicates:
            raise QueryError("query must contain at least one class=color predicate")
        classes = [c for c, _ in self.predicates]
        if len(set(classes)) != len(classes):
            dup = sorted({c for c in classes if classes.count(c) > 1})
            raise QueryError(f"duplicate class in query: {', '.join(dup)}")


def parse_query(text: str | Sequence[str], known_classes: Iterable[str] | None = None,
                known_labels: Iterable[str] | None = None) -> Query:
    """Parse space-separated class=color predicates, validating terms."""
    tokens = text.split() if isinstance(text, str) else list(text)
    preds = []
    for token in tokens:
        if "=" not in token:
            raise QueryError(f"malformed predicate {token!r} (expected class=color)")
        cls, _, label = token.partition("=")
        cls, label = cls.strip().lower(), label.strip().lower()
        if not cls or not label:
            raise QueryError(f"malformed predicate {token!r} (expected class=color)")
        if known_classes is not None and cls not in set(known_classes):
            raise QueryError(f"unknown class {cls!r} in query")
        if known_labels is not None and label not in set(known_labels):
            raise QueryError(f"unknown color label {label!r} in query")
        preds.append((cls, label))
    return Query(predicates=tuple(preds))


def build_record(identity: str, parts: Mapping[str, tuple[int, int, int]], t,
                 frames: Sequence[str] = (), pooling: str = "") -> PersonRecord:
    """Classify each part's pooled color and store the ranked output."""
    if not parts:
        raise DataError(f"identity {identity!r} has no parts to classify")
    labels: dict[str, str] = {}
    predictions: dict[str, tuple[tuple[str, float], ...]] = {}
    for cls, rgb in parts.items():
        pred = tree_mod.classify(t, rgb)
        labels[cls] = pred.top
        predictions[cls] = pred.ranked
    return PersonRecord(
        identity=identity,
        labels=labels,
        predictions=predictions,
        frames=tuple(frames),
        pooling=pooling,
    )


def search(query: Query, records: Sequence[PersonRecord]) -> list[str]:
    """Identity ids whose record satisfies every predicate, sorted by id.

    An identity lacking a queried class does not match.
    """
    hits = []
    for rec in records:
        if all(rec.labels.get(cls) == label for cls, label in query.predicates):
            hits.append(rec.identity)
    return sorted(hits)


@dataclass
class EvaluationReport:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    excluded_predictions: int = 0
    # (true label, predicted label or None for missing) -> region count
    confusion: dict[tuple[str, str | None], int] = field(default_factory=dict)

    @property
    def ras(self) -> float:
        """Region precision TP/(TP+FP); 0 when nothing was predicted."""
        if self.tp + self.fp == 0:
            return 0.0
        return self.tp / (self.tp + self.fp)

    @property
    def recall(self) -> float:
        if self.tp + self.fn == 0:
            return 0.0
        return self.tp / (self.tp + self.fn)

    def labels(self) -> list[str]:
        seen = {t for t, _ in self.confusion}
        seen.update(p for _, p in self.confusion if p is not None)
        return sorted(seen)

    def to_json_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "excluded_predictions": self.excluded_predictions,
            "ras": self.ras,
            "recall": self.recall,
            "confusion": {
                f"{t}|{p if p is not None else ''}": c
                for (t, p), c in sorted(self.confusion.items(), key=str)
            },
        }

    def to_text(self) -> str:
        lines = [
            f"regions:   {self.tp + self.fn}",
            f"TP:        {self.tp}",
            f"FP:        {self.fp}",
            f"FN:        {self.fn}",
            f"excluded:  {self.excluded_predictions}",
            f"RAS:       {100.0 * self.ras:.1f}",
            f"recall:    {100.0 * self.recall:.1f}",
        ]
        return "\n".join(lines)

    def confusion_csv(self) -> str:
        labs = self.labels()
        header = "true\\pred," + ",".join(labs) + ",(missing)"
        rows = [header]
        for t in labs:
            cells = [str(self.confusion.get((t, p), 0)) for p in labs]
            cells.append(str(self.confusion.get((t, None), 0)))
            rows.append(f"{t}," + ",".join(cells))
        return "\n".join(rows) + "\n"


def evaluate(predictions: Sequence[PersonRecord], truth: Sequence[PersonRecord],
             class_map: Mapping[str, str] | None = None) -> EvaluationReport:
    """Region-wise comparison of predicted records against ground truth.

    class_map renames predicted part classes into the ground-truth
    vocabulary before matching.  Predicted identities absent from the
    truth set are an error; predicted classes without ground truth for a
    known identity are excluded and counted.
    """
    truth_by_id = {rec.identity: rec for rec in truth}
    if len(truth_by_id) != len(truth):
        raise DataError("duplicate identities in ground truth")
    orphans = sorted({p.identity for p in predictions} - set(truth_by_id))
    if orphans:
        raise DataError(f"predicted identities missing from ground truth: {', '.join(orphans)}")

    report = EvaluationReport()
    pred_by_id: dict[str, dict[str, str]] = {}
    for rec in predictions:
        mapped = pred_by_id.setdefault(rec.identity, {})
        for cls, label in rec.labels.items():
            mapped[class_map.get(cls, cls) if class_map else cls] = label

    for identity, truth_rec in sorted(truth_by_id.items()):
        predicted = pred_by_id.get(identity, {})
        for cls, true_label in truth_rec.labels.items():
            pred_label = predicted.pop(cls, None)
            key = (true_label, pred_label)
            report.confusion[key] = report.confusion.get(key, 0) + 1
            if pred_label is None:
                report.fn += 1
            elif pred_label == true_label:
                report.tp += 1
            else:
                report.fp += 1
                report.fn += 1
        report.excluded_predictions += len(predicted)
    return report


def save_records(records: Iterable[PersonRecord], sink: str | Path | IO[str]) -> None:
    """Write a line-oriented record database (one JSON object per line)."""
    text = "".join(rec.to_json() + "\n" for rec in records)
    if isinstance(sink, (str, Path)):
        path = Path(sink)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(text, encoding="utf-8")
        tmp.replace(path)
    else:
        sink.write(text)


def load_records(source: str | Path | IO[str]) -> list[PersonRecord]:
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    return [PersonRecord.from_json(line) for line in text.splitlines() if line.strip()]


def load_class_map(path: str | Path) -> dict[str, str]:
    """Read a pred_class=truth_class mapping file (one pair per line, # comments)."""
    mapping: dict[str, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"malformed class-map line: {line!r}")
        src, _, dst = line.partition("=")
        mapping[src.strip().lower()] = dst.strip().lower()
    return mapping
