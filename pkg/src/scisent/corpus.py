"""Loading, validation, splitting, and persistence of sentence datasets.

A dataset is a flat list of labelled sentences, each assigned to a
train/validation/test split and marked as manually annotated or as a
synthetic paraphrase of a manual sentence. The canonical on-disk format
is JSON Lines; CSV is supported with identical field names.
"""

from __future__ import annotations

import csv
import json
import math
import os
import random
import tempfile
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable

from .schema import Category, UnknownLabelError, all_categories, parse_label

RECORD_FIELDS = ("id", "text", "label", "split", "provenance", "source_id")


class Split(Enum):
    TRAIN = "train"
    VALIDATION = "validation"
    TEST = "test"


class Provenance(Enum):
    MANUAL = "manual"
    SYNTHETIC = "synthetic"


class FileFormat(Enum):
    JSONL = "jsonl"
    CSV = "csv"


class MalformedRecordError(ValueError):
    """A dataset file row that cannot be turned into a valid record."""

    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason


class InvalidRatiosError(ValueError):
    pass


class EmptyCategoryError(ValueError):
    def __init__(self, category: Category):
        super().__init__(f"category {category.canonical_name!r} has no records")
        self.category = category


@dataclass(frozen=True)
class SentenceRecord:
    """One sentence with its gold label, split assignment, and provenance.

    Synthetic records reference the manual sentence they paraphrase via
    ``source_id``; manual records carry no source.
    """

    id: str
    text: str
    label: Category
    split: Split
    provenance: Provenance = Provenance.MANUAL
    source_id: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("record id must be non-empty")
        if not self.text:
            raise ValueError(f"record {self.id!r}: text must be non-empty")
        if self.provenance is Provenance.SYNTHETIC and not self.source_id:
            raise ValueError(f"record {self.id!r}: synthetic record requires source_id")
        if self.provenance is Provenance.MANUAL and self.source_id is not None:
            raise ValueError(f"record {self.id!r}: manual record must not carry source_id")


@dataclass(frozen=True)
class Dataset:
    """An immutable collection of sentence records."""

    name: str
    records: tuple[SentenceRecord, ...]

    def __len__(self) -> int:
        return len(self.records)

    def by_split(self, split: Split) -> tuple[SentenceRecord, ...]:
        return tuple(r for r in self.records if r.split is split)

    def by_id(self) -> dict[str, SentenceRecord]:
        return {r.id: r for r in self.records}


class ValidationProfile(Enum):
    BASE = "base"
    AUGMENTED = "augmented"
    NONE = "none"


def record_to_dict(record: SentenceRecord) -> dict:
    return {
        "id": record.id,
        "text": record.text,
        "label": record.label.snake_id,
        "split": record.split.value,
        "provenance": record.provenance.value,
        "source_id": record.source_id,
    }


def record_from_dict(raw: dict) -> SentenceRecord:
    """Build a record from a parsed file row; raises ValueError on bad fields."""
    missing = [f for f in RECORD_FIELDS if f not in raw]
    if missing:
        raise ValueError(f"missing fields: {', '.join(missing)}")
    unexpected = [k for k in raw if k not in RECORD_FIELDS]
    if unexpected:
        raise ValueError(f"unexpected fields: {', '.join(sorted(unexpected))}")
    try:
        split = Split(raw["split"])
    except ValueError:
        raise ValueError(f"unknown split: {raw['split']!r}") from None
    try:
        provenance = Provenance(raw["provenance"])
    except ValueError:
        raise ValueError(f"unknown provenance: {raw['provenance']!r}") from None
    source_id = raw["source_id"]
    if source_id == "":
        source_id = None
    return SentenceRecord(
        id=str(raw["id"]),
        text=str(raw["text"]),
        label=parse_label(str(raw["label"])),
        split=split,
        provenance=provenance,
        source_id=source_id,
    )


def _detect_format(path: Path, fmt: FileFormat | None) -> FileFormat:
    if fmt is not None:
        return fmt
    if path.suffix.lower() == ".csv":
        return FileFormat.CSV
    return FileFormat.JSONL


def load_dataset(path: str | Path, fmt: FileFormat | None = None, name: str | None = None) -> Dataset:
    """Load a dataset file, preserving record order.

    Raises:
        OSError: when the file cannot be read.
        MalformedRecordError: on missing fields, unknown labels, or
            duplicate ids; the error carries the offending line number.
    """
    path = Path(path)
    fmt = _detect_format(path, fmt)
    if fmt is FileFormat.JSONL:
        records = _load_jsonl(path)
    else:
        records = _load_csv(path)
    return Dataset(name=name or path.stem, records=tuple(records))


def _load_jsonl(path: Path) -> list[SentenceRecord]:
    records: list[SentenceRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecordError(line_number, f"invalid JSON: {exc.msg}") from None
            if not isinstance(raw, dict):
                raise MalformedRecordError(line_number, "row is not a JSON object")
            records.append(_record_from_row(raw, line_number, seen))
    return records


def _load_csv(path: Path) -> list[SentenceRecord]:
    records: list[SentenceRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise MalformedRecordError(1, "missing CSV header row")
        if set(reader.fieldnames) != set(RECORD_FIELDS):
            raise MalformedRecordError(1, f"CSV header must contain exactly: {', '.join(RECORD_FIELDS)}")
        for raw in reader:
            records.append(_record_from_row(raw, reader.line_num, seen))
    return records


def _record_from_row(raw: dict, line_number: int, seen: set[str]) -> SentenceRecord:
    try:
        record = record_from_dict(raw)
    except UnknownLabelError as exc:
        raise MalformedRecordError(line_number, str(exc)) from None
    except ValueError as exc:
        raise MalformedRecordError(line_number, str(exc)) from None
    if record.id in seen:
        raise MalformedRecordError(line_number, f"duplicate id: {record.id!r}")
    seen.add(record.id)
    return record


def save_dataset(dataset: Dataset, path: str | Path, fmt: FileFormat | None = None) -> None:
    """Write the dataset atomically (temp file plus rename), id-sorted."""
    path = Path(path)
    fmt = _detect_format(path, fmt)
    ordered = sorted(dataset.records, key=lambda r: r.id)
    handle = tempfile.NamedTemporaryFile(
        "w", encoding="utf-8", newline="", dir=path.parent, suffix=".tmp", delete=False
    )
    try:
        with handle:
            if fmt is FileFormat.JSONL:
                for record in ordered:
                    handle.write(json.dumps(record_to_dict(record), ensure_ascii=False))
                    handle.write("\n")
            else:
                writer = csv.DictWriter(handle, fieldnames=RECORD_FIELDS)
                writer.writeheader()
                for record in ordered:
                    row = record_to_dict(record)
                    row["source_id"] = row["source_id"] or ""
                    writer.writerow(row)
        os.replace(handle.name, path)
    except BaseException:
        os.unlink(handle.name)
        raise


BASE_TOTALS = {"total": 700, "per_category": 100, "splits": (490, 70, 140)}
AUGMENTED_SPLITS = (2450, 350, 140)


def validate_dataset(dataset: Dataset, profile: ValidationProfile = ValidationProfile.NONE) -> list[str]:
    """Check every dataset invariant; returns violations (empty when valid).

    Violations are data, not failures: callers decide whether they are
    fatal. Profile checks add the expected count structure of the base
    benchmark (700 records, 100 per category, 490/70/140) or the
    augmented benchmark (2,450/350/140 with an untouched manual test set).
    """
    violations: list[str] = []
    by_id: dict[str, SentenceRecord] = {}
    for record in dataset.records:
        if record.id in by_id:
            violations.append(f"duplicate id: {record.id!r}")
        else:
            by_id[record.id] = record

    for record in dataset.records:
        if record.provenance is Provenance.SYNTHETIC:
            if record.split is Split.TEST:
                violations.append(f"synthetic record in test split: {record.id!r}")
            source = by_id.get(record.source_id or "")
            if source is None:
                violations.append(f"synthetic record {record.id!r}: source {record.source_id!r} not found")
                continue
            if source.provenance is not Provenance.MANUAL:
                violations.append(f"synthetic record {record.id!r}: source {record.source_id!r} is not manual")
            if source.label is not record.label:
                violations.append(f"synthetic record {record.id!r}: label differs from source {record.source_id!r}")
            if source.split is not record.split:
                violations.append(f"synthetic record {record.id!r}: split differs from source {record.source_id!r}")

    split_counts = {split: 0 for split in Split}
    category_counts = {category: 0 for category in all_categories()}
    for record in dataset.records:
        split_counts[record.split] += 1
        category_counts[record.label] += 1

    if profile is ValidationProfile.BASE:
        if len(dataset.records) != BASE_TOTALS["total"]:
            violations.append(f"base profile: expected 700 records, found {len(dataset.records)}")
        for category, count in category_counts.items():
            if count != BASE_TOTALS["per_category"]:
                violations.append(
                    f"base profile: expected 100 records for {category.canonical_name!r}, found {count}"
                )
        violations.extend(_split_count_violations(split_counts, BASE_TOTALS["splits"], "base"))
        manual = sum(1 for r in dataset.records if r.provenance is Provenance.MANUAL)
        if manual != len(dataset.records):
            violations.append(
                f"base profile: expected all records manual, found {len(dataset.records) - manual} synthetic"
            )
    elif profile is ValidationProfile.AUGMENTED:
        violations.extend(_split_count_violations(split_counts, AUGMENTED_SPLITS, "augmented"))
        synthetic_test = sum(
            1 for r in dataset.records if r.split is Split.TEST and r.provenance is not Provenance.MANUAL
        )
        if synthetic_test:
            violations.append(f"augmented profile: {synthetic_test} non-manual records in test split")
    return violations


def _split_count_violations(
    split_counts: dict[Split, int], expected: tuple[int, int, int], profile_name: str
) -> list[str]:
    violations = []
    for split, want in zip((Split.TRAIN, Split.VALIDATION, Split.TEST), expected):
        if split_counts[split] != want:
            violations.append(
                f"{profile_name} profile: expected {want} {split.value} records, found {split_counts[split]}"
            )
    return violations


def stratified_split(
    dataset: Dataset, ratios: tuple[float, float, float], seed: int
) -> Dataset:
    """Reassign splits within each category by a seeded shuffle.

    Records are shuffled per category with a deterministic generator
    seeded by (seed, category), then divided into train/validation/test
    by the ratios using largest-remainder rounding; ties go to train,
    then validation. The same inputs always produce the same assignment.

    Raises:
        InvalidRatiosError: ratios do not sum to 1 or are negative.
        EmptyCategoryError: one of the seven categories has no records.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise InvalidRatiosError(f"need three non-negative ratios, got {ratios!r}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise InvalidRatiosError(f"ratios must sum to 1.0, got {sum(ratios)!r}")

    groups: dict[Category, list[SentenceRecord]] = {c: [] for c in all_categories()}
    for record in dataset.records:
        groups[record.label].append(record)
    for category, group in groups.items():
        if not group:
            raise EmptyCategoryError(category)

    assignment: dict[str, Split] = {}
    split_order = (Split.TRAIN, Split.VALIDATION, Split.TEST)
    for category, group in groups.items():
        rng = random.Random(f"{seed}:{category.snake_id}")
        shuffled = list(group)
        rng.shuffle(shuffled)
        counts = _largest_remainder(len(group), ratios)
        start = 0
        for split, count in zip(split_order, counts):
            for record in shuffled[start : start + count]:
                assignment[record.id] = split
            start += count

    records = tuple(replace(r, split=assignment[r.id]) for r in dataset.records)
    return Dataset(name=dataset.name, records=records)


def _largest_remainder(n: int, ratios: Iterable[float]) -> list[int]:
    exact = [r * n for r in ratios]
    base = [math.floor(x) for x in exact]
    leftover = n - sum(base)
    order = sorted(range(len(base)), key=lambda i: (-(exact[i] - base[i]), i))
    for i in order[:leftover]:
        base[i] += 1
    return base
