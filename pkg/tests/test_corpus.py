from __future__ import annotations

import json
import random

import pytest

from conftest import make_base_dataset
from scisent import Category, Dataset, Provenance, SentenceRecord, Split, all_categories
from scisent.corpus import (
    EmptyCategoryError,
    FileFormat,
    InvalidRatiosError,
    MalformedRecordError,
    ValidationProfile,
    load_dataset,
    save_dataset,
    stratified_split,
    validate_dataset,
)


def small_dataset() -> Dataset:
    records = [
        SentenceRecord("a1", "One study is described here.", Category.DESCRIPTION, Split.TRAIN),
        SentenceRecord("a2", "Findings were strong.", Category.RESULT, Split.TEST),
        SentenceRecord(
            "a1#v1",
            "Here a single study receives its description.",
            Category.DESCRIPTION,
            Split.TRAIN,
            Provenance.SYNTHETIC,
            "a1",
        ),
    ]
    return Dataset(name="small", records=tuple(records))


def sorted_records(dataset: Dataset) -> list[SentenceRecord]:
    return sorted(dataset.records, key=lambda r: r.id)


def test_record_field_constraints() -> None:
    with pytest.raises(ValueError):
        SentenceRecord("", "text", Category.OTHER, Split.TRAIN)
    with pytest.raises(ValueError):
        SentenceRecord("x", "", Category.OTHER, Split.TRAIN)
    with pytest.raises(ValueError):
        SentenceRecord("x", "text", Category.OTHER, Split.TRAIN, Provenance.SYNTHETIC, None)
    with pytest.raises(ValueError):
        SentenceRecord("x", "text", Category.OTHER, Split.TRAIN, Provenance.MANUAL, "y")


@pytest.mark.parametrize("fmt", [FileFormat.JSONL, FileFormat.CSV])
def test_round_trip(tmp_path, fmt) -> None:
    dataset = small_dataset()
    path = tmp_path / ("d.jsonl" if fmt is FileFormat.JSONL else "d.csv")
    save_dataset(dataset, path, fmt)
    loaded = load_dataset(path, fmt, name="small")
    assert sorted_records(loaded) == sorted_records(dataset)


def test_round_trip_base_benchmark_validates(tmp_path) -> None:
    dataset = make_base_dataset()
    path = tmp_path / "base.jsonl"
    save_dataset(dataset, path)
    loaded = load_dataset(path)
    assert len(loaded) == 700
    assert validate_dataset(loaded, ValidationProfile.BASE) == []
    assert sorted_records(loaded) == sorted_records(dataset)


def test_round_trip_random_datasets(tmp_path) -> None:
    rng = random.Random(11)
    categories = all_categories()
    for trial in range(5):
        records = []
        for i in range(rng.randrange(1, 40)):
            category = rng.choice(categories)
            records.append(
                SentenceRecord(
                    id=f"r{trial}-{i}",
                    text=f"Sentence {i} with stray chars: é, 中, \"quotes\", commas,,",
                    label=category,
                    split=rng.choice(list(Split)),
                )
            )
        dataset = Dataset(name=f"rand{trial}", records=tuple(records))
        for suffix in ("jsonl", "csv"):
            path = tmp_path / f"rand{trial}.{suffix}"
            save_dataset(dataset, path)
            assert sorted_records(load_dataset(path)) == sorted_records(dataset)


def test_load_empty_jsonl(tmp_path) -> None:
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    assert len(load_dataset(path)) == 0


def test_load_duplicate_id_reports_line(tmp_path) -> None:
    row = {
        "id": "dup",
        "text": "t",
        "label": "other",
        "split": "train",
        "provenance": "manual",
        "source_id": None,
    }
    lines = []
    for i in range(12):
        record = dict(row, id="dup" if i in (3, 11) else f"ok{i}")
        lines.append(json.dumps(record))
    path = tmp_path / "dup.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(MalformedRecordError) as excinfo:
        load_dataset(path)
    assert excinfo.value.line_number == 12
    assert "duplicate id" in excinfo.value.reason


def test_load_missing_field_and_unknown_label(tmp_path) -> None:
    path = tmp_path / "bad.jsonl"
    path.write_text(
        '{"id": "a", "text": "t", "label": "other", "split": "train", "provenance": "manual"}\n',
        encoding="utf-8",
    )
    with pytest.raises(MalformedRecordError) as excinfo:
        load_dataset(path)
    assert "missing fields" in excinfo.value.reason

    path.write_text(
        '{"id": "a", "text": "t", "label": "methodology", "split": "train", '
        '"provenance": "manual", "source_id": null}\n',
        encoding="utf-8",
    )
    with pytest.raises(MalformedRecordError) as excinfo:
        load_dataset(path)
    assert "unknown category label" in excinfo.value.reason


def test_load_invalid_json_reports_line(tmp_path) -> None:
    path = tmp_path / "broken.jsonl"
    path.write_text('{"id": "a"\nnot json\n', encoding="utf-8")
    with pytest.raises(MalformedRecordError) as excinfo:
        load_dataset(path)
    assert excinfo.value.line_number == 1


def test_csv_requires_header(tmp_path) -> None:
    path = tmp_path / "empty.csv"
    path.write_text("", encoding="utf-8")
    with pytest.raises(MalformedRecordError):
        load_dataset(path)


def test_save_unwritable_path_raises_oserror(tmp_path) -> None:
    blocker = tmp_path / "blocker"
    blocker.write_text("file, not a directory", encoding="utf-8")
    with pytest.raises(OSError):
        save_dataset(small_dataset(), blocker / "out.jsonl")


def test_validate_base_profile(base_dataset) -> None:
    assert validate_dataset(base_dataset, ValidationProfile.BASE) == []


def test_validate_flags_synthetic_in_test() -> None:
    base = make_base_dataset()
    source = base.by_split(Split.TEST)[0]
    synthetic = SentenceRecord(
        id=f"{source.id}#v1",
        text="A rather different sentence altogether.",
        label=source.label,
        split=Split.TEST,
        provenance=Provenance.SYNTHETIC,
        source_id=source.id,
    )
    tainted = Dataset(name="tainted", records=base.records + (synthetic,))
    violations = validate_dataset(tainted)
    assert any("synthetic record in test split" in v for v in violations)


def test_validate_flags_broken_links() -> None:
    records = (
        SentenceRecord("m1", "Manual one.", Category.RESULT, Split.TRAIN),
        SentenceRecord(
            "s1", "Synthetic.", Category.RESULT, Split.TRAIN, Provenance.SYNTHETIC, "ghost"
        ),
        SentenceRecord(
            "s2", "Synthetic two.", Category.OVERALL, Split.TRAIN, Provenance.SYNTHETIC, "m1"
        ),
        SentenceRecord(
            "s3", "Synthetic three.", Category.RESULT, Split.VALIDATION, Provenance.SYNTHETIC, "m1"
        ),
    )
    violations = validate_dataset(Dataset(name="links", records=records))
    assert any("not found" in v for v in violations)
    assert any("label differs" in v for v in violations)
    assert any("split differs" in v for v in violations)


def test_validate_base_profile_wrong_counts() -> None:
    base = make_base_dataset()
    trimmed = Dataset(name="short", records=base.records[:-1])
    violations = validate_dataset(trimmed, ValidationProfile.BASE)
    assert any("expected 700 records" in v for v in violations)
    assert any("expected 100 records" in v for v in violations)


def test_validate_detects_duplicate_ids() -> None:
    record = SentenceRecord("same", "Some text.", Category.OTHER, Split.TRAIN)
    twin = SentenceRecord("same", "Other text.", Category.OTHER, Split.TEST)
    violations = validate_dataset(Dataset(name="dups", records=(record, twin)))
    assert any("duplicate id" in v for v in violations)


def test_stratified_split_balanced_700(base_dataset) -> None:
    result = stratified_split(base_dataset, (0.7, 0.1, 0.2), seed=7)
    assert len(result.by_split(Split.TRAIN)) == 490
    assert len(result.by_split(Split.VALIDATION)) == 70
    assert len(result.by_split(Split.TEST)) == 140
    for category in all_categories():
        members = [r for r in result.records if r.label is category]
        assert sum(1 for r in members if r.split is Split.TRAIN) == 70
        assert sum(1 for r in members if r.split is Split.VALIDATION) == 10
        assert sum(1 for r in members if r.split is Split.TEST) == 20


def test_stratified_split_deterministic(base_dataset) -> None:
    first = stratified_split(base_dataset, (0.7, 0.1, 0.2), seed=99)
    second = stratified_split(base_dataset, (0.7, 0.1, 0.2), seed=99)
    assert first.records == second.records
    third = stratified_split(base_dataset, (0.7, 0.1, 0.2), seed=100)
    assert third.records != first.records


def test_stratified_split_preserves_identity_fields(base_dataset) -> None:
    result = stratified_split(base_dataset, (0.7, 0.1, 0.2), seed=3)
    original = {(r.id, r.text, r.label) for r in base_dataset.records}
    assigned = {(r.id, r.text, r.label) for r in result.records}
    assert original == assigned


def test_stratified_split_ten_records_per_category() -> None:
    records = []
    for category in all_categories():
        count = 10 if category is Category.RESULT else 20
        for i in range(count):
            records.append(
                SentenceRecord(
                    f"{category.snake_id}-{i}", f"Sentence {i}.", category, Split.TRAIN
                )
            )
    dataset = Dataset(name="uneven", records=tuple(records))
    result = stratified_split(dataset, (0.7, 0.1, 0.2), seed=1)
    result_members = [r for r in result.records if r.label is Category.RESULT]
    assert sum(1 for r in result_members if r.split is Split.TRAIN) == 7
    assert sum(1 for r in result_members if r.split is Split.VALIDATION) == 1
    assert sum(1 for r in result_members if r.split is Split.TEST) == 2


def test_stratified_split_exact_for_multiples_of_ten() -> None:
    rng = random.Random(5)
    records = []
    for category in all_categories():
        count = 10 * rng.randrange(1, 6)
        for i in range(count):
            records.append(
                SentenceRecord(f"{category.snake_id}-{i}", f"S {i}.", category, Split.TRAIN)
            )
    dataset = Dataset(name="tens", records=tuple(records))
    result = stratified_split(dataset, (0.7, 0.1, 0.2), seed=2)
    for category in all_categories():
        members = [r for r in result.records if r.label is category]
        assert sum(1 for r in members if r.split is Split.TRAIN) == len(members) * 7 // 10
        assert sum(1 for r in members if r.split is Split.VALIDATION) == len(members) // 10
        assert sum(1 for r in members if r.split is Split.TEST) == len(members) * 2 // 10


def test_stratified_split_invalid_ratios(base_dataset) -> None:
    with pytest.raises(InvalidRatiosError):
        stratified_split(base_dataset, (0.7, 0.2, 0.2), seed=0)
    with pytest.raises(InvalidRatiosError):
        stratified_split(base_dataset, (0.9, 0.2, -0.1), seed=0)


def test_stratified_split_empty_category() -> None:
    records = tuple(
        SentenceRecord(f"r{i}", f"Sentence {i}.", Category.OTHER, Split.TRAIN) for i in range(5)
    )
    with pytest.raises(EmptyCategoryError) as excinfo:
        stratified_split(Dataset(name="onecat", records=records), (0.7, 0.1, 0.2), seed=0)
    assert excinfo.value.category is not Category.OTHER
