from __future__ import annotations

import pytest

from scisent import Dataset, Provenance, SentenceRecord, Split, all_categories

SPLIT_LAYOUT = ((Split.TRAIN, 70), (Split.VALIDATION, 10), (Split.TEST, 20))


def make_base_dataset(name: str = "base") -> Dataset:
    """A balanced 700-record benchmark: 100 per category, split 70/10/20."""
    records = []
    for category in all_categories():
        i = 0
        for split, quota in SPLIT_LAYOUT:
            for _ in range(quota):
                records.append(
                    SentenceRecord(
                        id=f"{category.snake_id}-{i:03d}",
                        text=f"{category.canonical_name} sentence {i:03d} discussing the usual topic.",
                        label=category,
                        split=split,
                        provenance=Provenance.MANUAL,
                    )
                )
                i += 1
    return Dataset(name=name, records=tuple(records))


def classification_fixtures(dataset: Dataset, split: Split) -> dict[str, str]:
    """Mock table answering every sentence of a split with its gold label."""
    return {
        record.id: f"CATEGORY: {record.label.canonical_name}"
        for record in dataset.by_split(split)
    }


def paraphrase_fixtures(dataset: Dataset) -> dict[str, list[str]]:
    """Mock table with four structurally distinct paraphrases per source."""
    table: dict[str, list[str]] = {}
    for record in dataset.records:
        if record.provenance is Provenance.MANUAL and record.split in (
            Split.TRAIN,
            Split.VALIDATION,
        ):
            table[record.id] = [
                f"First rewrite for {record.id}: the claim restated using wholly new vocabulary.",
                f"Second take on {record.id}, phrased so its surface form diverges a great deal.",
                f"A third alternative rendering of {record.id} under another grammatical arrangement.",
                f"Variant number four for {record.id}, recast once more in quite unrelated wording.",
            ]
    return table


@pytest.fixture(scope="session")
def base_dataset() -> Dataset:
    return make_base_dataset()
