"""Inter-annotator agreement statistics over multi-rater category counts.

Input is a rating matrix: one row per item, one column per category, each
cell holding how many of the n raters chose that category for that item.
Count rows are enough for both statistics, so anonymized data suffices;
loaders convert raw per-rater label files when those are available.

Fleiss' kappa corrects observed pairwise agreement by the squared
marginal category proportions. Gwet's AC1 uses an alternative chance
model that stays stable under skewed category prevalence; the
per-category variant dichotomizes the matrix into {category, rest}.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .schema import Category, UnknownLabelError, all_categories, parse_label


class DegenerateMarginalsError(ValueError):
    """Expected agreement is 1, so kappa is undefined."""


class DegenerateChanceError(ValueError):
    """AC1 chance agreement is 1; pathological for two or more categories."""


@dataclass(frozen=True)
class RatingMatrix:
    """Per-item category counts from n raters."""

    items: tuple[str, ...]
    categories: tuple[str, ...]
    counts: np.ndarray  # shape (len(items), len(categories))
    raters: int

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if self.raters < 2:
            raise ValueError("need at least 2 raters")
        if len(self.categories) < 2:
            raise ValueError("need at least 2 categories")
        if len(self.items) < 1:
            raise ValueError("need at least 1 item")
        if counts.shape != (len(self.items), len(self.categories)):
            raise ValueError(
                f"counts shape {counts.shape} does not match "
                f"{len(self.items)} items x {len(self.categories)} categories"
            )
        if (counts < 0).any():
            raise ValueError("counts must be non-negative")
        row_sums = counts.sum(axis=1)
        bad = np.nonzero(row_sums != self.raters)[0]
        if bad.size:
            raise ValueError(
                f"item {self.items[bad[0]]!r}: counts sum to {row_sums[bad[0]]}, expected {self.raters}"
            )


def _pairwise_agreement(matrix: RatingMatrix) -> np.ndarray:
    counts = matrix.counts.astype(float)
    n = matrix.raters
    return (counts * (counts - 1)).sum(axis=1) / (n * (n - 1))


def fleiss_kappa(matrix: RatingMatrix) -> float:
    """Fleiss' kappa across all items and raters.

    Exactly 1.0 under perfect agreement.

    Raises:
        DegenerateMarginalsError: every rating falls in one category, so
            expected agreement is 1 and kappa is undefined.
    """
    observed = _pairwise_agreement(matrix).mean()
    proportions = matrix.counts.sum(axis=0) / (len(matrix.items) * matrix.raters)
    expected = float((proportions**2).sum())
    if 1.0 - expected <= 0.0:
        raise DegenerateMarginalsError("all ratings in a single category")
    return float((observed - expected) / (1.0 - expected))


def gwet_ac1_overall(matrix: RatingMatrix) -> float:
    """Gwet's AC1 across all items and raters; exactly 1.0 under perfect agreement."""
    observed = _pairwise_agreement(matrix).mean()
    pi = (matrix.counts / matrix.raters).mean(axis=0)
    k = len(matrix.categories)
    expected = float((pi * (1.0 - pi)).sum() / (k - 1))
    if 1.0 - expected <= 0.0:
        raise DegenerateChanceError("chance agreement is 1")
    return float((observed - expected) / (1.0 - expected))


def gwet_ac1_per_category(matrix: RatingMatrix, category: Category | str) -> float:
    """AC1 for one category after dichotomizing into {category, rest}."""
    label = category.canonical_name if isinstance(category, Category) else category
    if label not in matrix.categories:
        raise KeyError(f"category {label!r} not in rating matrix")
    column = matrix.categories.index(label)
    chosen = matrix.counts[:, column]
    rest = matrix.raters - chosen
    binary = RatingMatrix(
        items=matrix.items,
        categories=(label, f"not {label}"),
        counts=np.stack([chosen, rest], axis=1),
        raters=matrix.raters,
    )
    return gwet_ac1_overall(binary)


def rating_matrix_from_labels(
    assignments: Iterable[tuple[str, str, str]],
    categories: Sequence[str] | None = None,
) -> RatingMatrix:
    """Build a rating matrix from (item_id, rater_id, label) triples.

    Every item must be rated by the same number of raters and no rater
    may rate an item twice. When no category order is given and every
    label is one of the seven canonical categories, columns follow the
    canonical order; otherwise they are the sorted distinct labels.
    """
    per_item: dict[str, dict[str, str]] = {}
    labels_seen: list[str] = []
    for item_id, rater_id, label in assignments:
        raters = per_item.setdefault(item_id, {})
        if rater_id in raters:
            raise ValueError(f"item {item_id!r}: duplicate rating by rater {rater_id!r}")
        raters[rater_id] = label
        labels_seen.append(label)
    if not per_item:
        raise ValueError("no assignments given")

    rater_counts = {len(raters) for raters in per_item.values()}
    if len(rater_counts) != 1:
        raise ValueError(f"items have differing rater counts: {sorted(rater_counts)}")
    n = rater_counts.pop()

    if categories is None:
        categories = _default_category_order(labels_seen)
    column = {label: i for i, label in enumerate(categories)}
    unknown = sorted({label for label in labels_seen if label not in column})
    if unknown:
        raise ValueError(f"labels outside the category list: {unknown}")

    items = tuple(sorted(per_item))
    counts = np.zeros((len(items), len(categories)), dtype=np.int64)
    for row, item_id in enumerate(items):
        for label in per_item[item_id].values():
            counts[row, column[label]] += 1
    return RatingMatrix(items=items, categories=tuple(categories), counts=counts, raters=n)


def _default_category_order(labels: Sequence[str]) -> tuple[str, ...]:
    try:
        for label in labels:
            parse_label(label)
    except UnknownLabelError:
        return tuple(sorted(set(labels)))
    return tuple(c.canonical_name for c in all_categories())


def load_raw_labels_csv(path: str | Path, categories: Sequence[str] | None = None) -> RatingMatrix:
    """Load a raw-label CSV with columns item_id, rater_id, label."""
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        required = {"item_id", "rater_id", "label"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: expected columns item_id, rater_id, label")
        triples = [(row["item_id"], row["rater_id"], row["label"]) for row in reader]
    return rating_matrix_from_labels(triples, categories)


def load_count_matrix_csv(path: str | Path) -> RatingMatrix:
    """Load a count-matrix CSV: item_id column plus one column per category."""
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or reader.fieldnames[0] != "item_id":
            raise ValueError(f"{path}: first column must be item_id")
        categories = tuple(reader.fieldnames[1:])
        items: list[str] = []
        rows: list[list[int]] = []
        for row in reader:
            items.append(row["item_id"])
            rows.append([int(row[c]) for c in categories])
    if not rows:
        raise ValueError(f"{path}: no items")
    counts = np.asarray(rows, dtype=np.int64)
    raters = int(counts[0].sum())
    return RatingMatrix(items=tuple(items), categories=categories, counts=counts, raters=raters)
