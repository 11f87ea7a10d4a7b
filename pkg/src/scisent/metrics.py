"""Confusion matrices, per-category precision/recall/F1, macro averages.

Gold categories index the seven matrix rows; columns hold the seven
predicted categories plus one extra Unparsed column for predictions that
produced no usable label. Unparsed predictions count against recall (the
gold row sum includes them) but never against any category's precision.
All values are kept at full precision; rounding to three decimals happens
only when a report is formatted for output.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .schema import Category, all_categories, parse_label

UNPARSED_LABEL = "unparsed"
N_CATEGORIES = 7
N_COLUMNS = 8  # seven predicted categories plus Unparsed


class LengthMismatchError(ValueError):
    pass


class MissingCategoryError(ValueError):
    pass


class SplitMismatchError(ValueError):
    pass


class Prf(NamedTuple):
    precision: float
    recall: float
    f1: float


class ConfusionMatrix:
    """7x8 tally of (gold category, predicted category or unparsed) pairs."""

    def __init__(self, counts):
        array = np.asarray(counts, dtype=np.int64)
        if array.shape != (N_CATEGORIES, N_COLUMNS):
            raise ValueError(f"expected shape (7, 8), got {array.shape}")
        if (array < 0).any():
            raise ValueError("counts must be non-negative")
        self.counts = array

    def __eq__(self, other) -> bool:
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)

    def __repr__(self) -> str:
        return f"ConfusionMatrix({self.counts.tolist()!r})"

    def total(self) -> int:
        return int(self.counts.sum())

    def unparsed_count(self) -> int:
        return int(self.counts[:, N_COLUMNS - 1].sum())

    def to_lists(self) -> list[list[int]]:
        return self.counts.tolist()


def confusion(gold: Sequence[Category], pred: Sequence[Category | None]) -> ConfusionMatrix:
    """Tally gold/predicted pairs; ``None`` predictions land in Unparsed.

    Raises:
        LengthMismatchError: when the two sequences differ in length.
        ValueError: when gold is empty.
    """
    if len(gold) != len(pred):
        raise LengthMismatchError(f"gold has {len(gold)} items, pred has {len(pred)}")
    if not gold:
        raise ValueError("gold must be non-empty")
    index = {category: i for i, category in enumerate(all_categories())}
    counts = np.zeros((N_CATEGORIES, N_COLUMNS), dtype=np.int64)
    for g, p in zip(gold, pred):
        column = index[p] if p is not None else N_COLUMNS - 1
        counts[index[g], column] += 1
    return ConfusionMatrix(counts)


def per_category_prf(matrix: ConfusionMatrix) -> dict[Category, Prf]:
    """Precision, recall, and F1 per category; 0/0 cases are defined as 0.

    Precision divides the diagonal by the predicted-category column sum
    (the Unparsed column belongs to no category, so it never enters a
    precision denominator). Recall divides by the full gold row sum, so
    unparsed predictions depress recall.
    """
    counts = matrix.counts
    result: dict[Category, Prf] = {}
    for i, category in enumerate(all_categories()):
        true_positive = float(counts[i, i])
        predicted = float(counts[:, i].sum())
        gold_total = float(counts[i, :].sum())
        precision = true_positive / predicted if predicted > 0 else 0.0
        recall = true_positive / gold_total if gold_total > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        result[category] = Prf(precision, recall, f1)
    return result


def macro_average(per_category: Mapping[Category, tuple[float, float, float]]) -> Prf:
    """Unweighted mean over the seven categories, component-wise."""
    if set(per_category) != set(all_categories()):
        missing = set(all_categories()) - set(per_category)
        raise MissingCategoryError(f"missing categories: {sorted(c.value for c in missing)}")
    values = [per_category[c] for c in all_categories()]
    return Prf(
        sum(v[0] for v in values) / N_CATEGORIES,
        sum(v[1] for v in values) / N_CATEGORIES,
        sum(v[2] for v in values) / N_CATEGORIES,
    )


@dataclass(frozen=True)
class EvalReport:
    """Evaluation of one run: matrix, per-category metrics, macro averages."""

    matrix: ConfusionMatrix
    per_category: dict[Category, Prf]
    macro: Prf
    unparsed_count: int
    run_id: str
    split: str


def evaluate(
    gold: Sequence[Category],
    pred: Sequence[Category | None],
    *,
    run_id: str = "",
    split: str = "",
) -> EvalReport:
    """Build a full report from aligned gold and predicted labels."""
    matrix = confusion(gold, pred)
    per_category = per_category_prf(matrix)
    return EvalReport(
        matrix=matrix,
        per_category=per_category,
        macro=macro_average(per_category),
        unparsed_count=matrix.unparsed_count(),
        run_id=run_id,
        split=split,
    )


@dataclass(frozen=True)
class RunComparison:
    """Arithmetic differences between two reports (second minus first)."""

    per_category: dict[Category, Prf]
    macro: Prf


def compare_runs(a: EvalReport, b: EvalReport) -> RunComparison:
    """Per-category and macro deltas b - a; antisymmetric by construction.

    Raises:
        SplitMismatchError: when the reports cover different splits.
    """
    if a.split != b.split:
        raise SplitMismatchError(f"cannot compare runs over {a.split!r} and {b.split!r}")
    per_category = {
        category: Prf(*(bv - av for av, bv in zip(a.per_category[category], b.per_category[category])))
        for category in all_categories()
    }
    macro = Prf(*(bv - av for av, bv in zip(a.macro, b.macro)))
    return RunComparison(per_category=per_category, macro=macro)


def report_to_dict(report: EvalReport) -> dict:
    return {
        "matrix": {
            "gold_labels": [c.snake_id for c in all_categories()],
            "predicted_labels": [c.snake_id for c in all_categories()] + [UNPARSED_LABEL],
            "counts": report.matrix.to_lists(),
        },
        "per_category": {
            c.snake_id: {"precision": v.precision, "recall": v.recall, "f1": v.f1}
            for c, v in report.per_category.items()
        },
        "macro": {
            "precision": report.macro.precision,
            "recall": report.macro.recall,
            "f1": report.macro.f1,
        },
        "unparsed_count": report.unparsed_count,
        "run_id": report.run_id,
        "split": report.split,
    }


def report_from_dict(raw: dict) -> EvalReport:
    matrix = ConfusionMatrix(raw["matrix"]["counts"])
    per_category = {
        parse_label(label): Prf(v["precision"], v["recall"], v["f1"])
        for label, v in raw["per_category"].items()
    }
    macro = Prf(raw["macro"]["precision"], raw["macro"]["recall"], raw["macro"]["f1"])
    return EvalReport(
        matrix=matrix,
        per_category=per_category,
        macro=macro,
        unparsed_count=raw["unparsed_count"],
        run_id=raw["run_id"],
        split=raw["split"],
    )


def report_to_json(report: EvalReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def report_table_csv(report: EvalReport) -> str:
    """One row per category plus an Average row, values at three decimals."""
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["category", "precision", "recall", "f1"])
    for category in all_categories():
        prf = report.per_category[category]
        writer.writerow([category.canonical_name] + [f"{v:.3f}" for v in prf])
    writer.writerow(["Average"] + [f"{v:.3f}" for v in report.macro])
    return buffer.getvalue()


def confusion_csv(matrix: ConfusionMatrix) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["gold"] + [c.canonical_name for c in all_categories()] + ["Unparsed"])
    for category, row in zip(all_categories(), matrix.to_lists()):
        writer.writerow([category.canonical_name] + row)
    return buffer.getvalue()


def confusion_svg(matrix: ConfusionMatrix, *, cell: int = 56) -> str:
    """Self-contained SVG heatmap of the matrix; no plotting dependency."""
    counts = matrix.counts
    peak = max(1, int(counts.max()))
    label_w, label_h = 120, 90
    width = label_w + N_COLUMNS * cell
    height = label_h + N_CATEGORIES * cell
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="11">'
    ]
    column_names = [c.canonical_name for c in all_categories()] + ["Unparsed"]
    for j, name in enumerate(column_names):
        x = label_w + j * cell + cell // 2
        parts.append(
            f'<text x="{x}" y="{label_h - 8}" text-anchor="end" '
            f'transform="rotate(-45 {x} {label_h - 8})">{name}</text>'
        )
    for i, category in enumerate(all_categories()):
        y = label_h + i * cell
        parts.append(
            f'<text x="{label_w - 6}" y="{y + cell // 2 + 4}" text-anchor="end">'
            f"{category.canonical_name}</text>"
        )
        for j in range(N_COLUMNS):
            value = int(counts[i, j])
            shade = 255 - round(200 * value / peak)
            x = label_w + j * cell
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="rgb({shade},{shade},255)" stroke="#666"/>'
            )
            parts.append(
                f'<text x="{x + cell // 2}" y="{y + cell // 2 + 4}" text-anchor="middle">{value}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def comparison_to_dict(comparison: RunComparison) -> dict:
    return {
        "per_category": {
            c.snake_id: {"precision": v.precision, "recall": v.recall, "f1": v.f1}
            for c, v in comparison.per_category.items()
        },
        "macro": {
            "precision": comparison.macro.precision,
            "recall": comparison.macro.recall,
            "f1": comparison.macro.f1,
        },
    }


def comparison_table(comparison: RunComparison) -> str:
    """Signed delta table, three decimals, Average row last."""
    lines = [f"{'category':<14} {'precision':>10} {'recall':>10} {'f1':>10}"]
    for category in all_categories():
        delta = comparison.per_category[category]
        lines.append(
            f"{category.canonical_name:<14} {delta.precision:>+10.3f} "
            f"{delta.recall:>+10.3f} {delta.f1:>+10.3f}"
        )
    lines.append(
        f"{'Average':<14} {comparison.macro.precision:>+10.3f} "
        f"{comparison.macro.recall:>+10.3f} {comparison.macro.f1:>+10.3f}"
    )
    return "\n".join(lines) + "\n"
