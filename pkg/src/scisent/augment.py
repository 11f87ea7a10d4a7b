"""Semi-synthetic paraphrase generation with an edit-distance diversity gate.

Each manual training or validation sentence is paraphrased by a backend
into a fixed number of variants (default four). A candidate is accepted
only if its normalized Levenshtein distance to the original exceeds the
minimum (default 0.20, strictly greater) and, once siblings exist, its
mean distance to them does too. Candidates at or below the threshold are
discarded and regenerated, up to a bounded number of attempts per slot.
Distances are computed on the text exactly as generated, without case or
whitespace folding.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from math import nan
from statistics import fmean
from typing import Sequence

import numpy as np

from .backend import Backend, BackendError
from .corpus import (
    Dataset,
    Provenance,
    SentenceRecord,
    Split,
    ValidationProfile,
    validate_dataset,
)
from .schema import all_categories

SENTENCE_PLACEHOLDER = "{{SENTENCE}}"
CATEGORY_PLACEHOLDER = "{{CATEGORY}}"

# Above this length the row-vectorized numpy path beats the scalar loop.
_VECTOR_THRESHOLD = 64


class DanglingSourceError(ValueError):
    def __init__(self, record_id: str, source_id: str):
        super().__init__(f"synthetic record {record_id!r}: source {source_id!r} not found")
        self.record_id = record_id
        self.source_id = source_id


def levenshtein(a: str, b: str) -> int:
    """Character-level edit distance over Unicode scalar values."""
    if a == b:
        return 0
    # Common prefixes and suffixes never change the distance.
    lo = 0
    hi_a, hi_b = len(a), len(b)
    while lo < hi_a and lo < hi_b and a[lo] == b[lo]:
        lo += 1
    while hi_a > lo and hi_b > lo and a[hi_a - 1] == b[hi_b - 1]:
        hi_a -= 1
        hi_b -= 1
    a, b = a[lo:hi_a], b[lo:hi_b]
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(b) > len(a):
        a, b = b, a
    if len(a) >= _VECTOR_THRESHOLD:
        return _levenshtein_rows_numpy(a, b)
    return _levenshtein_rows(a, b)


def _levenshtein_rows(a: str, b: str) -> int:
    previous = list(range(len(b) + 1))
    for i, char_a in enumerate(a, 1):
        current = [i]
        prev_diag = previous[0]
        for j, char_b in enumerate(b, 1):
            substitute = prev_diag if char_a == char_b else prev_diag + 1
            current.append(min(substitute, previous[j] + 1, current[-1] + 1))
            prev_diag = previous[j]
        previous = current
    return previous[-1]


def _levenshtein_rows_numpy(a: str, b: str) -> int:
    codes_b = np.fromiter((ord(c) for c in b), dtype=np.int64, count=len(b))
    positions = np.arange(len(b) + 1, dtype=np.int64)
    previous = positions.copy()
    current = np.empty_like(previous)
    for i, char_a in enumerate(a, 1):
        current[0] = i
        np.minimum(previous[1:] + 1, previous[:-1] + (codes_b != ord(char_a)), out=current[1:])
        # Left-to-right insertions resolve through a prefix-minimum scan:
        # final[j] = min_{k<=j}(current[k] + j - k).
        current = np.minimum.accumulate(current - positions) + positions
        previous, current = current, previous
    return int(previous[-1])


@lru_cache(maxsize=200_000)
def _normalized_distance(a: str, b: str) -> float:
    if not a and not b:
        return 0.0
    return levenshtein(a, b) / max(len(a), len(b))


def normalized_levenshtein(a: str, b: str) -> float:
    """Edit distance divided by the longer string's length.

    0 means identical, 1 maximally different; two empty strings are
    defined as distance 0. Symmetric in its arguments.
    """
    if a <= b:
        return _normalized_distance(a, b)
    return _normalized_distance(b, a)


def default_generation_template() -> str:
    """The paraphrase-generation prompt shipped with the package."""
    return resources.files("scisent").joinpath("data/paraphrase_prompt.txt").read_text("utf-8")


@dataclass(frozen=True)
class AugmentationPolicy:
    """Knobs for variant generation and the diversity gate.

    The gate is strict: a candidate passes only when every checked
    distance is greater than ``min_distance``; equality is a rejection.
    """

    variants_per_sentence: int = 4
    min_distance: float = 0.20
    max_regeneration_attempts: int = 5
    generation_template: str = field(default_factory=default_generation_template)

    def __post_init__(self) -> None:
        if self.variants_per_sentence < 1:
            raise ValueError("variants_per_sentence must be positive")
        if not 0.0 < self.min_distance < 1.0:
            raise ValueError("min_distance must be in (0, 1)")
        if self.max_regeneration_attempts < 1:
            raise ValueError("max_regeneration_attempts must be positive")
        for placeholder in (SENTENCE_PLACEHOLDER, CATEGORY_PLACEHOLDER):
            if placeholder not in self.generation_template:
                raise ValueError(f"generation_template must contain {placeholder}")


def render_generation_prompt(template: str, sentence_text: str, category_name: str) -> str:
    return template.replace(SENTENCE_PLACEHOLDER, sentence_text).replace(
        CATEGORY_PLACEHOLDER, category_name
    )


@dataclass(frozen=True)
class GateResult:
    """Outcome of the diversity gate for one candidate."""

    passed: bool
    reason: str | None = None  # "to_original" or "sibling_mean" on failure
    value: float | None = None


def gate_variant(
    original: str,
    candidate: str,
    siblings: Sequence[str],
    policy: AugmentationPolicy,
) -> GateResult:
    """Check a candidate against the original and its accepted siblings.

    Passes only when the distance to the original and the mean distance
    to the siblings (when any exist) are both strictly above the policy
    minimum. The failing check and the offending value are reported.
    """
    to_original = normalized_levenshtein(original, candidate)
    if to_original <= policy.min_distance:
        return GateResult(False, "to_original", to_original)
    if siblings:
        mean_sibling = fmean(normalized_levenshtein(candidate, s) for s in siblings)
        if mean_sibling <= policy.min_distance:
            return GateResult(False, "sibling_mean", mean_sibling)
    return GateResult(True)


class VariantSetStatus(Enum):
    COMPLETE = "complete"
    EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class Variant:
    """One accepted paraphrase with its final distances."""

    text: str
    to_original: float
    mean_to_siblings: float  # NaN when the set holds a single variant


@dataclass(frozen=True)
class VariantSet:
    source_id: str
    variants: tuple[Variant, ...]
    attempts_used: int
    status: VariantSetStatus


def _set_holds(original: str, texts: Sequence[str], policy: AugmentationPolicy) -> bool:
    return all(
        gate_variant(original, text, texts[:i] + texts[i + 1 :], policy).passed
        for i, text in enumerate(texts)
    )


def generate_variant_set(
    record: SentenceRecord, backend: Backend, policy: AugmentationPolicy
) -> VariantSet:
    """Generate gated paraphrase variants for one manual sentence.

    Candidates are requested one at a time and gated against the original
    and the accepted siblings. Because a new sibling changes everyone
    else's sibling mean, the whole set is re-verified after each
    acceptance; a candidate that would break it is discarded like any
    other failed attempt, so the final set always passes the gate as a
    whole. A slot that fails ``max_regeneration_attempts`` times ends the
    set early with status Exhausted and the partial set retained. Backend
    errors count as failed attempts.
    """
    if record.provenance is not Provenance.MANUAL:
        raise ValueError(f"record {record.id!r}: can only augment manual records")
    prompt = render_generation_prompt(
        policy.generation_template, record.text, record.label.canonical_name
    )
    accepted: list[str] = []
    attempts_total = 0
    slot_attempts = 0
    status = VariantSetStatus.COMPLETE
    while len(accepted) < policy.variants_per_sentence:
        if slot_attempts >= policy.max_regeneration_attempts:
            status = VariantSetStatus.EXHAUSTED
            break
        slot_attempts += 1
        attempts_total += 1
        try:
            candidate = backend.generate(prompt, key=record.id).text.strip()
        except BackendError:
            continue
        if not candidate:
            continue
        if not gate_variant(record.text, candidate, accepted, policy).passed:
            continue
        trial = accepted + [candidate]
        if not _set_holds(record.text, trial, policy):
            continue
        accepted = trial
        slot_attempts = 0

    variants = []
    for i, text in enumerate(accepted):
        siblings = accepted[:i] + accepted[i + 1 :]
        variants.append(
            Variant(
                text=text,
                to_original=normalized_levenshtein(record.text, text),
                mean_to_siblings=(
                    fmean(normalized_levenshtein(text, s) for s in siblings) if siblings else nan
                ),
            )
        )
    return VariantSet(
        source_id=record.id,
        variants=tuple(variants),
        attempts_used=attempts_total,
        status=status,
    )


@dataclass(frozen=True)
class AugmentationReport:
    sources_total: int
    sets_complete: int
    sets_exhausted: int
    exhausted_ids: tuple[str, ...]
    new_records: int
    attempts_histogram: dict[int, int]

    def to_dict(self) -> dict:
        return {
            "sources_total": self.sources_total,
            "sets_complete": self.sets_complete,
            "sets_exhausted": self.sets_exhausted,
            "exhausted_ids": list(self.exhausted_ids),
            "new_records": self.new_records,
            "attempts_histogram": {str(k): v for k, v in sorted(self.attempts_histogram.items())},
        }


@dataclass(frozen=True)
class AugmentationOutcome:
    dataset: Dataset
    report: AugmentationReport


def augment_dataset(
    dataset: Dataset,
    backend: Backend,
    policy: AugmentationPolicy,
    *,
    profile: ValidationProfile = ValidationProfile.BASE,
) -> AugmentationOutcome:
    """Add gated synthetic variants of every manual train/validation record.

    Original records are copied untouched and test records gain nothing.
    Synthetic records inherit label and split from their source and are
    named ``{source_id}#v{n}``. Exhausted sets do not fail the dataset;
    they are aggregated into the completion report.

    With the default Base profile the input must be a valid base
    benchmark; pass ``profile=ValidationProfile.NONE`` to skip that check
    (a warning is emitted instead).
    """
    if profile is ValidationProfile.NONE:
        warnings.warn("augmenting without profile validation", stacklevel=2)
    else:
        violations = validate_dataset(dataset, profile)
        if violations:
            raise ValueError(
                f"dataset failed {profile.value} validation: " + "; ".join(violations[:5])
            )

    sources = sorted(
        (
            r
            for r in dataset.records
            if r.provenance is Provenance.MANUAL and r.split in (Split.TRAIN, Split.VALIDATION)
        ),
        key=lambda r: r.id,
    )
    synthetic: list[SentenceRecord] = []
    exhausted: list[str] = []
    histogram: dict[int, int] = {}
    for source in sources:
        variant_set = generate_variant_set(source, backend, policy)
        histogram[variant_set.attempts_used] = histogram.get(variant_set.attempts_used, 0) + 1
        if variant_set.status is VariantSetStatus.EXHAUSTED:
            exhausted.append(source.id)
        for n, variant in enumerate(variant_set.variants, 1):
            synthetic.append(
                SentenceRecord(
                    id=f"{source.id}#v{n}",
                    text=variant.text,
                    label=source.label,
                    split=source.split,
                    provenance=Provenance.SYNTHETIC,
                    source_id=source.id,
                )
            )
    report = AugmentationReport(
        sources_total=len(sources),
        sets_complete=len(sources) - len(exhausted),
        sets_exhausted=len(exhausted),
        exhausted_ids=tuple(exhausted),
        new_records=len(synthetic),
        attempts_histogram=histogram,
    )
    augmented = Dataset(
        name=f"{dataset.name}-augmented" if dataset.name else "augmented",
        records=dataset.records + tuple(synthetic),
    )
    return AugmentationOutcome(dataset=augmented, report=report)


_VARIANT_SUFFIX = re.compile(r"#v(\d+)$")

DEFAULT_SIMILARITY_BAND = (0.45, 0.70)


@dataclass(frozen=True)
class SimilarityCell:
    """Mean distances for one variant index within one table row."""

    to_original: float | None
    to_siblings: float | None


@dataclass(frozen=True)
class SimilarityReport:
    """Per-split, per-category mean distances for each variant index.

    ``rows`` maps (split value, category name or "Average") to one cell
    per variant index. Cells outside the conformance band are listed in
    ``out_of_band``.
    """

    max_variants: int
    rows: dict[tuple[str, str], tuple[SimilarityCell, ...]]
    out_of_band: tuple[str, ...]


def similarity_report(
    dataset: Dataset, *, band: tuple[float, float] = DEFAULT_SIMILARITY_BAND
) -> SimilarityReport:
    """Summarize variant distances per split, category, and variant index.

    For every synthetic record, the distance to its source sentence and
    the mean distance to its co-variants are grouped by split, category,
    and variant index, then averaged; the Average row is the unweighted
    mean of the per-category means. Every resulting cell is compared
    against the conformance band and out-of-band cells are flagged.

    Raises:
        DanglingSourceError: when a synthetic record's source is missing.
    """
    by_id = dataset.by_id()
    groups: dict[str, list[SentenceRecord]] = {}
    for record in dataset.records:
        if record.provenance is Provenance.SYNTHETIC:
            source_id = record.source_id or ""
            if source_id not in by_id:
                raise DanglingSourceError(record.id, source_id)
            groups.setdefault(source_id, []).append(record)

    # (split, category, variant index) -> list of per-record distances
    to_original: dict[tuple[str, str, int], list[float]] = {}
    to_siblings: dict[tuple[str, str, int], list[float]] = {}
    max_index = 0
    for source_id, members in groups.items():
        source = by_id[source_id]
        indexed = [(_variant_index(record, position), record) for position, record in enumerate(members, 1)]
        for index, record in indexed:
            max_index = max(max_index, index)
            cell_key = (record.split.value, record.label.canonical_name, index)
            to_original.setdefault(cell_key, []).append(
                normalized_levenshtein(record.text, source.text)
            )
            siblings = [other.text for _, other in indexed if other.id != record.id]
            if siblings:
                to_siblings.setdefault(cell_key, []).append(
                    fmean(normalized_levenshtein(record.text, s) for s in siblings)
                )

    rows: dict[tuple[str, str], tuple[SimilarityCell, ...]] = {}
    flagged: list[str] = []
    for split in (Split.TRAIN, Split.VALIDATION):
        category_cells: dict[str, tuple[SimilarityCell, ...]] = {}
        for category in all_categories():
            cells = []
            for index in range(1, max_index + 1):
                cell_key = (split.value, category.canonical_name, index)
                cells.append(
                    SimilarityCell(
                        to_original=_mean_or_none(to_original.get(cell_key)),
                        to_siblings=_mean_or_none(to_siblings.get(cell_key)),
                    )
                )
            if any(c.to_original is not None or c.to_siblings is not None for c in cells):
                category_cells[category.canonical_name] = tuple(cells)
        if not category_cells:
            continue
        for name, cells in category_cells.items():
            rows[(split.value, name)] = cells
            flagged.extend(_band_flags(split.value, name, cells, band))
        average = tuple(
            SimilarityCell(
                to_original=_mean_or_none(
                    [c[i].to_original for c in category_cells.values() if c[i].to_original is not None]
                ),
                to_siblings=_mean_or_none(
                    [c[i].to_siblings for c in category_cells.values() if c[i].to_siblings is not None]
                ),
            )
            for i in range(max_index)
        )
        rows[(split.value, "Average")] = average
        flagged.extend(_band_flags(split.value, "Average", average, band))

    return SimilarityReport(max_variants=max_index, rows=rows, out_of_band=tuple(flagged))


def _variant_index(record: SentenceRecord, fallback: int) -> int:
    match = _VARIANT_SUFFIX.search(record.id)
    return int(match.group(1)) if match else fallback


def _mean_or_none(values: Sequence[float] | None) -> float | None:
    if not values:
        return None
    return fmean(values)


def _band_flags(
    split: str, name: str, cells: Sequence[SimilarityCell], band: tuple[float, float]
) -> list[str]:
    low, high = band
    flags = []
    for index, cell in enumerate(cells, 1):
        for kind, value in (("Original", cell.to_original), ("Other", cell.to_siblings)):
            if value is not None and not low <= value <= high:
                flags.append(f"{split}/{name}/Syn{index}-{kind}={value:.4f}")
    return flags


def similarity_table_csv(report: SimilarityReport) -> str:
    """CSV rendering: one row per split and category, Average row last."""
    import csv as _csv
    import io

    buffer = io.StringIO()
    writer = _csv.writer(buffer)
    header = ["split", "category"]
    for index in range(1, report.max_variants + 1):
        header += [f"Syn{index}-Original", f"Syn{index}-Other"]
    writer.writerow(header)
    names = [c.canonical_name for c in all_categories()] + ["Average"]
    for split in (Split.TRAIN.value, Split.VALIDATION.value):
        for name in names:
            cells = report.rows.get((split, name))
            if cells is None:
                continue
            row: list[str] = [split, name]
            for cell in cells:
                row.append("" if cell.to_original is None else f"{cell.to_original:.2f}")
                row.append("" if cell.to_siblings is None else f"{cell.to_siblings:.2f}")
            writer.writerow(row)
    return buffer.getvalue()
