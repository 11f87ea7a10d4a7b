"""Walkthrough: semi-synthetic augmentation with the diversity gate.

A fixture backend plays the paraphrasing model. Its first answer for one
sentence is a near-copy, so the gate rejects it and the loop regenerates;
the attempt accounting and the final distance report make that visible.
"""

from scisent import (
    AugmentationPolicy,
    Category,
    Dataset,
    MockBackend,
    SentenceRecord,
    Split,
    augment_dataset,
    normalized_levenshtein,
)
from scisent.augment import similarity_report, similarity_table_csv
from scisent.corpus import ValidationProfile

source_text = "Prior systems summarize single papers instead of synthesizing them."
dataset = Dataset(
    name="demo",
    records=(
        SentenceRecord("gap-0", source_text, Category.RESEARCH_GAP, Split.TRAIN),
        SentenceRecord(
            "desc-0",
            "The survey catalogues forty models released over five years.",
            Category.DESCRIPTION,
            Split.VALIDATION,
        ),
    ),
)

# Sequence fixtures: the first candidate for gap-0 barely edits the
# original (distance well under 0.20), so it must be discarded.
fixtures = {
    "gap-0": [
        "Prior systems summarize single papers instead of synthesizing them!",
        "Earlier tools merely condense one paper at a time rather than weaving sources together.",
        "Instead of integrating findings across works, existing pipelines digest papers one by one.",
        "Current approaches produce isolated summaries and never a combined synthesis.",
        "One-paper-at-a-time summarization remains the norm, with no cross-study integration.",
    ],
    "desc-0": [
        "Forty systems from a five-year span are inventoried by the survey.",
        "The review lists every model, forty in total, published across five years.",
        "Covering half a decade, the catalogue spans forty released models.",
        "A five-year sweep of the literature yields the forty models described.",
    ],
}

near_copy = fixtures["gap-0"][0]
print(f"near-copy distance: {normalized_levenshtein(source_text, near_copy):.4f} (gate needs > 0.20)\n")

policy = AugmentationPolicy()  # 4 variants, 0.20 threshold, 5 attempts per slot
outcome = augment_dataset(dataset, MockBackend(fixtures), policy, profile=ValidationProfile.NONE)

report = outcome.report
print(f"sources={report.sources_total} new_records={report.new_records} "
      f"exhausted={report.sets_exhausted}")
print(f"attempts histogram: {report.attempts_histogram}  <- gap-0 burned one extra attempt\n")

for record in outcome.dataset.records:
    if record.source_id == "gap-0":
        distance = normalized_levenshtein(source_text, record.text)
        print(f"  {record.id}  d(original)={distance:.2f}  {record.text}")

print("\nsimilarity table (means per variant index):")
print(similarity_table_csv(similarity_report(outcome.dataset, band=(0.0, 1.0))))
