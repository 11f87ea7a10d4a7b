"""Walkthrough: classify a small dataset with the mock backend and score it.

Builds a toy fourteen-sentence test split, answers each sentence from a
fixture table (two of them deliberately badly), and prints the resulting
per-category table and confusion matrix. Everything runs offline; swap
MockBackend for ChatCompletionsBackend (plus SCISENT_API_KEY) to hit a
real endpoint with the identical code path.
"""

from scisent import (
    Category,
    Dataset,
    MockBackend,
    SentenceRecord,
    Split,
    all_categories,
    classify_split,
    default_template,
    evaluate,
)
from scisent.metrics import confusion_csv, report_table_csv

# Two sentences per category, all in the test split.
records = []
for category in all_categories():
    for n in range(2):
        records.append(
            SentenceRecord(
                id=f"{category.snake_id}-{n}",
                text=f"Toy sentence {n} written in the style of {category.canonical_name}.",
                label=category,
                split=Split.TEST,
            )
        )
dataset = Dataset(name="toy", records=tuple(records))

# Fixture answers: mostly correct, one wrong, one unparseable.
fixtures = {r.id: f"CATEGORY: {r.label.canonical_name}" for r in records}
fixtures["result-1"] = "CATEGORY: Description"  # a misclassification
fixtures["other-1"] = "hard to say, could be Overall or Extension"  # unparseable

backend = MockBackend(fixtures)
run = classify_split(dataset, Split.TEST, default_template(), backend)
print(f"model={run.model_id} predictions={len(run.predictions)} "
      f"parsed={run.parsed_count} unparsed={run.unparsed_count}\n")

gold_by_id = {r.id: r.label for r in dataset.records}
report = evaluate(
    [gold_by_id[p.sentence_id] for p in run.predictions],
    [p.predicted for p in run.predictions],
    run_id=run.run_id,
    split="test",
)

print(report_table_csv(report))
print(confusion_csv(report.matrix))
print(f"macro F1 = {report.macro.f1:.3f}, unparsed = {report.unparsed_count}")

# The prediction records keep the raw responses and parse diagnostics.
for prediction in run.predictions:
    if prediction.predicted is not gold_by_id[prediction.sentence_id]:
        print(f"  {prediction.sentence_id}: {prediction.diagnostics} | {prediction.raw_response!r}")
