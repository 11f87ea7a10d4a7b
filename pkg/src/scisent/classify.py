"""Prompt construction, response parsing, and whole-split classification runs.

The prompt template is data, not code: a UTF-8 file with three sections
(objective, category definitions, procedure) whose procedure contains a
``{{SENTENCE}}`` placeholder and states the required ``CATEGORY: <label>``
output line. Responses that violate the output contract are kept as
Unparsed predictions rather than retried, so a run faithfully records how
a model behaved under one fixed template.
"""

from __future__ import annotations

import json
import re
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Callable

from .backend import Backend, BackendConfig, BackendError, request_fingerprint
from .corpus import Dataset, Split
from .schema import Category, UnknownLabelError, all_categories, parse_label

SENTENCE_PLACEHOLDER = "{{SENTENCE}}"

SECTION_OBJECTIVE = "## OBJECTIVE"
SECTION_CATEGORIES = "## CATEGORIES"
SECTION_PROCEDURE = "## PROCEDURE"


class TemplateError(ValueError):
    """A prompt template file that violates the three-section contract."""


class EmptySplitError(ValueError):
    def __init__(self, split: Split):
        super().__init__(f"split {split.value!r} has no records")
        self.split = split


@dataclass(frozen=True)
class PromptTemplate:
    """Three-part classification prompt with a single sentence slot."""

    objective_text: str
    category_definitions: tuple[tuple[Category, str], ...]
    procedure_text: str

    def __post_init__(self) -> None:
        if self.procedure_text.count(SENTENCE_PLACEHOLDER) != 1:
            raise TemplateError(
                f"procedure must contain {SENTENCE_PLACEHOLDER} exactly once"
            )
        listed = tuple(category for category, _ in self.category_definitions)
        if listed != all_categories():
            raise TemplateError(
                "category definitions must list all seven categories once, in canonical order"
            )

    def render(self, sentence_text: str) -> str:
        """Assemble the full prompt for one sentence.

        Deterministic: objective, then the seven definitions in order,
        then the procedure with the sentence substituted. The sentence is
        inserted as-is; everything else is byte-identical across calls.
        """
        if not sentence_text:
            raise ValueError("sentence_text must be non-empty")
        definitions = "\n".join(
            f"- {category.canonical_name}: {definition}"
            for category, definition in self.category_definitions
        )
        procedure = self.procedure_text.replace(SENTENCE_PLACEHOLDER, sentence_text, 1)
        return f"{self.objective_text}\n\n{definitions}\n\n{procedure}"


def build_prompt(template: PromptTemplate, sentence_text: str) -> str:
    return template.render(sentence_text)


def parse_template(text: str) -> PromptTemplate:
    """Parse the three-section template file format."""
    sections: dict[str, list[str]] = {}
    current: list[str] | None = None
    for line in text.splitlines():
        stripped = line.rstrip()
        if stripped in (SECTION_OBJECTIVE, SECTION_CATEGORIES, SECTION_PROCEDURE):
            if stripped in sections:
                raise TemplateError(f"duplicate section: {stripped}")
            current = sections.setdefault(stripped, [])
            continue
        if current is not None:
            current.append(line)
    for header in (SECTION_OBJECTIVE, SECTION_CATEGORIES, SECTION_PROCEDURE):
        if header not in sections:
            raise TemplateError(f"missing section: {header}")

    definitions: list[tuple[Category, str]] = []
    for line in sections[SECTION_CATEGORIES]:
        body = line.strip()
        if not body:
            continue
        body = body.lstrip("-").lstrip()
        name, sep, definition = body.partition(":")
        if not sep or not definition.strip():
            raise TemplateError(f"category line without 'Name: definition': {line!r}")
        try:
            category = parse_label(name)
        except UnknownLabelError:
            raise TemplateError(f"unknown category name: {name.strip()!r}") from None
        definitions.append((category, definition.strip()))

    return PromptTemplate(
        objective_text="\n".join(sections[SECTION_OBJECTIVE]).strip(),
        category_definitions=tuple(definitions),
        procedure_text="\n".join(sections[SECTION_PROCEDURE]).strip(),
    )


def load_template(path: str | Path) -> PromptTemplate:
    return parse_template(Path(path).read_text(encoding="utf-8"))


def default_template() -> PromptTemplate:
    """The classification template shipped with the package."""
    text = resources.files("scisent").joinpath("data/zsl_prompt.txt").read_text("utf-8")
    return parse_template(text)


class ParseStatus(Enum):
    PARSED = "parsed"
    UNPARSED = "unparsed"


@dataclass(frozen=True)
class ResponseParse:
    """Outcome of extracting a category from raw model output."""

    category: Category | None
    rule: str  # "category-line", "fallback", or "unparsed"
    detail: str


_CATEGORY_LINE = re.compile(r"^\s*category\s*:\s*(?P<label>.+?)\s*$", re.IGNORECASE)
_NAME_PATTERNS = {
    category: re.compile(rf"\b{re.escape(category.canonical_name)}\b", re.IGNORECASE)
    for category in all_categories()
}


def parse_response(raw: str) -> ResponseParse:
    """Extract a category from raw model output.

    Scans line by line for the first ``CATEGORY: <label>`` line (keyword
    case-insensitive, label resolved through the shared normalizer). When
    no such line exists, falls back to a whole-word search: if exactly one
    canonical category name occurs anywhere in the text, that category is
    returned with a ``fallback`` diagnostic. Anything else is Unparsed.
    """
    for line_number, line in enumerate(raw.splitlines(), 1):
        match = _CATEGORY_LINE.match(line)
        if not match:
            continue
        try:
            category = parse_label(match.group("label"))
        except UnknownLabelError:
            continue
        return ResponseParse(category, "category-line", f"line {line_number}")
    mentioned = [c for c, pattern in _NAME_PATTERNS.items() if pattern.search(raw)]
    if len(mentioned) == 1:
        return ResponseParse(mentioned[0], "fallback", f"unique name {mentioned[0].canonical_name!r}")
    return ResponseParse(None, "unparsed", f"{len(mentioned)} category names found")


@dataclass(frozen=True)
class Prediction:
    """One model answer for one sentence."""

    sentence_id: str
    predicted: Category | None
    raw_response: str
    parse_status: ParseStatus
    request_fingerprint: str
    diagnostics: str = ""

    def __post_init__(self) -> None:
        if (self.predicted is not None) != (self.parse_status is ParseStatus.PARSED):
            raise ValueError("predicted must be present exactly when parse_status is parsed")


def prediction_to_dict(prediction: Prediction) -> dict:
    return {
        "sentence_id": prediction.sentence_id,
        "predicted": prediction.predicted.snake_id if prediction.predicted else None,
        "raw_response": prediction.raw_response,
        "parse_status": prediction.parse_status.value,
        "request_fingerprint": prediction.request_fingerprint,
        "diagnostics": prediction.diagnostics,
    }


def prediction_from_dict(raw: dict) -> Prediction:
    predicted = raw["predicted"]
    return Prediction(
        sentence_id=raw["sentence_id"],
        predicted=parse_label(predicted) if predicted else None,
        raw_response=raw["raw_response"],
        parse_status=ParseStatus(raw["parse_status"]),
        request_fingerprint=raw["request_fingerprint"],
        diagnostics=raw.get("diagnostics", ""),
    )


class RunStore:
    """Append-only prediction cache keyed by (model_id, request_fingerprint).

    Every completed prediction is written through immediately, so an
    interrupted run resumes without re-querying finished sentences. Puts
    are idempotent per key.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.path = self.root / "predictions.jsonl"
        self._index: dict[tuple[str, str], Prediction] = {}
        self._lock = threading.Lock()
        if self.path.exists():
            with open(self.path, encoding="utf-8") as handle:
                for line in handle:
                    if not line.strip():
                        continue
                    raw = json.loads(line)
                    prediction = prediction_from_dict(raw)
                    self._index[(raw["model_id"], prediction.request_fingerprint)] = prediction

    def get(self, model_id: str, fingerprint: str) -> Prediction | None:
        with self._lock:
            return self._index.get((model_id, fingerprint))

    def put(self, model_id: str, prediction: Prediction) -> None:
        key = (model_id, prediction.request_fingerprint)
        with self._lock:
            if key in self._index:
                return
            self._index[key] = prediction
            row = {"model_id": model_id, **prediction_to_dict(prediction)}
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(row, ensure_ascii=False))
                handle.write("\n")
                handle.flush()


@dataclass(frozen=True)
class ClassificationRun:
    """Predictions of one model configuration over one dataset split."""

    run_id: str
    model_id: str
    config_snapshot: BackendConfig
    dataset_name: str
    split: Split
    predictions: tuple[Prediction, ...]
    started_at: str
    finished_at: str
    adjustments: tuple[str, ...] = ()

    @property
    def parsed_count(self) -> int:
        return sum(1 for p in self.predictions if p.parse_status is ParseStatus.PARSED)

    @property
    def unparsed_count(self) -> int:
        return len(self.predictions) - self.parsed_count


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def classify_split(
    dataset: Dataset,
    split: Split,
    template: PromptTemplate,
    backend: Backend,
    store: RunStore | None = None,
    *,
    concurrency: int = 4,
    run_id: str | None = None,
    now: Callable[[], str] = _utc_now,
) -> ClassificationRun:
    """Classify every sentence of one split, in stable id order.

    Cached predictions are reused when (model_id, request_fingerprint)
    is already in the store. A backend failure on one sentence becomes an
    Unparsed prediction carrying the error; it never aborts the run. The
    ordered prediction list is identical regardless of how concurrent
    requests complete.
    """
    sentences = sorted(dataset.by_split(split), key=lambda r: r.id)
    if not sentences:
        raise EmptySplitError(split)

    model_id = backend.config.model_id

    def classify_one(record) -> Prediction:
        prompt = template.render(record.text)
        fingerprint = request_fingerprint(backend.config, prompt)
        if store is not None:
            cached = store.get(model_id, fingerprint)
            if cached is not None:
                return replace(cached, sentence_id=record.id)
        try:
            result = backend.generate(prompt, key=record.id)
        except BackendError as exc:
            prediction = Prediction(
                sentence_id=record.id,
                predicted=None,
                raw_response="",
                parse_status=ParseStatus.UNPARSED,
                request_fingerprint=fingerprint,
                diagnostics=f"backend-error: {type(exc).__name__}: {exc}",
            )
        else:
            parsed = parse_response(result.text)
            prediction = Prediction(
                sentence_id=record.id,
                predicted=parsed.category,
                raw_response=result.text,
                parse_status=ParseStatus.PARSED if parsed.category else ParseStatus.UNPARSED,
                request_fingerprint=fingerprint,
                diagnostics=f"{parsed.rule}: {parsed.detail}",
            )
        if store is not None:
            store.put(model_id, prediction)
        return prediction

    started_at = now()
    if concurrency <= 1 or len(sentences) == 1:
        predictions = tuple(classify_one(record) for record in sentences)
    else:
        with ThreadPoolExecutor(max_workers=concurrency) as executor:
            predictions = tuple(executor.map(classify_one, sentences))
    finished_at = now()

    return ClassificationRun(
        run_id=run_id or uuid.uuid4().hex,
        model_id=model_id,
        config_snapshot=backend.config,
        dataset_name=dataset.name,
        split=split,
        predictions=predictions,
        started_at=started_at,
        finished_at=finished_at,
        adjustments=tuple(backend.adjustments),
    )


RUN_MANIFEST = "manifest.json"
RUN_PREDICTIONS = "predictions.jsonl"


def save_run(run: ClassificationRun, out_dir: str | Path) -> Path:
    """Persist a run as a JSON manifest plus a predictions JSON Lines file."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "run_id": run.run_id,
        "model_id": run.model_id,
        "config": run.config_snapshot.to_dict(),
        "dataset_name": run.dataset_name,
        "split": run.split.value,
        "started_at": run.started_at,
        "finished_at": run.finished_at,
        "adjustments": list(run.adjustments),
        "predictions_file": RUN_PREDICTIONS,
        "prediction_count": len(run.predictions),
        "parsed_count": run.parsed_count,
        "unparsed_count": run.unparsed_count,
    }
    manifest_path = out_dir / RUN_MANIFEST
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    with open(out_dir / RUN_PREDICTIONS, "w", encoding="utf-8") as handle:
        for prediction in run.predictions:
            handle.write(json.dumps(prediction_to_dict(prediction), ensure_ascii=False))
            handle.write("\n")
    return manifest_path


def load_run(path: str | Path) -> ClassificationRun:
    """Load a run saved by :func:`save_run`; accepts the directory or manifest."""
    path = Path(path)
    manifest_path = path / RUN_MANIFEST if path.is_dir() else path
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    predictions: list[Prediction] = []
    with open(manifest_path.parent / manifest["predictions_file"], encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                predictions.append(prediction_from_dict(json.loads(line)))
    return ClassificationRun(
        run_id=manifest["run_id"],
        model_id=manifest["model_id"],
        config_snapshot=BackendConfig(**manifest["config"]),
        dataset_name=manifest["dataset_name"],
        split=Split(manifest["split"]),
        predictions=tuple(predictions),
        started_at=manifest["started_at"],
        finished_at=manifest["finished_at"],
        adjustments=tuple(manifest["adjustments"]),
    )
