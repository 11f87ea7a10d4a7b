"""Toolkit for classifying literature-review sentences by rhetorical role.

The package covers the full measurement loop around a seven-category
sentence taxonomy: dataset loading, validation and stratified splitting;
prompted classification through remote chat-completion backends (with an
offline mock for reproducible runs); inter-annotator agreement
statistics; semi-synthetic augmentation guarded by an edit-distance
diversity gate; and evaluation with confusion matrices, per-category and
macro precision/recall/F1, and run-to-run comparisons.
"""

from .agreement import (
    RatingMatrix,
    fleiss_kappa,
    gwet_ac1_overall,
    gwet_ac1_per_category,
)
from .augment import (
    AugmentationPolicy,
    augment_dataset,
    gate_variant,
    generate_variant_set,
    normalized_levenshtein,
    similarity_report,
)
from .backend import (
    BackendConfig,
    ChatCompletionsBackend,
    GenerationResult,
    MockBackend,
    request_fingerprint,
)
from .classify import (
    ClassificationRun,
    Prediction,
    PromptTemplate,
    RunStore,
    build_prompt,
    classify_split,
    default_template,
    load_template,
    parse_response,
)
from .corpus import (
    Dataset,
    Provenance,
    SentenceRecord,
    Split,
    ValidationProfile,
    load_dataset,
    save_dataset,
    stratified_split,
    validate_dataset,
)
from .metrics import (
    ConfusionMatrix,
    EvalReport,
    compare_runs,
    confusion,
    evaluate,
    macro_average,
    per_category_prf,
)
from .schema import (
    CATEGORY_DEFINITIONS,
    Category,
    CategoryDefinition,
    Level,
    all_categories,
    parse_label,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentationPolicy",
    "BackendConfig",
    "CATEGORY_DEFINITIONS",
    "Category",
    "CategoryDefinition",
    "ChatCompletionsBackend",
    "ClassificationRun",
    "ConfusionMatrix",
    "Dataset",
    "EvalReport",
    "GenerationResult",
    "Level",
    "MockBackend",
    "Prediction",
    "PromptTemplate",
    "Provenance",
    "RatingMatrix",
    "RunStore",
    "SentenceRecord",
    "Split",
    "ValidationProfile",
    "all_categories",
    "augment_dataset",
    "build_prompt",
    "classify_split",
    "compare_runs",
    "confusion",
    "default_template",
    "evaluate",
    "fleiss_kappa",
    "gate_variant",
    "generate_variant_set",
    "gwet_ac1_overall",
    "gwet_ac1_per_category",
    "load_dataset",
    "load_template",
    "macro_average",
    "normalized_levenshtein",
    "parse_label",
    "parse_response",
    "per_category_prf",
    "request_fingerprint",
    "save_dataset",
    "similarity_report",
    "stratified_split",
    "validate_dataset",
]
