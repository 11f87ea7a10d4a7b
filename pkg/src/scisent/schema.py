"""Rhetorical category taxonomy for literature-review sentences.

Seven fixed categories describe the discourse role a sentence plays inside
a related-work section. Two of them address the research topic as a whole
(Overall, Research Gap), four address one specific study (Description,
Result, Limitation, Extension), and Other absorbs everything else. The
enumeration order defined here is the canonical row/column order used by
every report and confusion matrix in the package.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class Category(enum.Enum):
    """The seven rhetorical categories, in canonical order."""

    OVERALL = "Overall"
    RESEARCH_GAP = "Research Gap"
    DESCRIPTION = "Description"
    RESULT = "Result"
    LIMITATION = "Limitation"
    EXTENSION = "Extension"
    OTHER = "Other"

    @property
    def canonical_name(self) -> str:
        """Human-readable display name, e.g. ``"Research Gap"``."""
        return self.value

    @property
    def snake_id(self) -> str:
        """Machine-safe identifier used in file formats, e.g. ``"research_gap"``."""
        return self.value.lower().replace(" ", "_")


class Level(enum.Enum):
    """Whether a category describes the topic as a whole or one study."""

    TOPIC = "topic"
    STUDY = "study"
    NONE = "none"


@dataclass(frozen=True)
class CategoryDefinition:
    """A category together with its level and annotation-guideline text."""

    category: Category
    level: Level
    definition_text: str


CATEGORY_DEFINITIONS: tuple[CategoryDefinition, ...] = (
    CategoryDefinition(
        Category.OVERALL,
        Level.TOPIC,
        "Gives a general overview or summary of the research topic as a "
        "whole, describing the state of the art of the area rather than "
        "any single study.",
    ),
    CategoryDefinition(
        Category.RESEARCH_GAP,
        Level.TOPIC,
        "Points out unresolved issues, open questions, or the need for "
        "further research at the level of the research topic.",
    ),
    CategoryDefinition(
        Category.DESCRIPTION,
        Level.STUDY,
        "Describes a specific study, including its aims, approach, "
        "method, data, or scope.",
    ),
    CategoryDefinition(
        Category.RESULT,
        Level.STUDY,
        "Reports the findings or outcomes of a specific study.",
    ),
    CategoryDefinition(
        Category.LIMITATION,
        Level.STUDY,
        "Identifies methodological or conceptual shortcomings of a "
        "specific study.",
    ),
    CategoryDefinition(
        Category.EXTENSION,
        Level.STUDY,
        "Explains how the current work builds on, contrasts with, or "
        "elaborates a specific study or existing approaches, articulating "
        "the motivation for the new contribution.",
    ),
    CategoryDefinition(
        Category.OTHER,
        Level.NONE,
        "Does not fit any of the other categories; used to avoid forced "
        "assignments when no rhetorical role clearly applies.",
    ),
)


class UnknownLabelError(ValueError):
    """Raised when a label string matches none of the seven categories."""

    def __init__(self, text: str):
        super().__init__(f"unknown category label: {text!r}")
        self.text = text


_TRAILING_PUNCTUATION = ".:,"


def normalize_label(text: str) -> str:
    """Normalize a label string for matching.

    Trims surrounding whitespace, collapses internal whitespace runs to a
    single space, strips trailing ``.``, ``:`` and ``,`` characters, and
    lowercases. Normalization never changes which category a string can
    match; it only widens tolerance for formatting noise.
    """
    collapsed = " ".join(text.split())
    return collapsed.rstrip(_TRAILING_PUNCTUATION).rstrip().lower()


def _build_lookup() -> dict[str, Category]:
    lookup: dict[str, Category] = {}
    for category in Category:
        lookup[normalize_label(category.canonical_name)] = category
        lookup[category.snake_id] = category
    return lookup


_LOOKUP = _build_lookup()


def parse_label(text: str) -> Category:
    """Resolve a label string to its :class:`Category`.

    Accepts canonical display names ("Research Gap") and machine-safe
    snake identifiers ("research_gap"), case-insensitively and tolerant
    of surrounding whitespace and trailing punctuation.

    Raises:
        UnknownLabelError: if no category matches after normalization.
    """
    category = _LOOKUP.get(normalize_label(text))
    if category is None:
        raise UnknownLabelError(text)
    return category


def all_categories() -> tuple[Category, ...]:
    """The seven categories in canonical order.

    This order indexes every confusion matrix and report row produced by
    the package.
    """
    return tuple(Category)


def definition_for(category: Category) -> CategoryDefinition:
    """Return the definition entry for one category."""
    for definition in CATEGORY_DEFINITIONS:
        if definition.category is category:
            return definition
    raise KeyError(category)
