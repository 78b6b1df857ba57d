"""Mutual-exclusivity scores and attribute categories.

The exclusivity lexicon says how safe it is to substitute one node name for
another when hunting distractors: score > 0.5 means the two names cannot both
truthfully describe the same thing. Unlisted distinct pairs default to 1.0
(exclusive); identical names score 0. Object and attribute entries are
symmetric; relation entries are directional ("riding on" excludes "near",
but swapping a "near" question onto a "riding" scene would be ambiguous,
so the reverse row may score 0).

File format, one row per pair:

    object<TAB>man<TAB>person<TAB>0
    relation<TAB>riding on<TAB>near<TAB>1
"""

from __future__ import annotations

import json
from importlib import resources

KINDS = ("object", "attribute", "relation")
EXCLUSIVITY_THRESHOLD = 0.5


class LexiconError(ValueError):
    pass


class ExclusionLexicon:
    def __init__(self, entries: dict[tuple[str, str, str], float] | None = None):
        self._scores: dict[tuple[str, str, str], float] = {}
        if entries:
            for (kind, x1, x2), score in entries.items():
                self.add(kind, x1, x2, score)

    def add(self, kind: str, x1: str, x2: str, score: float) -> None:
        if kind not in KINDS:
            raise LexiconError(f"unknown node kind {kind!r}")
        if not 0.0 <= score <= 1.0:
            raise LexiconError(f"score out of range for ({x1!r}, {x2!r}): {score}")
        if x1 == x2:
            raise LexiconError(f"self-pair {x1!r} is fixed at score 0")
        self._scores[(kind, x1, x2)] = score
        if kind in ("object", "attribute"):
            self._scores[(kind, x2, x1)] = score

    def score(self, kind: str, x1: str, x2: str) -> float:
        """Probability that x1 and x2 are mutually exclusive; directional
        for relations (first argument is the source-pattern name)."""
        if x1 == x2:
            return 0.0
        # Modifier names behave like relational vocabulary.
        if kind == "modifier":
            kind = "relation"
        return self._scores.get((kind, x1, x2), 1.0)

    def excludes(self, kind: str, x1: str, x2: str) -> bool:
        return self.score(kind, x1, x2) > EXCLUSIVITY_THRESHOLD

    def rows(self):
        return sorted(self._scores.items())

    @classmethod
    def from_tsv_lines(cls, lines) -> "ExclusionLexicon":
        lex = cls()
        for line_no, line in enumerate(lines, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split("\t")
            if len(parts) != 4:
                raise LexiconError(f"line {line_no}: expected 4 tab-separated fields")
            kind, x1, x2, score = parts
            try:
                value = float(score)
            except ValueError:
                raise LexiconError(f"line {line_no}: bad score {score!r}") from None
            lex.add(kind, x1, x2, value)
        return lex

    @classmethod
    def load(cls, path) -> "ExclusionLexicon":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_tsv_lines(fh)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for (kind, x1, x2), score in self.rows():
                fh.write(f"{kind}\t{x1}\t{x2}\t{score:g}\n")


def default_exclusion_lexicon() -> ExclusionLexicon:
    """Synonym/hypernym pairs covering the bundled fixture vocabulary only;
    corpus-scale lexicons are supplied by the user."""
    text = resources.files("sgqgen.data").joinpath("exclusion_lexicon.tsv").read_text()
    return ExclusionLexicon.from_tsv_lines(text.splitlines())


class AttributeCategories:
    """Maps flat attribute values to categories ("white" -> "color")."""

    def __init__(self, mapping: dict[str, str]):
        self._by_value = dict(mapping)

    def category_of(self, value: str) -> str | None:
        return self._by_value.get(value)

    def values_in(self, category: str) -> list[str]:
        return sorted(v for v, c in self._by_value.items() if c == category)

    def categories(self) -> list[str]:
        return sorted(set(self._by_value.values()))

    def as_dict(self) -> dict[str, str]:
        return dict(self._by_value)

    @classmethod
    def load(cls, path) -> "AttributeCategories":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(json.load(fh))


def default_attribute_categories() -> AttributeCategories:
    text = resources.files("sgqgen.data").joinpath("attribute_categories.json").read_text()
    return AttributeCategories(json.loads(text))
