"""Deterministic English noun phrases for pattern subgraphs.

The grammar is intentionally rigid so output is byte-stable: prenominal
attribute, "a"/"an" picked by the first letter of the phrase, "that is" /
"that are" copulas by plurality, "and is" joining a second relation, and
parentheses around nested second-level references:

    (fork [silver] <next to (plate)> <on (napkin)>)
        -> "silver fork that is next to a plate and is on a napkin"
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from .subgraphs import ModifierPattern, PatternObject, RelationPattern, canonicalize

VOWELS = "aeiou"


@lru_cache(maxsize=1)
def irregular_plurals() -> dict[str, str]:
    with resources.files("sgqgen.data").joinpath("irregular_plurals.json").open() as fh:
        return json.load(fh)


def pluralize(noun: str) -> str:
    table = irregular_plurals()
    if noun in table:
        return table[noun]
    if noun.endswith(("s", "x", "z", "ch", "sh")):
        return noun + "es"
    if noun.endswith("y") and len(noun) > 1 and noun[-2] not in VOWELS:
        return noun[:-1] + "ies"
    return noun + "s"


def article(phrase: str) -> str:
    return "an" if phrase[:1] in VOWELS else "a"


def strip_pattern(g: PatternObject, mask) -> PatternObject:
    """Drop the attribute / relation / modifier branches named by mask paths.

    Paths address the canonicalized pattern; object positions cannot be
    stripped (a pattern keeps its objects).
    """
    mask = {tuple(p) for p in mask}
    return _strip(canonicalize(g), (), mask)


def _strip(g: PatternObject, prefix, mask):
    attribute = g.attribute
    if attribute is not None and prefix + ("a",) in mask:
        attribute = None
    rels = []
    for i, r in enumerate(g.relations):
        if prefix + ("r", i) in mask:
            continue
        mods = tuple(
            ModifierPattern(m.name, _strip(m.target, prefix + ("r", i, "m", j, "t"), mask))
            for j, m in enumerate(r.modifiers)
            if prefix + ("r", i, "m", j) not in mask
        )
        rels.append(
            RelationPattern(r.name, _strip(r.target, prefix + ("r", i, "t"), mask), mods)
        )
    return PatternObject(g.name, attribute, tuple(rels))


def describe(g: PatternObject, plural: bool = False, mask=(), root_clause: str = "that") -> str:
    """Render the pattern as a noun phrase.

    root_clause "that" gives "men that are in a pool"; "bare" gives
    "men are in a pool" (used by counting questions).
    """
    g = strip_pattern(g, mask)
    return _np(g, plural=plural, root_clause=root_clause)


def _np(g: PatternObject, plural: bool, root_clause: str = "that") -> str:
    noun = pluralize(g.name) if plural else g.name
    head = f"{g.attribute} {noun}" if g.attribute is not None else noun
    if not g.relations:
        return head
    copula = "are" if plural else "is"
    clauses = [_relation_phrase(r) for r in g.relations]
    if root_clause == "bare":
        lead = f"{head} {copula} "
    else:
        lead = f"{head} that {copula} "
    joiner = f" and {copula} "
    return lead + joiner.join(clauses)


def _relation_phrase(r) -> str:
    parts = [r.name, _reference(r.target)]
    for m in r.modifiers:
        parts.append(m.name)
        parts.append(_reference(m.target))
    return " ".join(parts)


def relation_clause(r) -> str:
    """Predicate-position rendering of one relation branch: "wearing a jeans"."""
    return _relation_phrase(r)


def option_phrase(name: str) -> str:
    """Choice-slot rendering of a bare object name: "a bottle"."""
    return f"{article(name)} {name}"


def _reference(target: PatternObject) -> str:
    inner = _np(target, plural=False)
    ref = f"{article(inner)} {inner}"
    if target.relations:
        return f"({ref})"
    return ref
