"""Typed edit distance between pattern subgraphs.

The only edit is substituting a node's name with another name of the same
node type, and only where the exclusivity lexicon scores the pair above the
threshold. Two patterns are comparable only when some shape-preserving
isomorphism exists (same tree shape, attribute slots, fan-out and modifier
counts); the distance is the minimum number of differing name positions over
such isomorphisms. Directional relation scores are taken as
score(name in g1, name in g2).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .lexicon import ExclusionLexicon
from .subgraphs import PatternObject, canonicalize

_BLOCKED = None


@dataclass(frozen=True)
class Substitution:
    path: tuple
    kind: str
    original: str
    replacement: str


def edit_distance(g1: PatternObject, g2: PatternObject, lex: ExclusionLexicon) -> int | None:
    """Minimum substitution count, or None when the patterns are incomparable
    (no isomorphism, or every isomorphism needs a blocked substitution)."""
    result = edit_distance_witness(g1, g2, lex)
    return None if result is None else result[0]


def edit_distance_witness(
    g1: PatternObject, g2: PatternObject, lex: ExclusionLexicon
) -> tuple[int, tuple[Substitution, ...]] | None:
    """Distance plus one minimal substitution list (deterministic tie-break);
    substitution paths address g1's canonical structure."""
    return _match_objects(canonicalize(g1), canonicalize(g2), lex, ())


def _name_cost(lex, kind, n1, n2, path):
    if n1 == n2:
        return 0, ()
    if not lex.excludes(kind, n1, n2):
        return _BLOCKED
    return 1, (Substitution(path, kind, n1, n2),)


def _combine(*parts):
    total, subs = 0, ()
    for part in parts:
        if part is _BLOCKED or part is None:
            return _BLOCKED
        total += part[0]
        subs += part[1]
    return total, subs


def _best(a, b):
    if a is _BLOCKED:
        return b
    if b is _BLOCKED:
        return a
    if a[0] != b[0]:
        return a if a[0] < b[0] else b
    # Deterministic tie-break on the substitution lists.
    ka = tuple((s.path, s.original, s.replacement) for s in a[1])
    kb = tuple((s.path, s.original, s.replacement) for s in b[1])
    return a if ka <= kb else b


def _match_objects(p1: PatternObject, p2: PatternObject, lex, path):
    if (p1.attribute is None) != (p2.attribute is None):
        return _BLOCKED
    if len(p1.relations) != len(p2.relations):
        return _BLOCKED
    name = _name_cost(lex, "object", p1.name, p2.name, path + ("o",))
    if name is _BLOCKED:
        return _BLOCKED
    attr = (0, ())
    if p1.attribute is not None:
        attr = _name_cost(lex, "attribute", p1.attribute, p2.attribute, path + ("a",))
        if attr is _BLOCKED:
            return _BLOCKED
    rels = _match_relation_lists(p1.relations, p2.relations, lex, path)
    return _combine(name, attr, rels)


def _match_relation_lists(rels1, rels2, lex, path):
    if not rels1:
        return 0, ()
    if len(rels1) == 1:
        return _match_relation(rels1[0], rels2[0], lex, path, 0)
    # Fan-out is capped at two relations, so try both pairings.
    straight = _combine(
        _match_relation(rels1[0], rels2[0], lex, path, 0),
        _match_relation(rels1[1], rels2[1], lex, path, 1),
    )
    crossed = _combine(
        _match_relation(rels1[0], rels2[1], lex, path, 0),
        _match_relation(rels1[1], rels2[0], lex, path, 1),
    )
    return _best(straight, crossed)


def _match_relation(r1, r2, lex, path, idx):
    if len(r1.modifiers) != len(r2.modifiers):
        return _BLOCKED
    name = _name_cost(lex, "relation", r1.name, r2.name, path + ("r", idx))
    if name is _BLOCKED:
        return _BLOCKED
    target = _match_objects(r1.target, r2.target, lex, path + ("r", idx, "t"))
    if target is _BLOCKED:
        return _BLOCKED
    mods = _match_modifier_lists(r1.modifiers, r2.modifiers, lex, path + ("r", idx))
    return _combine(name, target, mods)


def _match_modifier_lists(mods1, mods2, lex, rel_path):
    if not mods1:
        return 0, ()
    best = _BLOCKED
    for perm in itertools.permutations(range(len(mods2))):
        parts = []
        for j, k in enumerate(perm):
            m1, m2 = mods1[j], mods2[k]
            name = _name_cost(lex, "modifier", m1.name, m2.name, rel_path + ("m", j))
            target = _match_objects(m1.target, m2.target, lex, rel_path + ("m", j, "t"))
            parts.append(_combine(name, target))
        best = _best(best, _combine(*parts))
    return best
