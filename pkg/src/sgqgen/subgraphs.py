"""Rooted pattern subgraphs over scenes: validation, enumeration, matching.

A pattern is a tree rooted at an object node. Objects carry at most one
attribute and fan out to at most two relations; relations point at exactly
one target object and may carry modifiers (ternary relations); no root-to-leaf
path crosses more than two relation nodes.

Canonical text form (relations and modifiers sorted by their serialization):

    (man [tall] <wearing (jeans)>)
    (man [standing] <uncorking {with (corkscrew)} (bottle [wine])>)

Positions inside a pattern are addressed by paths, e.g. ``('a',)`` is the
root's attribute, ``('r', 0, 't')`` the first relation's target object and
``('r', 0, 'm', 1)`` the name of that relation's second modifier.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Iterable

from .scenes import ObjectNode, SceneGraph

MAX_RELATIONS_PER_OBJECT = 2
MAX_RELATION_DEPTH = 2
DEFAULT_MAX_OBJECTS = 4

# Type-tagged wildcards used by masked index keys.
WILDCARDS = {"object": "?o", "attribute": "?a", "relation": "?r", "modifier": "?m"}


@dataclass(frozen=True)
class ModifierPattern:
    name: str
    target: "PatternObject"


@dataclass(frozen=True)
class RelationPattern:
    name: str
    target: "PatternObject"
    modifiers: tuple[ModifierPattern, ...] = ()


@dataclass(frozen=True)
class PatternObject:
    name: str
    attribute: str | None = None
    relations: tuple[RelationPattern, ...] = ()


# The unit of generation is the whole rooted pattern; the root object *is*
# the subgraph.
Subgraph = PatternObject

Position = tuple  # path tuple, see module docstring
Assignment = dict  # Position of an object node -> concrete object id


class PatternSyntaxError(ValueError):
    pass


# ---------------------------------------------------------------------------
# canonical serialization


def canonical(g: PatternObject) -> str:
    parts = [g.name]
    if g.attribute is not None:
        parts.append(f"[{g.attribute}]")
    rels = sorted(_serialize_relation(r) for r in g.relations)
    parts.extend(rels)
    return "(" + " ".join(parts) + ")"


def _serialize_relation(r: RelationPattern) -> str:
    parts = [r.name]
    parts.extend(sorted(f"{{{m.name} {canonical(m.target)}}}" for m in r.modifiers))
    parts.append(canonical(r.target))
    return "<" + " ".join(parts) + ">"


def canonicalize(g: PatternObject) -> PatternObject:
    """Return a copy with relations/modifiers in canonical order."""
    rels = tuple(
        replace(
            r,
            target=canonicalize(r.target),
            modifiers=tuple(
                sorted(
                    (replace(m, target=canonicalize(m.target)) for m in r.modifiers),
                    key=lambda m: f"{{{m.name} {canonical(m.target)}}}",
                )
            ),
        )
        for r in g.relations
    )
    rels = tuple(sorted(rels, key=_serialize_relation))
    return replace(g, relations=rels)


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            raise PatternSyntaxError(
                f"expected {ch!r} at offset {self.pos} in {self.text!r}"
            )
        self.pos += 1

    def skip_spaces(self):
        while self.peek() == " ":
            self.pos += 1

    def read_name(self) -> str:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in "()[]{}<>":
            self.pos += 1
        name = self.text[start : self.pos].strip()
        if not name:
            raise PatternSyntaxError(f"empty name at offset {start} in {self.text!r}")
        return name


def parse_subgraph(text: str) -> PatternObject:
    """Parse the canonical text form back into a pattern."""
    reader = _Reader(text.strip())
    g = _parse_object(reader)
    reader.skip_spaces()
    if reader.pos != len(reader.text):
        raise PatternSyntaxError(f"trailing input at offset {reader.pos} in {text!r}")
    return g


def _parse_object(reader: _Reader) -> PatternObject:
    reader.skip_spaces()
    reader.expect("(")
    name = reader.read_name()
    attribute = None
    relations = []
    while True:
        reader.skip_spaces()
        ch = reader.peek()
        if ch == ")":
            reader.pos += 1
            return PatternObject(name, attribute, tuple(relations))
        if ch == "[":
            if attribute is not None:
                raise PatternSyntaxError("object with two attribute blocks")
            reader.pos += 1
            attribute = reader.read_name()
            reader.expect("]")
        elif ch == "<":
            reader.pos += 1
            rel_name = reader.read_name()
            mods = []
            while True:
                reader.skip_spaces()
                if reader.peek() == "{":
                    reader.pos += 1
                    mod_name = reader.read_name()
                    mod_target = _parse_object(reader)
                    reader.skip_spaces()
                    reader.expect("}")
                    mods.append(ModifierPattern(mod_name, mod_target))
                else:
                    break
            target = _parse_object(reader)
            reader.skip_spaces()
            reader.expect(">")
            relations.append(RelationPattern(rel_name, target, tuple(mods)))
        else:
            raise PatternSyntaxError(
                f"unexpected character {ch!r} at offset {reader.pos} in {reader.text!r}"
            )


# ---------------------------------------------------------------------------
# structure queries


def object_count(g: PatternObject) -> int:
    n = 1
    for r in g.relations:
        n += object_count(r.target)
        for m in r.modifiers:
            n += object_count(m.target)
    return n


def node_count(g: PatternObject) -> int:
    """All nodes: objects, attributes, relations, modifiers."""
    n = 1 + (1 if g.attribute is not None else 0)
    for r in g.relations:
        n += 1 + node_count(r.target)
        for m in r.modifiers:
            n += 1 + node_count(m.target)
    return n


def relation_depth(g: PatternObject) -> int:
    """Max number of relation nodes on any root-to-leaf path."""
    best = 0
    for r in g.relations:
        best = max(best, 1 + relation_depth(r.target))
        for m in r.modifiers:
            best = max(best, 1 + relation_depth(m.target))
    return best


def relation_count(g: PatternObject) -> int:
    n = len(g.relations)
    for r in g.relations:
        n += relation_count(r.target)
        for m in r.modifiers:
            n += relation_count(m.target)
    return n


def attribute_count(g: PatternObject) -> int:
    n = 1 if g.attribute is not None else 0
    for r in g.relations:
        n += attribute_count(r.target)
        for m in r.modifiers:
            n += attribute_count(m.target)
    return n


def modifier_count(g: PatternObject) -> int:
    n = 0
    for r in g.relations:
        n += len(r.modifiers) + modifier_count(r.target)
        for m in r.modifiers:
            n += modifier_count(m.target)
    return n


def has_v_shape(g: PatternObject) -> bool:
    """Some object fans out to two relations."""
    if len(g.relations) >= 2:
        return True
    return any(
        has_v_shape(r.target) or any(has_v_shape(m.target) for m in r.modifiers)
        for r in g.relations
    )


def node_names(g: PatternObject) -> set[str]:
    names = {g.name}
    if g.attribute is not None:
        names.add(g.attribute)
    for r in g.relations:
        names.add(r.name)
        names |= node_names(r.target)
        for m in r.modifiers:
            names.add(m.name)
            names |= node_names(m.target)
    return names


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class ValidityReport:
    ok: bool
    violation: str | None = None

    def __bool__(self):
        return self.ok


def validate_subgraph(candidate) -> ValidityReport:
    """Check the pattern structure rules; reports the first violated rule.

    Accepts a PatternObject, the canonical text form, or a plain dict shaped
    like {"name", "attribute"?, "relations": [{"name", "target", "modifiers"}]}
    (attribute may also be given as a list, which must then have at most one
    entry; a relation's target must be exactly one object).
    """
    if isinstance(candidate, str):
        try:
            candidate = parse_subgraph(candidate)
        except PatternSyntaxError as exc:
            return ValidityReport(False, f"unparseable pattern: {exc}")
    if isinstance(candidate, dict):
        report, candidate = _pattern_from_dict(candidate)
        if report is not None:
            return report
    if not isinstance(candidate, PatternObject):
        return ValidityReport(False, "not a pattern object")
    return _validate_pattern(candidate)


def _pattern_from_dict(raw) -> tuple[ValidityReport | None, PatternObject | None]:
    if not isinstance(raw, dict) or not raw.get("name"):
        return ValidityReport(False, "object node lacks a name"), None
    attribute = raw.get("attribute")
    if isinstance(attribute, list):
        if len(attribute) > 1:
            return (
                ValidityReport(False, "attribute rule: object with more than 1 attribute node"),
                None,
            )
        attribute = attribute[0] if attribute else None
    relations = []
    for rel in raw.get("relations", []):
        target = rel.get("target") if isinstance(rel, dict) else None
        if isinstance(target, list):
            if len(target) != 1:
                return (
                    ValidityReport(
                        False, "target rule: relation must point at exactly one object"
                    ),
                    None,
                )
            target = target[0]
        if not isinstance(target, dict):
            return (
                ValidityReport(False, "target rule: relation must point at exactly one object"),
                None,
            )
        sub_report, target_pattern = _pattern_from_dict(target)
        if sub_report is not None:
            return sub_report, None
        mods = []
        for mod in rel.get("modifiers", []):
            mod_target = mod.get("target") if isinstance(mod, dict) else None
            sub_report, mod_pattern = _pattern_from_dict(mod_target)
            if sub_report is not None:
                return sub_report, None
            mods.append(ModifierPattern(mod.get("name", ""), mod_pattern))
        relations.append(RelationPattern(rel.get("name", ""), target_pattern, tuple(mods)))
    return None, PatternObject(raw["name"], attribute, tuple(relations))


def _validate_pattern(g: PatternObject, depth_used: int = 0) -> ValidityReport:
    if not g.name:
        return ValidityReport(False, "object node lacks a name")
    if len(g.relations) > MAX_RELATIONS_PER_OBJECT:
        return ValidityReport(
            False,
            f"fan-out rule: object {g.name!r} has {len(g.relations)} relation patterns "
            f"(max {MAX_RELATIONS_PER_OBJECT})",
        )
    for r in g.relations:
        if depth_used + 1 > MAX_RELATION_DEPTH:
            return ValidityReport(
                False,
                f"depth rule: a path crosses more than {MAX_RELATION_DEPTH} relation nodes",
            )
        sub = _validate_pattern(r.target, depth_used + 1)
        if not sub.ok:
            return sub
        for m in r.modifiers:
            sub = _validate_pattern(m.target, depth_used + 1)
            if not sub.ok:
                return sub
    return ValidityReport(True)


# ---------------------------------------------------------------------------
# enumeration


def enumerate_subgraphs(
    scene: SceneGraph,
    max_objects: int = DEFAULT_MAX_OBJECTS,
    include_modifiers: bool = True,
) -> list[PatternObject]:
    """Exhaustively enumerate valid patterns contained in the scene.

    Every returned pattern has an injective witness in the scene, at most
    ``max_objects`` object nodes, and obeys the structure rules. The result
    is deduplicated and sorted by canonical serialization.
    """
    found: dict[str, PatternObject] = {}
    for root in scene.objects:
        for pattern, _ in _expand(
            scene, root, frozenset({root.id}), MAX_RELATION_DEPTH, max_objects, include_modifiers
        ):
            ordered = canonicalize(pattern)
            found.setdefault(canonical(ordered), ordered)
    return [found[k] for k in sorted(found)]


def _expand(scene, obj: ObjectNode, used, depth_left, budget, include_modifiers):
    """Yield (pattern, used_ids) pairs for patterns rooted at obj.

    ``used`` already contains obj.id; ``budget`` counts remaining object
    slots including obj itself.
    """
    if budget < 1:
        return
    attr_options = [None] + list(obj.attributes)

    # Stage relation choices: pick up to 2 distinct edges (by index), then
    # expand each edge's target and modifier subsets under the shared budget.
    edge_choices = [()]
    if depth_left > 0:
        indices = range(len(obj.relations))
        edge_choices += [(i,) for i in indices]
        edge_choices += list(itertools.combinations(indices, 2))

    for attr in attr_options:
        for edges in edge_choices:
            for rels, rel_used in _expand_edges(
                scene, obj, edges, used, depth_left, budget - 1, include_modifiers
            ):
                yield PatternObject(obj.name, attr, rels), rel_used


def _expand_edges(scene, obj, edge_indices, used, depth_left, budget, include_modifiers):
    if not edge_indices:
        yield (), used
        return
    i, rest = edge_indices[0], edge_indices[1:]
    edge = obj.relations[i]
    if edge.target in used:
        return
    target_obj = scene.object(edge.target)
    for target_pat, t_used in _expand(
        scene, target_obj, used | {edge.target}, depth_left - 1, budget, include_modifiers
    ):
        spent = object_count(target_pat)
        for mods, m_used in _expand_modifiers(
            scene, edge, t_used, budget - spent, include_modifiers
        ):
            mod_spent = sum(object_count(m.target) for m in mods)
            rel = RelationPattern(edge.name, target_pat, mods)
            for tail, tail_used in _expand_edges(
                scene, obj, rest, m_used, depth_left, budget - spent - mod_spent,
                include_modifiers,
            ):
                yield (rel,) + tail, tail_used


def _expand_modifiers(scene, edge, used, budget, include_modifiers):
    options = [((), used)]
    if not include_modifiers:
        yield from options
        return
    mod_list = list(edge.modifiers)
    for size in range(1, len(mod_list) + 1):
        if size > budget:
            break
        for combo in itertools.combinations(mod_list, size):
            ids = [t for _, t in combo]
            if len(set(ids)) != len(ids) or used.intersection(ids):
                continue
            mods = tuple(
                ModifierPattern(name, PatternObject(scene.object(t).name))
                for name, t in combo
            )
            options.append((mods, used | set(ids)))
    yield from options


# ---------------------------------------------------------------------------
# matching


def match_subgraph(g: PatternObject, scene: SceneGraph) -> list[Assignment]:
    """All injective assignments of g's object positions to scene objects."""
    results: dict[tuple, Assignment] = {}
    for obj in scene.objects:
        for assignment in _match_object(g, obj, scene, (), frozenset()):
            key = tuple(sorted(assignment.items()))
            results.setdefault(key, assignment)
    return [results[k] for k in sorted(results)]


def _match_object(pat: PatternObject, obj: ObjectNode, scene, path, used):
    if obj.id in used:
        return
    if pat.name != obj.name:
        return
    if pat.attribute is not None and pat.attribute not in obj.attributes:
        return
    base = {path: obj.id}
    yield from _match_relations(pat.relations, 0, obj, scene, path, used | {obj.id}, base)


def _match_relations(rel_pats, idx, obj, scene, path, used, acc):
    if idx == len(rel_pats):
        yield dict(acc)
        return
    rp = rel_pats[idx]
    for edge in obj.relations:
        if edge.name != rp.name:
            continue
        target_obj = scene.object(edge.target)
        t_path = path + ("r", idx, "t")
        for t_assign in _match_object(rp.target, target_obj, scene, t_path, used):
            t_used = used | set(t_assign.values())
            for m_assign, m_used in _match_modifiers(rp.modifiers, 0, edge, scene, path, idx, t_used):
                merged = dict(acc)
                merged.update(t_assign)
                merged.update(m_assign)
                yield from _match_relations(rel_pats, idx + 1, obj, scene, path, m_used, merged)


def _match_modifiers(mod_pats, j, edge, scene, path, rel_idx, used):
    if j == len(mod_pats):
        yield {}, used
        return
    mp = mod_pats[j]
    for mod_name, mod_target in edge.modifiers:
        if mod_name != mp.name:
            continue
        m_path = path + ("r", rel_idx, "m", j, "t")
        for m_assign in _match_object(mp.target, scene.object(mod_target), scene, m_path, used):
            m_used = used | set(m_assign.values())
            for rest, rest_used in _match_modifiers(mod_pats, j + 1, edge, scene, path, rel_idx, m_used):
                merged = dict(m_assign)
                merged.update(rest)
                yield merged, rest_used


def contains(g: PatternObject, scene: SceneGraph) -> bool:
    for obj in scene.objects:
        for _ in _match_object(g, obj, scene, (), frozenset()):
            return True
    return False


# ---------------------------------------------------------------------------
# positions and masking


def positions(g: PatternObject) -> list[tuple[Position, str, str]]:
    """All named node positions as (path, node kind, name), in canonical order.

    The pattern should be in canonical order (see canonicalize) so that paths
    are stable across serialization round-trips.
    """
    out: list[tuple[Position, str, str]] = []
    _collect_positions(g, (), out)
    return out


def _collect_positions(g: PatternObject, prefix, out):
    out.append((prefix + ("o",), "object", g.name))
    if g.attribute is not None:
        out.append((prefix + ("a",), "attribute", g.attribute))
    for i, r in enumerate(g.relations):
        out.append((prefix + ("r", i), "relation", r.name))
        for j, m in enumerate(r.modifiers):
            out.append((prefix + ("r", i, "m", j), "modifier", m.name))
            _collect_positions(m.target, prefix + ("r", i, "m", j, "t"), out)
        _collect_positions(r.target, prefix + ("r", i, "t"), out)


def replace_names(g: PatternObject, changes: dict[Position, str]) -> PatternObject:
    """Rebuild the pattern with names substituted at the given positions."""
    return _replace(g, (), changes)


def _replace(g: PatternObject, prefix, changes):
    name = changes.get(prefix + ("o",), g.name)
    attribute = g.attribute
    if attribute is not None:
        attribute = changes.get(prefix + ("a",), attribute)
    rels = []
    for i, r in enumerate(g.relations):
        rel_name = changes.get(prefix + ("r", i), r.name)
        mods = []
        for j, m in enumerate(r.modifiers):
            mod_name = changes.get(prefix + ("r", i, "m", j), m.name)
            mods.append(
                ModifierPattern(mod_name, _replace(m.target, prefix + ("r", i, "m", j, "t"), changes))
            )
        rels.append(
            RelationPattern(rel_name, _replace(r.target, prefix + ("r", i, "t"), changes), tuple(mods))
        )
    return PatternObject(name, attribute, tuple(rels))


_KIND_BY_TAG = {"o": "object", "a": "attribute", "r": "relation", "m": "modifier"}


def position_kind(path: Position) -> str:
    tag = path[-1] if path[-1] in _KIND_BY_TAG else path[-2]
    return _KIND_BY_TAG[tag]


def masked_key(g: PatternObject, paths: Iterable = ()) -> str:
    """Canonical serialization with the named nodes at ``paths`` wildcarded.

    The masked tree is re-canonicalized, so isomorphic maskings of related
    patterns produce identical keys.
    """
    changes = {p: WILDCARDS[position_kind(p)] for p in paths}
    return canonical(canonicalize(replace_names(g, changes)))


def masked_keys(g: PatternObject, max_masks: int = 2) -> list[tuple[str, tuple[Position, ...]]]:
    """All (key, masked paths) pairs for 1..max_masks masked node positions."""
    g = canonicalize(g)
    pos = [p for p, _, _ in positions(g)]
    out = []
    for size in range(1, max_masks + 1):
        for combo in itertools.combinations(pos, size):
            out.append((masked_key(g, combo), combo))
    return out


# ---------------------------------------------------------------------------
# simple decomposition


def is_simple(g: PatternObject) -> bool:
    return (
        object_count(g) <= 2
        and relation_count(g) <= 1
        and attribute_count(g) <= 1
        and modifier_count(g) == 0
    )


def decompose_simple(g: PatternObject) -> list[PatternObject]:
    """Maximal simple pieces covering every node of g.

    Pieces have at most two objects, one relation and one attribute, except
    that a ternary relation (relation plus modifier) stays together as one
    piece: detaching the modifier would fabricate a relation name that exists
    in no scene, so the unit is kept matchable instead.
    """
    return [piece for piece, _ in decompose_simple_with_positions(g)]


def decompose_simple_with_positions(
    g: PatternObject,
) -> list[tuple[PatternObject, frozenset]]:
    """Simple pieces paired with the set of g-positions each piece covers."""
    g = canonicalize(g)
    pieces: dict[str, tuple[PatternObject, frozenset]] = {}
    covered: set[Position] = set()

    def object_pos(prefix):
        return prefix + ("o",)

    def emit(piece, pos_set):
        piece = canonicalize(piece)
        key = canonical(piece)
        if key in pieces:
            old_piece, old_pos = pieces[key]
            pieces[key] = (old_piece, old_pos | frozenset(pos_set))
        else:
            pieces[key] = (piece, frozenset(pos_set))
        covered.update(pos_set)

    def walk(node: PatternObject, prefix):
        for i, rel in enumerate(node.relations):
            rel_prefix = prefix + ("r", i)
            src = PatternObject(node.name, node.attribute)
            pos = {object_pos(prefix), rel_prefix, object_pos(rel_prefix + ("t",))}
            if node.attribute is not None:
                pos.add(prefix + ("a",))
            target_attr_pos = rel_prefix + ("t", "a")
            if node.attribute is None and rel.target.attribute is not None:
                bare = PatternObject(rel.target.name, rel.target.attribute)
                piece = PatternObject(
                    node.name, None, (RelationPattern(rel.name, bare),)
                )
                emit(piece, pos | {target_attr_pos})
            else:
                bare = PatternObject(rel.target.name)
                piece = PatternObject(
                    node.name, node.attribute, (RelationPattern(rel.name, bare),)
                )
                emit(piece, pos)
            for j, mod in enumerate(rel.modifiers):
                mod_prefix = rel_prefix + ("m", j)
                ternary = PatternObject(
                    node.name,
                    None,
                    (
                        RelationPattern(
                            rel.name,
                            PatternObject(rel.target.name),
                            (ModifierPattern(mod.name, PatternObject(mod.target.name)),),
                        ),
                    ),
                )
                emit(
                    ternary,
                    {
                        object_pos(prefix),
                        rel_prefix,
                        object_pos(rel_prefix + ("t",)),
                        mod_prefix,
                        object_pos(mod_prefix + ("t",)),
                    },
                )
                walk(mod.target, mod_prefix + ("t",))
            walk(rel.target, rel_prefix + ("t",))

    walk(g, ())

    # Pieces for anything not yet covered: lone roots and stranded attributes.
    all_pos = positions(g)
    for path, kind, _ in all_pos:
        if path in covered:
            continue
        if kind == "object":
            node = _node_at(g, path[:-1])
            pos = {path}
            piece_attr = node.attribute
            if piece_attr is not None:
                pos.add(path[:-1] + ("a",))
            emit(PatternObject(node.name, piece_attr), pos)
        elif kind == "attribute":
            node = _node_at(g, path[:-1])
            emit(PatternObject(node.name, node.attribute), {path, path[:-1] + ("o",)})

    return [pieces[k] for k in sorted(pieces)]


def _node_at(g: PatternObject, prefix) -> PatternObject:
    node = g
    i = 0
    while i < len(prefix):
        tag = prefix[i]
        if tag == "r":
            rel = node.relations[prefix[i + 1]]
            if i + 2 < len(prefix) and prefix[i + 2] == "m":
                mod = rel.modifiers[prefix[i + 3]]
                assert prefix[i + 4] == "t"
                node = mod.target
                i += 5
            else:
                assert prefix[i + 2] == "t"
                node = rel.target
                i += 3
        else:
            raise ValueError(f"not an object path: {prefix}")
    return node
