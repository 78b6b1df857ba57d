"""Scene graphs: per-image objects, attributes, and (possibly ternary) relations.

Scenes are read from JSONL, one scene per line:

    {"image_id": "img1",
     "objects": [
        {"id": "o1", "name": "man", "attributes": ["tall"],
         "relations": [{"name": "wearing", "object": "o2", "modifiers": []}]},
        {"id": "o2", "name": "jeans", "attributes": [], "relations": []}]}

A relation's ``modifiers`` entry is ``{"name": "with", "object": "o3"}``,
turning the relation ternary.

All types are immutable after construction; every operation here is a pure
function, safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

# Characters reserved by the canonical pattern serialization and the program
# text format. Names containing them cannot round-trip, so they are rejected
# at parse time.
FORBIDDEN_NAME_CHARS = set("()[]{}<>@,;|?\t\n")


class SceneError(Exception):
    """Base class for scene ingestion failures."""


class SceneFormatError(SceneError):
    """Malformed scene record; carries the 1-based input line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class SceneReferenceError(SceneError):
    """A relation or modifier points at an object id missing from the scene."""

    def __init__(self, line_no: int, image_id: str, missing_id: str):
        super().__init__(
            f"line {line_no}: scene {image_id!r} references unknown object id {missing_id!r}"
        )
        self.line_no = line_no
        self.image_id = image_id
        self.missing_id = missing_id


@dataclass(frozen=True)
class RelationEdge:
    name: str
    target: str
    modifiers: tuple[tuple[str, str], ...] = ()  # (modifier name, object id)


@dataclass(frozen=True)
class ObjectNode:
    id: str
    name: str
    attributes: tuple[str, ...] = ()
    relations: tuple[RelationEdge, ...] = ()


@dataclass(frozen=True)
class SceneGraph:
    image_id: str
    objects: tuple[ObjectNode, ...]
    _by_id: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._by_id.update({o.id: o for o in self.objects})

    def object(self, object_id: str) -> ObjectNode:
        return self._by_id[object_id]

    def has_object(self, object_id: str) -> bool:
        return object_id in self._by_id


def _check_name(line_no: int, kind: str, name: str) -> str:
    if not isinstance(name, str) or not name:
        raise SceneFormatError(line_no, f"{kind} name must be a nonempty string")
    bad = FORBIDDEN_NAME_CHARS.intersection(name)
    if bad:
        raise SceneFormatError(
            line_no, f"{kind} name {name!r} contains reserved character {sorted(bad)[0]!r}"
        )
    return name


def _parse_object(line_no: int, raw) -> ObjectNode:
    if not isinstance(raw, dict):
        raise SceneFormatError(line_no, "object entry must be a JSON object")
    try:
        oid = raw["id"]
        name = raw["name"]
    except KeyError as exc:
        raise SceneFormatError(line_no, f"object entry missing field {exc.args[0]!r}") from None
    if not isinstance(oid, str) or not oid:
        raise SceneFormatError(line_no, "object id must be a nonempty string")
    _check_name(line_no, "object", name)

    attributes = raw.get("attributes", [])
    if not isinstance(attributes, list):
        raise SceneFormatError(line_no, f"attributes of {oid!r} must be a list")
    seen_attrs = set()
    for a in attributes:
        _check_name(line_no, "attribute", a)
        if a in seen_attrs:
            raise SceneFormatError(line_no, f"duplicate attribute {a!r} on object {oid!r}")
        seen_attrs.add(a)

    relations = []
    for rel in raw.get("relations", []):
        if not isinstance(rel, dict) or "name" not in rel or "object" not in rel:
            raise SceneFormatError(line_no, f"bad relation entry on object {oid!r}")
        _check_name(line_no, "relation", rel["name"])
        target = rel["object"]
        if not isinstance(target, str) or not target:
            raise SceneFormatError(line_no, f"relation target on {oid!r} must be an object id")
        mods = []
        seen_mods = set()
        for mod in rel.get("modifiers", []):
            if not isinstance(mod, dict) or "name" not in mod or "object" not in mod:
                raise SceneFormatError(line_no, f"bad modifier entry on object {oid!r}")
            _check_name(line_no, "modifier", mod["name"])
            if mod["name"] in seen_mods:
                raise SceneFormatError(
                    line_no, f"duplicate modifier {mod['name']!r} on one relation of {oid!r}"
                )
            seen_mods.add(mod["name"])
            mods.append((mod["name"], mod["object"]))
        relations.append(RelationEdge(rel["name"], target, tuple(mods)))
    return ObjectNode(oid, name, tuple(attributes), tuple(relations))


def parse_scene_graphs(lines: Iterable[str]) -> list[SceneGraph]:
    """Parse newline-delimited scene records, preserving input order.

    Raises SceneFormatError / SceneReferenceError with the offending 1-based
    line number.
    """
    scenes = []
    for line_no, line in enumerate(lines, start=1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        stripped = line.strip()
        if not stripped:
            continue
        try:
            raw = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise SceneFormatError(line_no, f"invalid JSON ({exc.msg})") from None
        if not isinstance(raw, dict):
            raise SceneFormatError(line_no, "scene record must be a JSON object")
        # Skip provenance headers emitted by pipeline stages.
        if "_header" in raw:
            continue
        image_id = raw.get("image_id")
        if not isinstance(image_id, str) or not image_id:
            raise SceneFormatError(line_no, "scene record missing image_id")
        objects = [_parse_object(line_no, o) for o in raw.get("objects", [])]

        ids = set()
        for obj in objects:
            if obj.id in ids:
                raise SceneFormatError(
                    line_no, f"duplicate object id {obj.id!r} in scene {image_id!r}"
                )
            ids.add(obj.id)
        for obj in objects:
            for rel in obj.relations:
                if rel.target not in ids:
                    raise SceneReferenceError(line_no, image_id, rel.target)
                for _, mod_target in rel.modifiers:
                    if mod_target not in ids:
                        raise SceneReferenceError(line_no, image_id, mod_target)
        scenes.append(SceneGraph(image_id, tuple(objects)))
    return scenes


def load_scene_graphs(path) -> list[SceneGraph]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scene_graphs(fh)


def scene_to_json(scene: SceneGraph) -> dict:
    return {
        "image_id": scene.image_id,
        "objects": [
            {
                "id": o.id,
                "name": o.name,
                "attributes": list(o.attributes),
                "relations": [
                    {
                        "name": r.name,
                        "object": r.target,
                        "modifiers": [{"name": m, "object": t} for m, t in r.modifiers],
                    }
                    for r in o.relations
                ],
            }
            for o in scene.objects
        ],
    }


def dump_scene_graphs(scenes: Iterable[SceneGraph], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for scene in scenes:
            fh.write(json.dumps(scene_to_json(scene), ensure_ascii=False) + "\n")
