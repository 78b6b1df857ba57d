"""Context-image mining: positives, distractors, and the masked index.

The index replaces an external graph database: every subgraph of every scene
is keyed under all serializations with one or two node names wildcarded, so
querying a pattern's own masked keys returns a candidate superset of every
witness within edit distance 2. Candidates are then confirmed with the exact
lexicon-constrained edit distance, and an absence verifier checks that the
image does not actually contain the source pattern before it may serve as a
distractor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Protocol

from .editdist import Substitution, edit_distance_witness
from .lexicon import ExclusionLexicon
from .scenes import SceneGraph, parse_scene_graphs, scene_to_json
from .subgraphs import (
    PatternObject,
    canonical,
    canonicalize,
    contains,
    decompose_simple_with_positions,
    enumerate_subgraphs,
    masked_keys,
    parse_subgraph,
    DEFAULT_MAX_OBJECTS,
)


class AbsenceVerifier(Protocol):
    """Decides whether a simple subgraph is safely absent from an image.

    The default implementation trusts the annotated scene. Implementations
    backed by an image model can be plugged in to compensate for incomplete
    annotations; such models typically apply per-node-type score thresholds
    (objects strictest, then relations, then attributes) before declaring a
    piece absent.
    """

    def verify_absent(self, piece: PatternObject, scene: SceneGraph) -> bool: ...


class ExactMatchVerifier:
    """Absent iff exact matching finds no assignment in the ground-truth scene."""

    def verify_absent(self, piece: PatternObject, scene: SceneGraph) -> bool:
        return not contains(piece, scene)


@dataclass(frozen=True)
class DistractorCandidate:
    image_id: str
    witness: PatternObject
    distance: int
    substitutions: tuple[Substitution, ...]

    def sort_key(self):
        return (self.distance, self.image_id, canonical(self.witness))


def _encode_path(path) -> str:
    return "/".join(str(x) for x in path)


def _decode_path(text: str):
    return tuple(int(x) if x.isdigit() else x for x in text.split("/"))


class CorpusIndex:
    """Scenes plus the masked-key index over their enumerated subgraphs."""

    def __init__(self, scenes, max_objects: int = DEFAULT_MAX_OBJECTS, header: dict | None = None):
        self.scenes = list(scenes)
        self.by_image = {s.image_id: s for s in self.scenes}
        self.max_objects = max_objects
        self.header = header or {}
        self.entries: dict[str, list[tuple[str, str, tuple[str, ...]]]] = {}
        self._subgraphs_by_image: dict[str, list[PatternObject]] = {}

    def image_ids(self) -> list[str]:
        return sorted(self.by_image)

    def scene(self, image_id: str) -> SceneGraph:
        return self.by_image[image_id]

    def subgraphs_of(self, image_id: str) -> list[PatternObject]:
        if image_id not in self._subgraphs_by_image:
            self._subgraphs_by_image[image_id] = enumerate_subgraphs(
                self.scene(image_id), self.max_objects
            )
        return self._subgraphs_by_image[image_id]

    def build(self) -> "CorpusIndex":
        seen: dict[str, set] = {}
        for image_id in self.image_ids():
            for g in self.subgraphs_of(image_id):
                witness = canonical(g)
                for key, paths in masked_keys(g, 2):
                    seen.setdefault(key, set()).add(
                        (image_id, witness, tuple(_encode_path(p) for p in paths))
                    )
        self.entries = {key: sorted(values) for key, values in seen.items()}
        return self

    def candidate_witnesses(self, g: PatternObject) -> list[tuple[str, str]]:
        """(image id, witness canonical) pairs sharing a masked key with g."""
        hits = set()
        for key, _ in masked_keys(g, 2):
            for image_id, witness, _paths in self.entries.get(key, ()):
                hits.add((image_id, witness))
        return sorted(hits)

    def save(self, path) -> None:
        payload = {
            "header": self.header,
            "max_objects": self.max_objects,
            "scenes": [scene_to_json(s) for s in self.scenes],
            "entries": {
                key: [[img, wit, list(paths)] for img, wit, paths in rows]
                for key, rows in sorted(self.entries.items())
            },
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "CorpusIndex":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        scenes = parse_scene_graphs(
            json.dumps(record, ensure_ascii=False) for record in payload["scenes"]
        )
        index = cls(scenes, payload.get("max_objects", DEFAULT_MAX_OBJECTS), payload.get("header"))
        index.entries = {
            key: [(img, wit, tuple(paths)) for img, wit, paths in rows]
            for key, rows in payload.get("entries", {}).items()
        }
        return index


def build_masked_index(
    scenes, max_objects: int = DEFAULT_MAX_OBJECTS, header: dict | None = None
) -> CorpusIndex:
    return CorpusIndex(scenes, max_objects, header).build()


def find_positive_images(
    g: PatternObject, index: CorpusIndex, exclude_image: str | None = None
) -> list[str]:
    """Images whose scenes contain g, excluding the source image."""
    out = []
    for image_id in index.image_ids():
        if image_id == exclude_image:
            continue
        if contains(g, index.scene(image_id)):
            out.append(image_id)
    return out


def find_distractor_images(
    g: PatternObject,
    index: CorpusIndex,
    lex: ExclusionLexicon,
    verifier: AbsenceVerifier | None = None,
    exclude_image: str | None = None,
) -> list[DistractorCandidate]:
    """Images holding a witness at edit distance 1-2 from g but verifiably
    not holding g itself.

    An image qualifies only if the verifier confirms absence for every simple
    piece of g that is not fully shared with the witness (a piece is shared
    when no substituted position touches it).
    """
    if verifier is None:
        verifier = ExactMatchVerifier()
    g = canonicalize(g)
    pieces = decompose_simple_with_positions(g)

    best: dict[tuple[str, str], DistractorCandidate] = {}
    for image_id, witness_text in index.candidate_witnesses(g):
        if image_id == exclude_image:
            continue
        witness = parse_subgraph(witness_text)
        result = edit_distance_witness(g, witness, lex)
        if result is None:
            continue
        distance, subs = result
        if distance < 1 or distance > 2:
            continue
        key = (image_id, witness_text)
        candidate = DistractorCandidate(image_id, witness, distance, subs)
        incumbent = best.get(key)
        if incumbent is None or candidate.distance < incumbent.distance:
            best[key] = candidate

    accepted = []
    verified: dict[tuple[str, str], bool] = {}
    for candidate in sorted(best.values(), key=DistractorCandidate.sort_key):
        changed = {s.path for s in candidate.substitutions}
        scene = index.scene(candidate.image_id)
        ok = True
        for piece, covered in pieces:
            if not covered & changed:
                continue  # fully shared with the witness
            cache_key = (candidate.image_id, canonical(piece))
            if cache_key not in verified:
                verified[cache_key] = verifier.verify_absent(piece, scene)
            if not verified[cache_key]:
                ok = False
                break
        if ok:
            accepted.append(candidate)
    return accepted
