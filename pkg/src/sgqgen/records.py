"""Dataset rows and their JSONL serialization.

Each output file starts with a provenance header line
``{"_header": {...}}`` carrying the full pipeline configuration; readers
skip it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field


@dataclass(frozen=True)
class ExampleRecord:
    id: str
    question: str
    images: tuple[str, ...]
    answer: str  # canonical rendering
    program: str  # program text format
    template: str
    subgraph: str  # canonical pattern serialization
    provenance: dict = field(default_factory=dict)
    properties: dict | None = None  # optional evaluation cache

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "question": self.question,
            "images": list(self.images),
            "answer": self.answer,
            "program": self.program,
            "template": self.template,
            "subgraph": self.subgraph,
            "provenance": self.provenance,
        }
        if self.properties is not None:
            out["properties"] = self.properties
        return out

    @classmethod
    def from_json(cls, raw: dict) -> "ExampleRecord":
        return cls(
            id=raw["id"],
            question=raw["question"],
            images=tuple(raw["images"]),
            answer=raw["answer"],
            program=raw["program"],
            template=raw["template"],
            subgraph=raw["subgraph"],
            provenance=raw.get("provenance", {}),
            properties=raw.get("properties"),
        )


def record_id(question: str, images, answer: str, program: str) -> str:
    digest = hashlib.sha1(
        "\x1f".join([question, "|".join(images), answer, program]).encode("utf-8")
    )
    return digest.hexdigest()[:16]


def write_records(path, records, header: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps({"_header": header}, ensure_ascii=False, sort_keys=True) + "\n")
        for record in records:
            fh.write(json.dumps(record.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def read_records(path) -> tuple[dict | None, list[ExampleRecord]]:
    header = None
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            if "_header" in raw:
                header = raw["_header"]
                continue
            records.append(ExampleRecord.from_json(raw))
    return header, records
