"""Pipeline configuration, serialized into every output's header record."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    max_images: int = 5  # images per example, source included
    max_objects: int = 4  # object-node cap for enumerated subgraphs
    max_subgraphs_per_scene: int = 0  # 0 = unlimited
    templates: tuple = ()  # empty = all templates enabled
    lexicon_path: str | None = None
    categories_path: str | None = None
    pair_alternates: bool = True
    max_number: int = 5  # number slots range 1..max_number
    threads: int = 1

    def to_dict(self) -> dict:
        out = asdict(self)
        out["templates"] = list(self.templates)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        known = {f: raw[f] for f in cls.__dataclass_fields__ if f in raw}
        if "templates" in known and known["templates"] is not None:
            known["templates"] = tuple(known["templates"])
        return cls(**known)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def override(self, **kwargs) -> "PipelineConfig":
        return replace(self, **kwargs)
