"""Compositional split construction and auditing.

Splits are selection-only transforms over two generation pools (one built
from training-source scenes, one from evaluation-source scenes, so image
disjointness is inherited). Binary properties over a record's program,
subgraph, template and answer drive the filtering; the auditor re-derives
every constraint by exhaustively scanning the output files.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from collections import Counter
from dataclasses import dataclass, field

from .programs import anonymized_key, parse_program, program_literals
from .records import ExampleRecord
from .rng import stream
from .subgraphs import (
    has_v_shape,
    modifier_count,
    node_names,
    parse_subgraph,
    relation_depth,
)

_CATEGORY_ALIASES = {
    "quant": "quant",
    "quantifier": "quant",
    "compar": "compar",
    "comparative": "compar",
    "group": "group",
    "groupby": "group",
    "num": "num",
    "number": "num",
    "attr": "attr",
    "attribute": "attr",
    "sameattr": "sameattr",
    "logic": "logic",
    "count": "count",
}

_ANSWER_KINDS = {"num": "number", "attr": "attr", "noun": "noun"}


class PropertyError(ValueError):
    pass


@dataclass(frozen=True)
class Property:
    kind: str  # tag | compscope | structure | template | answer | lexical
    category: str = ""
    instance: str = ""

    def text(self) -> str:
        if self.kind == "structure":
            return "RM/V/C"
        if self.kind == "compscope":
            return "Has-Quant-CompScope"
        if self.kind == "template":
            return f"TPL-{self.instance}"
        if self.kind == "answer":
            return f"Ans-{self.instance}"
        if self.kind == "lexical":
            return f"Lexical-{self.instance}"
        suffix = f"-{self.instance}" if self.instance else ""
        return f"Has-{self.category}{suffix}"


def parse_property(text: str) -> Property:
    text = text.strip()
    if text.upper() == "RM/V/C":
        return Property("structure")
    if text.lower() == "has-quant-compscope":
        return Property("compscope")
    if text.startswith("TPL-"):
        return Property("template", instance=text[4:])
    if text.startswith("Ans-"):
        kind = text[4:].lower()
        if kind not in _ANSWER_KINDS:
            raise PropertyError(f"unknown answer property {text!r}")
        return Property("answer", instance=kind)
    if text.startswith("Lexical-"):
        return Property("lexical", instance=text[8:])
    if text.startswith("Has-"):
        parts = text[4:].split("-")
        category = _CATEGORY_ALIASES.get(parts[0].lower())
        if category is None:
            raise PropertyError(f"unknown property category in {text!r}")
        instance = "-".join(parts[1:]).lower()
        return Property("tag", category=category, instance=instance)
    raise PropertyError(f"cannot parse property {text!r}")


@dataclass(frozen=True)
class PropertyExpr:
    mode: str  # single | and | or
    props: tuple[Property, ...]

    def text(self) -> str:
        joiner = " & " if self.mode == "and" else " | "
        return joiner.join(p.text() for p in self.props)


def parse_property_expr(text: str) -> PropertyExpr:
    if "&" in text and "|" in text:
        raise PropertyError("mixing & and | in one property expression")
    if "&" in text:
        return PropertyExpr("and", tuple(parse_property(t) for t in text.split("&")))
    if "|" in text:
        return PropertyExpr("or", tuple(parse_property(t) for t in text.split("|")))
    return PropertyExpr("single", (parse_property(text),))


def record_tags(record: ExampleRecord) -> set[tuple[str, str]]:
    """Operator-category tags, preferring the compile-time tags stored in
    provenance and falling back to a program scan for foreign records."""
    tags = record.provenance.get("op_tags")
    if tags:
        return {(c, v) for c, v in tags}
    return _derive_tags(record)


_QUANT_OPS = {"All": "all", "Some": "some", "None": "none"}


def _derive_tags(record: ExampleRecord) -> set[tuple[str, str]]:
    out: set[tuple[str, str]] = set()
    program = parse_program(record.program)

    def walk(steps):
        for step in steps:
            if step.op in _QUANT_OPS:
                out.add(("quant", _QUANT_OPS[step.op]))
            elif step.op == "GroupByImages":
                out.add(("group", ""))
            elif step.op == "Count":
                out.add(("count", ""))
            elif step.op in ("And", "Or"):
                out.add(("logic", step.op.lower()))
            elif step.op == "UniqueAttributeValues":
                out.add(("sameattr", str(step.args[1].value)))
            elif step.op in ("Filter", "VerifyAttribute"):
                out.add(("attr", str(step.args[1].value)))
            for arg in step.args:
                if hasattr(arg, "steps"):
                    walk(arg.steps)
                elif hasattr(arg, "value") and isinstance(arg.value, int):
                    out.add(("num", str(arg.value)))

    walk(program.steps)
    return out


def has_property(record: ExampleRecord, prop: Property) -> bool:
    if prop.kind == "template":
        return record.template == prop.instance
    if prop.kind == "answer":
        kind = record.provenance.get("answer_kind")
        if kind is None:
            kind = "number" if record.answer.lstrip("-").isdigit() else "label"
        return kind == _ANSWER_KINDS[prop.instance]
    if prop.kind == "lexical":
        return prop.instance in node_names(parse_subgraph(record.subgraph))
    if prop.kind == "structure":
        g = parse_subgraph(record.subgraph)
        return modifier_count(g) > 0 or has_v_shape(g) or relation_depth(g) >= 2
    if prop.kind == "compscope":
        return ("quant_compscope", "") in record_tags(record)
    tags = record_tags(record)
    if prop.instance:
        return (prop.category, prop.instance) in tags
    return any(category == prop.category for category, _ in tags)


def has_property_expr(record: ExampleRecord, expr: PropertyExpr) -> bool:
    values = (has_property(record, p) for p in expr.props)
    return all(values) if expr.mode == "and" else any(values)


# ---------------------------------------------------------------------------
# split specs


MODES = ("iid", "zero-shot", "few-shot", "program", "lexical")


@dataclass(frozen=True)
class SplitSpec:
    mode: str
    properties: str = ""  # property expression text
    m: int = 0
    ratio: float = 0.2
    pair_count: int = 0
    min_term_count: int = 0
    seed: int = 0

    def expr(self) -> PropertyExpr | None:
        return parse_property_expr(self.properties) if self.properties else None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "properties": self.properties,
            "m": self.m,
            "ratio": self.ratio,
            "pair_count": self.pair_count,
            "min_term_count": self.min_term_count,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "SplitSpec":
        known = {f: raw[f] for f in cls.__dataclass_fields__ if f in raw}
        return cls(**known)


def parse_split_spec(text: str) -> SplitSpec:
    """Key-value format, one "key = value" per line, '#' comments."""
    values: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise PropertyError(f"bad split-spec line {line!r}")
        key, value = line.split("=", 1)
        values[key.strip().lower()] = value.strip()
    mode = values.get("mode", "iid")
    if mode not in MODES:
        raise PropertyError(f"unknown split mode {mode!r}")
    spec = SplitSpec(
        mode=mode,
        properties=values.get("properties", ""),
        m=int(values.get("m", 0)),
        ratio=float(values.get("ratio", 0.2)),
        pair_count=int(values.get("pair_count", 0)),
        min_term_count=int(values.get("min_term_count", 0)),
        seed=int(values.get("seed", 0)),
    )
    if spec.mode in ("zero-shot", "few-shot") and not spec.properties:
        raise PropertyError(f"{spec.mode} split needs a properties line")
    if spec.mode == "program" and not 0 < spec.ratio < 1:
        raise PropertyError("program split needs 0 < ratio < 1")
    if spec.mode == "lexical" and spec.pair_count < 1:
        raise PropertyError("lexical split needs pair_count >= 1")
    if spec.properties:
        parse_property_expr(spec.properties)
    return spec


def format_split_spec(spec: SplitSpec) -> str:
    lines = [f"mode = {spec.mode}"]
    if spec.properties:
        lines.append(f"properties = {spec.properties}")
    if spec.mode == "few-shot":
        lines.append(f"m = {spec.m}")
    if spec.mode == "program":
        lines.append(f"ratio = {spec.ratio}")
    if spec.mode == "lexical":
        lines.append(f"pair_count = {spec.pair_count}")
        lines.append(f"min_term_count = {spec.min_term_count}")
    lines.append(f"seed = {spec.seed}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# split construction


@dataclass
class SplitResult:
    train: list[ExampleRecord]
    dev: list[ExampleRecord]
    test: list[ExampleRecord]
    info: dict = field(default_factory=dict)

    @property
    def eval_records(self) -> list[ExampleRecord]:
        return self.dev + self.test


class SplitError(ValueError):
    pass


def build_split(train_pool, eval_pool, spec: SplitSpec) -> SplitResult:
    train_pool = sorted(train_pool, key=lambda r: r.id)
    eval_pool = sorted(eval_pool, key=lambda r: r.id)
    info: dict = {"mode": spec.mode, "spec": spec.to_dict()}
    warnings: list[str] = []

    if spec.mode == "iid":
        train, eval_records = list(train_pool), list(eval_pool)
        info["filtered"] = 0
    elif spec.mode == "zero-shot":
        expr = spec.expr()
        train = [r for r in train_pool if not has_property_expr(r, expr)]
        eval_records = [r for r in eval_pool if has_property_expr(r, expr)]
        info["filtered"] = len(train_pool) - len(train)
        if not eval_records:
            warnings.append("property never true in the evaluation pool")
    elif spec.mode == "few-shot":
        expr = spec.expr()
        holders = [r for r in train_pool if has_property_expr(r, expr)]
        others = [r for r in train_pool if not has_property_expr(r, expr)]
        rng = stream(spec.seed, "few-shot", spec.properties, spec.m)
        if spec.m >= len(holders):
            kept = holders
            if spec.m > len(holders):
                warnings.append(
                    f"m={spec.m} exceeds the {len(holders)} property examples; all retained"
                )
        else:
            kept = rng.sample(holders, spec.m)
        train = sorted(others + kept, key=lambda r: r.id)
        eval_records = [r for r in eval_pool if has_property_expr(r, expr)]
        info["filtered"] = len(holders) - len(kept)
        info["train_property_count"] = len(kept)
    elif spec.mode == "program":
        keys = sorted(
            {anonymized_key(parse_program(r.program)) for r in train_pool + eval_pool}
        )
        held_count = max(1, int(len(keys) * spec.ratio))
        rng = stream(spec.seed, "program-split", spec.ratio)
        held = set(rng.sample(keys, held_count))
        train = [
            r for r in train_pool if anonymized_key(parse_program(r.program)) not in held
        ]
        eval_records = [
            r for r in eval_pool if anonymized_key(parse_program(r.program)) in held
        ]
        info["filtered"] = len(train_pool) - len(train)
        info["held_out_programs"] = sorted(held)
        if not eval_records:
            warnings.append("no evaluation example uses a held-out program")
    elif spec.mode == "lexical":
        train, eval_records, lex_info = _lexical_split(train_pool, eval_pool, spec)
        info.update(lex_info)
    else:
        raise SplitError(f"unknown mode {spec.mode!r}")

    dev, test = assign_dev_test(eval_records)
    info["warnings"] = warnings
    info["train_size"] = len(train)
    info["dev_size"] = len(dev)
    info["test_size"] = len(test)
    return SplitResult(train=train, dev=dev, test=test, info=info)


def _record_terms(record: ExampleRecord) -> frozenset[str]:
    return frozenset(program_literals(parse_program(record.program)))


def _lexical_split(train_pool, eval_pool, spec: SplitSpec):
    train_terms = [(r, _record_terms(r)) for r in train_pool]
    eval_terms = [(r, _record_terms(r)) for r in eval_pool]

    cooccurring = Counter()
    for _, terms in train_terms + eval_terms:
        for pair in itertools.combinations(sorted(terms), 2):
            cooccurring[pair] += 1
    eligible = sorted(pair for pair, n in cooccurring.items() if n >= 1)
    if len(eligible) < spec.pair_count:
        raise SplitError(
            f"only {len(eligible)} co-occurring name pairs exist; "
            f"{spec.pair_count} requested"
        )

    rng = stream(spec.seed, "lexical-split", spec.pair_count, spec.min_term_count)
    last_failure = "no eligible pair set"
    for _ in range(200):
        held = rng.sample(eligible, spec.pair_count)
        held_sets = [frozenset(p) for p in held]
        train = [
            r
            for r, terms in train_terms
            if not any(h <= terms for h in held_sets)
        ]
        term_counts = Counter()
        for r in train:
            for term in _record_terms(r):
                term_counts[term] += 1
        short = [
            term
            for pair in held
            for term in pair
            if term_counts[term] < spec.min_term_count
        ]
        if short:
            last_failure = (
                f"held-out term {short[0]!r} appears only "
                f"{term_counts[short[0]]} times in train "
                f"(minimum {spec.min_term_count})"
            )
            continue
        eval_records = [
            r for r, terms in eval_terms if any(h <= terms for h in held_sets)
        ]
        info = {
            "filtered": len(train_pool) - len(train),
            "held_out_pairs": [sorted(p) for p in sorted(held)],
        }
        return train, eval_records, info
    raise SplitError(f"lexical split constraints unsatisfiable: {last_failure}")


def zero_shot_split(train_pool, eval_pool, spec: SplitSpec):
    """(train, eval) with every property co-occurrence removed from train."""
    result = build_split(train_pool, eval_pool, spec)
    return result.train, result.eval_records


def few_shot_split(train_pool, eval_pool, spec: SplitSpec):
    """(train, eval) with exactly min(M, available) property examples kept."""
    result = build_split(train_pool, eval_pool, spec)
    return result.train, result.eval_records


def program_split(train_pool, eval_pool, ratio: float = 0.2, seed: int = 0):
    """(train, eval, held-out anonymized programs)."""
    spec = SplitSpec(mode="program", ratio=ratio, seed=seed)
    result = build_split(train_pool, eval_pool, spec)
    return result.train, result.eval_records, result.info["held_out_programs"]


def lexical_split(
    train_pool, eval_pool, pair_count: int, min_term_count: int, seed: int = 0
):
    """(train, eval, held-out name pairs)."""
    spec = SplitSpec(
        mode="lexical", pair_count=pair_count, min_term_count=min_term_count, seed=seed
    )
    result = build_split(train_pool, eval_pool, spec)
    return result.train, result.eval_records, result.info["held_out_pairs"]


def assign_dev_test(eval_records) -> tuple[list, list]:
    """Split evaluation records into dev/test with disjoint question texts:
    whole question groups are assigned by hash parity, then rebalanced
    greedily (smallest groups move first) without breaking disjointness."""
    groups: dict[str, list[ExampleRecord]] = {}
    for record in eval_records:
        groups.setdefault(record.question, []).append(record)
    dev: list[ExampleRecord] = []
    test: list[ExampleRecord] = []
    assignment: dict[str, int] = {}
    for question in sorted(groups):
        digest = hashlib.sha256(question.encode("utf-8")).digest()
        assignment[question] = digest[0] & 1
    sizes = [0, 0]
    for question, side in assignment.items():
        sizes[side] += len(groups[question])
    movable = sorted(groups, key=lambda q: (len(groups[q]), q))
    for question in movable:
        side = assignment[question]
        other = 1 - side
        n = len(groups[question])
        if sizes[side] - n >= sizes[other] + n:
            assignment[question] = other
            sizes[side] -= n
            sizes[other] += n
    for question in sorted(groups):
        target = dev if assignment[question] == 0 else test
        target.extend(groups[question])
    dev.sort(key=lambda r: r.id)
    test.sort(key=lambda r: r.id)
    return dev, test


# ---------------------------------------------------------------------------
# auditing


@dataclass
class SplitReport:
    train_size: int
    eval_size: int
    filtered: int
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "train_size": self.train_size,
            "eval_size": self.eval_size,
            "filtered": self.filtered,
            "violations": self.violations,
            "warnings": self.warnings,
            "passed": self.passed,
        }


def verify_split(
    train, dev, test, spec: SplitSpec, info: dict | None = None
) -> SplitReport:
    """Independently re-audit a built split by exhaustive scanning."""
    info = info or {}
    violations: list[str] = []
    warnings: list[str] = []
    eval_records = list(dev) + list(test)

    train_images = {i for r in train for i in r.images}
    for r in eval_records:
        leaked = sorted(set(r.images) & train_images)
        if leaked:
            violations.append(
                f"image {leaked[0]!r} of eval record {r.id} also appears in train"
            )

    dev_questions = {r.question for r in dev}
    for r in test:
        if r.question in dev_questions:
            violations.append(
                f"question text of test record {r.id} also appears in dev"
            )

    if spec.mode == "zero-shot":
        expr = spec.expr()
        for r in train:
            if has_property_expr(r, expr):
                violations.append(f"train record {r.id} has the held-out property")
        for r in eval_records:
            if not has_property_expr(r, expr):
                violations.append(f"eval record {r.id} lacks the held-out property")
    elif spec.mode == "few-shot":
        expr = spec.expr()
        holders = [r for r in train if has_property_expr(r, expr)]
        expected = info.get("train_property_count")
        if expected is not None and len(holders) != expected:
            violations.append(
                f"train holds {len(holders)} property examples, expected {expected}"
            )
        elif expected is None and len(holders) > spec.m:
            violations.append(
                f"train holds {len(holders)} property examples, expected at most {spec.m}"
            )
        for r in eval_records:
            if not has_property_expr(r, expr):
                violations.append(f"eval record {r.id} lacks the held-out property")
    elif spec.mode == "program":
        held = set(info.get("held_out_programs", ()))
        if held:
            for r in train:
                if anonymized_key(parse_program(r.program)) in held:
                    violations.append(f"train record {r.id} uses a held-out program")
            for r in eval_records:
                if anonymized_key(parse_program(r.program)) not in held:
                    violations.append(f"eval record {r.id} uses a non-held-out program")
        train_keys = {anonymized_key(parse_program(r.program)) for r in train}
        for r in eval_records:
            if anonymized_key(parse_program(r.program)) in train_keys:
                violations.append(
                    f"anonymized program of eval record {r.id} also appears in train"
                )
    elif spec.mode == "lexical":
        held = [frozenset(p) for p in info.get("held_out_pairs", ())]
        term_counts: Counter = Counter()
        for r in train:
            terms = _record_terms(r)
            for pair in held:
                if pair <= terms:
                    violations.append(
                        f"train record {r.id} contains held-out pair {sorted(pair)}"
                    )
            for term in terms:
                term_counts[term] += 1
        for pair in held:
            for term in sorted(pair):
                if term_counts[term] < spec.min_term_count:
                    violations.append(
                        f"held-out term {term!r} appears only {term_counts[term]} "
                        f"times in train (minimum {spec.min_term_count})"
                    )
        for r in eval_records:
            terms = _record_terms(r)
            if not any(pair <= terms for pair in held):
                violations.append(f"eval record {r.id} contains no held-out pair")

    return SplitReport(
        train_size=len(train),
        eval_size=len(eval_records),
        filtered=int(info.get("filtered", 0)),
        violations=violations,
        warnings=warnings + list(info.get("warnings", ())),
    )


def write_report(path, spec: SplitSpec, info: dict, report: SplitReport) -> None:
    payload = {"spec": spec.to_dict(), "info": info, "report": report.to_dict()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def read_report(path) -> tuple[SplitSpec, dict, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return SplitSpec.from_dict(payload["spec"]), payload.get("info", {}), payload.get(
        "report", {}
    )
