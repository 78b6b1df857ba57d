"""Answer/structure balancing and corpus statistics.

Balancing downsamples to an equal share per template: questions that appear
with two different answers are kept first, then records are drawn one at a
time by picking a least-frequent answer and, within it, a least-frequent
subgraph structure signature, until each template holds floor(N/T) records.
Selection only: retained records are bit-identical to the input.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .programs import anonymized_key, parse_program
from .records import ExampleRecord
from .rng import stream


@dataclass(frozen=True)
class BalanceKey:
    template: str
    answer: str
    structure: tuple[int, int]  # (node count, depth)
    has_alternate: bool


def structure_signature(record: ExampleRecord) -> tuple[int, int]:
    prov = record.provenance
    return (int(prov.get("subgraph_size", 0)), int(prov.get("subgraph_depth", 0)))


def paired_questions(records) -> set[str]:
    """Question texts appearing at least twice with different answers."""
    answers: dict[str, set] = {}
    for record in records:
        answers.setdefault(record.question, set()).add(record.answer)
    return {q for q, ans in answers.items() if len(ans) >= 2}


def balance_key(record: ExampleRecord, pairs: set[str]) -> BalanceKey:
    return BalanceKey(
        template=record.template,
        answer=record.answer,
        structure=structure_signature(record),
        has_alternate=record.question in pairs,
    )


def balance(records, seed: int = 0) -> list[ExampleRecord]:
    records = sorted(records, key=lambda r: r.id)
    if not records:
        return []
    groups: dict[str, list[ExampleRecord]] = {}
    for record in records:
        groups.setdefault(record.template, []).append(record)
    total = len(records)
    share = total // len(groups)

    retained: list[ExampleRecord] = []
    for template in sorted(groups):
        members = groups[template]
        pairs = paired_questions(members)
        kept = [r for r in members if r.question in pairs]
        if len(kept) >= share:
            retained.extend(kept[:share])
            continue
        remaining = [r for r in members if r.question not in pairs]
        rng = stream(seed, "balance", template)
        answer_counts = Counter(r.answer for r in kept)
        structure_counts = Counter(structure_signature(r) for r in kept)
        while len(kept) < share and remaining:
            available_answers = sorted({r.answer for r in remaining})
            lowest = min(answer_counts.get(a, 0) for a in available_answers)
            least_answers = [a for a in available_answers if answer_counts.get(a, 0) == lowest]
            answer = rng.choice(least_answers)
            candidates = [r for r in remaining if r.answer == answer]
            signatures = sorted({structure_signature(r) for r in candidates})
            lowest_sig = min(structure_counts.get(s, 0) for s in signatures)
            least_sigs = {
                s for s in signatures if structure_counts.get(s, 0) == lowest_sig
            }
            pool = [r for r in candidates if structure_signature(r) in least_sigs]
            chosen = rng.choice(pool)
            kept.append(chosen)
            remaining.remove(chosen)
            answer_counts[chosen.answer] += 1
            structure_counts[structure_signature(chosen)] += 1
        retained.extend(kept)
    return sorted(retained, key=lambda r: r.id)


@dataclass(frozen=True)
class DatasetStats:
    total_questions: int
    unique_questions: int
    unique_answers: int
    unique_images: int
    unique_anonymized_programs: int
    true_false_questions: int
    choice_questions: int
    how_many_questions: int
    open_questions: int
    mean_question_words: float
    mean_images_per_question: float

    def to_dict(self) -> dict:
        return {
            "total_questions": self.total_questions,
            "unique_questions": self.unique_questions,
            "unique_answers": self.unique_answers,
            "unique_images": self.unique_images,
            "unique_anonymized_programs": self.unique_anonymized_programs,
            "true_false_questions": self.true_false_questions,
            "choice_questions": self.choice_questions,
            "how_many_questions": self.how_many_questions,
            "open_questions": self.open_questions,
            "mean_question_words": self.mean_question_words,
            "mean_images_per_question": self.mean_images_per_question,
        }


def answer_shape(record: ExampleRecord) -> str:
    if record.answer in ("true", "false"):
        return "true_false"
    if record.template.startswith("Choose"):
        return "choice"
    if record.answer.lstrip("-").isdigit():
        return "how_many"
    return "open"


def compute_stats(records) -> DatasetStats:
    records = list(records)
    if not records:
        return DatasetStats(0, 0, 0, 0, 0, 0, 0, 0, 0, 0.0, 0.0)
    shapes = Counter(answer_shape(r) for r in records)
    anon_keys = {anonymized_key(parse_program(r.program)) for r in records}
    images = {i for r in records for i in r.images}
    total = len(records)
    return DatasetStats(
        total_questions=total,
        unique_questions=len({r.question for r in records}),
        unique_answers=len({r.answer for r in records}),
        unique_images=len(images),
        unique_anonymized_programs=len(anon_keys),
        true_false_questions=shapes.get("true_false", 0),
        choice_questions=shapes.get("choice", 0),
        how_many_questions=shapes.get("how_many", 0),
        open_questions=shapes.get("open", 0),
        mean_question_words=round(
            sum(len(r.question.split()) for r in records) / total, 2
        ),
        mean_images_per_question=round(sum(len(r.images) for r in records) / total, 2),
    )
