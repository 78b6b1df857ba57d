"""Report figures rendered next to the delimited stats output."""

from __future__ import annotations

from collections import Counter
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .programs import parse_program
from .records import ExampleRecord

_TRACKED_OPS = ("Find", "Filter", "WithRelation")


def _op_counts(record: ExampleRecord) -> Counter:
    counts: Counter = Counter()

    def walk(steps):
        for step in steps:
            counts[step.op] += 1
            for arg in step.args:
                if hasattr(arg, "steps"):
                    walk(arg.steps)

    walk(parse_program(record.program).steps)
    return counts


def render_stats_figures(records: list[ExampleRecord], out_dir) -> list[str]:
    """Write the standard report figures as PNG files; returns their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    answers = Counter(
        r.answer for r in records if r.answer not in ("true", "false")
    )
    top = answers.most_common(30)
    fig, ax = plt.subplots(figsize=(10, 4))
    if top:
        labels, values = zip(*top)
        ax.bar(range(len(values)), values, color="#4878d0")
        ax.set_xticks(range(len(values)))
        ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=8)
    ax.set_ylabel("questions")
    ax.set_title("Top answers (true/false excluded)")
    fig.tight_layout()
    path = out_dir / "answer_distribution.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(str(path))

    image_counts = Counter(len(r.images) for r in records)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ks = sorted(image_counts)
    ax.bar(ks, [image_counts[k] for k in ks], color="#6acc64")
    ax.set_xlabel("images per question")
    ax.set_ylabel("questions")
    ax.set_title("Images per question")
    fig.tight_layout()
    path = out_dir / "images_per_question.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(str(path))

    templates = Counter(r.template for r in records)
    fig, ax = plt.subplots(figsize=(8, 3.5))
    names = sorted(templates)
    ax.bar(range(len(names)), [templates[n] for n in names], color="#d65f5f")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("questions")
    ax.set_title("Questions per template")
    fig.tight_layout()
    path = out_dir / "template_distribution.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(str(path))

    per_op: dict[str, Counter] = {op: Counter() for op in _TRACKED_OPS}
    for record in records:
        counts = _op_counts(record)
        for op in _TRACKED_OPS:
            per_op[op][counts.get(op, 0)] += 1
    fig, axes = plt.subplots(1, len(_TRACKED_OPS), figsize=(10, 3), sharey=True)
    for ax, op in zip(axes, _TRACKED_OPS):
        ks = sorted(per_op[op])
        ax.bar(ks, [per_op[op][k] for k in ks], color="#956cb4")
        ax.set_title(op, fontsize=9)
        ax.set_xlabel("occurrences per question", fontsize=8)
    axes[0].set_ylabel("questions")
    fig.tight_layout()
    path = out_dir / "operator_occurrences.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(str(path))

    return written
