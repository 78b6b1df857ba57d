"""End-to-end example generation: enumerate, mine, check, instantiate, pair.

Per-scene work is independent and may run on a thread pool; records are
merged, deduplicated by content id and sorted, so output bytes do not depend
on worker count.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor

from .config import PipelineConfig
from .lexicon import (
    AttributeCategories,
    ExclusionLexicon,
    default_attribute_categories,
    default_exclusion_lexicon,
)
from .mining import (
    CorpusIndex,
    ExactMatchVerifier,
    find_distractor_images,
    find_positive_images,
)
from .records import ExampleRecord
from .rng import stream
from .subgraphs import canonical
from .templates import (
    GenContext,
    TEMPLATE_IDS,
    check_preconditions,
    instantiate,
    pair_alternate_answer,
)


def resolve_resources(config: PipelineConfig):
    lexicon = (
        ExclusionLexicon.load(config.lexicon_path)
        if config.lexicon_path
        else default_exclusion_lexicon()
    )
    categories = (
        AttributeCategories.load(config.categories_path)
        if config.categories_path
        else default_attribute_categories()
    )
    return lexicon, categories


def enabled_templates(config: PipelineConfig) -> list[str]:
    if not config.templates:
        return list(TEMPLATE_IDS)
    unknown = [t for t in config.templates if t not in TEMPLATE_IDS]
    if unknown:
        raise ValueError(f"unknown templates: {', '.join(unknown)}")
    return [t for t in TEMPLATE_IDS if t in config.templates]


def generate_examples(
    index: CorpusIndex, config: PipelineConfig
) -> tuple[list[ExampleRecord], dict]:
    """Run the full pipeline over an indexed corpus."""
    lexicon, categories = resolve_resources(config)
    verifier = ExactMatchVerifier()
    templates = enabled_templates(config)

    def process_scene(image_id: str):
        tally: Counter = Counter()
        records: list[ExampleRecord] = []
        subgraphs = index.subgraphs_of(image_id)
        if config.max_subgraphs_per_scene:
            subgraphs = subgraphs[: config.max_subgraphs_per_scene]
        for g in subgraphs:
            key = canonical(g)
            positives = find_positive_images(g, index, exclude_image=image_id)
            distractors = find_distractor_images(
                g, index, lexicon, verifier, exclude_image=image_id
            )
            ctx = GenContext(
                index=index,
                lexicon=lexicon,
                categories=categories,
                config=config,
                source_image=image_id,
                positives=positives,
                distractors=distractors,
            )
            for template_id in templates:
                report = check_preconditions(template_id, g, ctx)
                if not report.ok:
                    tally[f"precondition:{template_id}"] += 1
                    continue
                rng = stream(config.seed, "instantiate", image_id, key, template_id)
                record, reason = instantiate(template_id, g, ctx, rng)
                if record is None:
                    tally[f"skip:{template_id}:{reason}"] += 1
                    continue
                records.append(record)
                if config.pair_alternates:
                    pair_rng = stream(config.seed, "pair", image_id, key, template_id)
                    paired = pair_alternate_answer(record, g, ctx, pair_rng)
                    if paired is not None:
                        records.append(paired)
                    else:
                        tally[f"unpaired:{template_id}"] += 1
        return records, tally

    image_ids = index.image_ids()
    results = []
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(process_scene, image_ids))
    else:
        results = [process_scene(i) for i in image_ids]

    merged: dict[str, ExampleRecord] = {}
    summary: Counter = Counter()
    for records, tally in results:
        summary.update(tally)
        for record in records:
            merged.setdefault(record.id, record)
    ordered = [merged[k] for k in sorted(merged)]
    summary["records"] = len(ordered)
    return ordered, dict(sorted(summary.items()))
