"""The fifteen question templates: preconditions, surfaces, program skeletons.

Each template declares its requirements as data in RULES so the precondition
policy can be tuned without touching the builders. Two principles drive the
derived preconditions: answerability (every slot must be realizable from the
source pattern) and unambiguity (a distracting image must differ from the
source pattern in at least one node other than the asked one, and referent
descriptions must pick out a unique object across the whole image set).
"""

from __future__ import annotations

from dataclasses import dataclass

from .interpreter import ExecutionError, execute
from .lexicon import AttributeCategories, ExclusionLexicon
from .mining import CorpusIndex, DistractorCandidate
from .programs import Literal, Program, Ref, Step, SubProgram, VarRef, serialize
from .realize import describe, option_phrase, relation_clause, strip_pattern
from .records import ExampleRecord, record_id
from .subgraphs import (
    PatternObject,
    canonical,
    canonicalize,
    contains,
    match_subgraph,
    node_count,
    relation_depth,
)

TEMPLATE_IDS = (
    "VerifyAttr",
    "ChooseAttr",
    "QueryAttr",
    "CompareCount",
    "Count",
    "VerifyCount",
    "CountGroupBy",
    "VerifyCountGroupBy",
    "VerifyLogic",
    "VerifyQuant",
    "VerifyQuantAttr",
    "ChooseObject",
    "QueryObject",
    "VerifySameAttr",
    "ChooseRel",
)

QUANTIFIER_WORDS = ("all", "some", "no")
LOGIC_WORDS = ("and", "or")
COMPARATIVE_WORDS = ("less", "more", "same number")
COUNT_COMPARE_WORDS = ("at least", "at most", "exactly")

# Declarative requirement table (the data half of the preconditions).
#   asked: which node the question queries — distractors must differ elsewhere
#   policy: how the image set is sampled
RULES: dict[str, dict] = {
    "VerifyAttr": {
        "needs_root_attr": True,
        "asked": "root_attr",
        "distractor_differs_at_asked": True,
        "policy": "referent",
        "min_distractors": 1,
        "answer_kind": "bool",
    },
    "ChooseAttr": {
        "needs_root_attr": True,
        "asked": "root_attr",
        "needs_decoy": True,
        "policy": "referent",
        "min_distractors": 1,
        "answer_kind": "attr",
    },
    "QueryAttr": {
        "needs_root_attr": True,
        "needs_category": True,
        "asked": "root_attr",
        "policy": "referent",
        "min_distractors": 1,
        "answer_kind": "attr",
    },
    "CompareCount": {
        "needs_second_subgraph": True,
        "policy": "mix",
        "answer_kind": "bool",
    },
    "Count": {"policy": "mix", "answer_kind": "number"},
    "VerifyCount": {"policy": "mix", "answer_kind": "bool"},
    "CountGroupBy": {"policy": "mix", "answer_kind": "number"},
    "VerifyCountGroupBy": {"policy": "mix", "answer_kind": "bool"},
    "VerifyLogic": {
        "needs_second_subgraph": True,
        "policy": "mix",
        "answer_kind": "bool",
    },
    "VerifyQuant": {
        "needs_predicate": True,
        "policy": "mix",
        "answer_kind": "bool",
    },
    "VerifyQuantAttr": {
        "needs_root_attr": True,
        "needs_category": True,
        "policy": "mix",
        "answer_kind": "bool",
    },
    "ChooseObject": {
        "needs_leaf_relation": True,
        "asked": "rel_target",
        "needs_decoy": True,
        "policy": "referent",
        "min_distractors": 1,
        "answer_kind": "noun",
    },
    "QueryObject": {
        "needs_leaf_relation": True,
        "asked": "rel_target",
        "policy": "referent",
        "min_distractors": 1,
        "answer_kind": "noun",
    },
    "VerifySameAttr": {
        "needs_root_attr": True,
        "needs_category": True,
        "asked": "root_attr",
        "needs_second_subgraph": True,
        "policy": "referent",
        "answer_kind": "bool",
    },
    "ChooseRel": {
        "needs_leaf_relation": True,
        "asked": "rel_name",
        "needs_decoy": True,
        "policy": "referent",
        "min_distractors": 1,
        "answer_kind": "relation",
    },
}


@dataclass
class GenContext:
    index: CorpusIndex
    lexicon: ExclusionLexicon
    categories: AttributeCategories
    config: object
    source_image: str
    positives: list[str]
    distractors: list[DistractorCandidate]


@dataclass(frozen=True)
class PreconditionReport:
    ok: bool
    reasons: tuple[str, ...] = ()

    def __bool__(self):
        return self.ok


# ---------------------------------------------------------------------------
# program assembly


class ProgramBuilder:
    def __init__(self, prefix: str = ""):
        self.steps: list[Step] = []
        self.prefix = prefix
        self.attr_tags: list[str] = []

    def add(self, op: str, *args) -> Ref:
        label = f"{self.prefix}{len(self.steps) + 1}"
        self.steps.append(Step(label, op, tuple(args)))
        return Ref(label)

    def compile_set(self, pattern: PatternObject) -> Ref:
        """Steps computing the multi-image object set matching the pattern."""
        staged = []
        for rel in pattern.relations:
            target_ref = self.compile_set(rel.target)
            mod_refs = [(m.name, self.compile_set(m.target)) for m in rel.modifiers]
            staged.append((rel, target_ref, mod_refs))
        current = self.add("Find", Literal(pattern.name))
        if pattern.attribute is not None:
            current = self.add("Filter", current, Literal(pattern.attribute))
            self.attr_tags.append(pattern.attribute)
        for rel, target_ref, mod_refs in staged:
            args = [current, target_ref, Literal(rel.name)]
            for mod_name, mod_ref in mod_refs:
                args.extend([Literal(mod_name), mod_ref])
            current = self.add("WithRelation", *args)
        return current

    def build(self) -> Program:
        return Program(tuple(self.steps))


def _predicate_subprogram(predicate, sub_prefix: str = "s") -> tuple[SubProgram, list[str]]:
    """Quantifier body testing one predicate (an attribute value or a
    relation branch) on the bound object."""
    builder = ProgramBuilder(prefix=sub_prefix)
    if isinstance(predicate, str):  # attribute value
        builder.add("VerifyAttribute", VarRef("x"), Literal(predicate))
        builder.attr_tags.append(predicate)
    else:  # relation branch
        target_ref = builder.compile_set(predicate.target)
        args = [VarRef("x"), target_ref, Literal(predicate.name)]
        for m in predicate.modifiers:
            args.extend([Literal(m.name), builder.compile_set(m.target)])
        related = builder.add("WithRelation", *args)
        builder.add("Exists", related)
    return SubProgram("x", tuple(builder.steps)), builder.attr_tags


# ---------------------------------------------------------------------------
# distractor classification


def asked_positions(template_id: str, g: PatternObject, branch: int | None = None) -> set:
    rule = RULES[template_id].get("asked")
    if rule == "root_attr":
        return {("a",)}
    if rule == "rel_target":
        return {("r", branch, "t", "o")}
    if rule == "rel_name":
        return {("r", branch)}
    return set()


def safe_distractors(
    template_id: str, g: PatternObject, candidates, branch: int | None = None
) -> list[DistractorCandidate]:
    """Candidates that differ from g in at least one non-asked node (plus the
    attribute-verification rule: the asked attribute must differ too)."""
    asked = asked_positions(template_id, g, branch)
    must_differ_at_asked = RULES[template_id].get("distractor_differs_at_asked", False)
    out = []
    for cand in candidates:
        paths = {s.path for s in cand.substitutions}
        if not (paths - asked):
            continue
        if must_differ_at_asked and not (paths & asked):
            continue
        out.append(cand)
    return out


def flip_candidates(
    template_id: str, g: PatternObject, candidates, branch: int | None = None
) -> list[DistractorCandidate]:
    """Candidates differing only at the asked node: their images hold an
    alternate referent, which is how the same question gets another answer."""
    asked = asked_positions(template_id, g, branch)
    if not asked:
        return []
    return [c for c in candidates if {s.path for s in c.substitutions} <= asked]


def _decoy_from(candidates, position) -> str | None:
    """Replacement name substituted at the given position, preferring
    distance-1 witnesses."""
    for cand in sorted(candidates, key=DistractorCandidate.sort_key):
        for sub in cand.substitutions:
            if sub.path == position:
                return sub.replacement
    return None


# ---------------------------------------------------------------------------
# image sampling


def _eligible_images(ctx: GenContext, candidates, referents, exceptions=()) -> list[str]:
    """Distractor images eligible for a referent question: none may contain
    any referent pattern (the designated referent images excepted)."""
    out = []
    for image_id in sorted({c.image_id for c in candidates}):
        if image_id in exceptions:
            continue
        scene = ctx.index.scene(image_id)
        if any(contains(r, scene) for r in referents):
            continue
        out.append(image_id)
    return out


def _fill(rng, base: list[str], pool: list[str], target: int) -> list[str]:
    images = list(base)
    rest = [p for p in sorted(set(pool)) if p not in images]
    room = max(0, target - len(images))
    if rest and room:
        images.extend(rng.sample(rest, min(room, len(rest))))
    rng.shuffle(images)
    return images


def _mix_pool(ctx: GenContext) -> list[str]:
    pool = set(ctx.positives)
    pool.update(c.image_id for c in ctx.distractors)
    pool.discard(ctx.source_image)
    return sorted(pool)


# ---------------------------------------------------------------------------
# preconditions


def check_preconditions(
    template_id: str, g: PatternObject, ctx: GenContext
) -> PreconditionReport:
    rule = RULES[template_id]
    g = canonicalize(g)
    reasons = []

    if rule.get("needs_root_attr") and g.attribute is None:
        reasons.append("root has no attribute")
    if rule.get("needs_category") and g.attribute is not None:
        if ctx.categories.category_of(g.attribute) is None:
            reasons.append(f"attribute {g.attribute!r} has no category")
    if rule.get("needs_relation") or rule.get("needs_leaf_relation"):
        branches = eligible_branches(template_id, g)
        if not branches:
            reasons.append("no eligible relation branch")
    if rule.get("needs_predicate") and g.attribute is None and not g.relations:
        reasons.append("no predicate to quantify over")
    if rule.get("needs_second_subgraph"):
        if not [c for c in ctx.distractors if canonical(c.witness) != canonical(g)]:
            reasons.append("no second subgraph available")

    asked = rule.get("asked")
    if asked is not None:
        branches = eligible_branches(template_id, g) if asked != "root_attr" else [None]
        found = False
        for branch in branches:
            safes = safe_distractors(template_id, g, ctx.distractors, branch)
            if len(safes) >= rule.get("min_distractors", 0):
                if rule.get("needs_decoy"):
                    position = _asked_position_for(template_id, branch)
                    if _decoy_from(ctx.distractors, position) is None:
                        continue
                found = True
                break
        if not found:
            reasons.append("no qualifying distractor")

    return PreconditionReport(not reasons, tuple(reasons))


def _asked_position_for(template_id: str, branch: int | None):
    rule = RULES[template_id].get("asked")
    if rule == "root_attr":
        return ("a",)
    if rule == "rel_target":
        return ("r", branch, "t", "o")
    if rule == "rel_name":
        return ("r", branch)
    return None


def eligible_branches(template_id: str, g: PatternObject) -> list[int]:
    """Root relation branches a Choose*/Query* template may ask about."""
    rule = RULES[template_id]
    out = []
    for i, rel in enumerate(g.relations):
        if rule.get("needs_leaf_relation"):
            target = rel.target
            if target.attribute is not None or target.relations or rel.modifiers:
                continue
        out.append(i)
    return out


# ---------------------------------------------------------------------------
# instantiation


def instantiate(template_id: str, g: PatternObject, ctx: GenContext, rng):
    """Fill the template over the mined context; returns (record, skip reason)."""
    builder = _BUILDERS[template_id]
    return builder(canonicalize(g), ctx, rng)


def _finalize(
    template_id, g, ctx, question, program, images, slots, tags, pair_of=None
):
    if not images or len(images) > ctx.config.max_images:
        return None, "image inventory"
    scenes = [ctx.index.scene(i) for i in images]
    try:
        answer = execute(program, scenes, ctx.categories)
    except ExecutionError as exc:
        return None, exc.kind
    program_text = serialize(program)
    positives_in = sorted(
        i for i in images if i == ctx.source_image or i in ctx.positives
    )
    provenance = {
        "template": template_id,
        "source_image": ctx.source_image,
        "positives": positives_in,
        "subgraph_size": node_count(g),
        "subgraph_depth": relation_depth(g),
        "slots": slots,
        "op_tags": [list(t) for t in sorted(set(tags))],
        "answer_kind": RULES[template_id]["answer_kind"],
    }
    if pair_of:
        provenance["pair_of"] = pair_of
    rid = record_id(question, images, answer.render(), program_text)
    record = ExampleRecord(
        id=rid,
        question=question,
        images=tuple(images),
        answer=answer.render(),
        program=program_text,
        template=template_id,
        subgraph=canonical(g),
        provenance=provenance,
    )
    return record, None


def _attr_tags(builder: ProgramBuilder):
    return [("attr", a) for a in builder.attr_tags]


def _source_scene(ctx: GenContext):
    return ctx.index.scene(ctx.source_image)


def _pick_number(rng, observed: int, max_number: int) -> int:
    if 1 <= observed <= max_number and rng.random() < 0.5:
        return observed
    return rng.randint(1, max_number)


def _match_count(g, scene) -> int:
    return len(match_subgraph(g, scene))


def _build_verify_attr(g, ctx, rng):
    attr = g.attribute
    referent = strip_pattern(g, [("a",)])
    if _match_count(referent, _source_scene(ctx)) != 1:
        return None, "referent not unique in source"
    safes = safe_distractors("VerifyAttr", g, ctx.distractors)
    pool = _eligible_images(ctx, safes, [referent])
    if not pool:
        return None, "no safe distractor image"
    images = _fill(rng, [ctx.source_image], pool, ctx.config.max_images)
    description = describe(referent)
    builder = ProgramBuilder()
    subject = builder.compile_set(referent)
    unique = builder.add("Unique", subject)
    builder.add("VerifyAttribute", unique, Literal(attr))
    tags = [("attr", attr)] + _attr_tags(builder)
    question = f"Is the {description} {attr}?"
    slots = {"G-NoAttribute": description, "Attribute": attr}
    return _finalize("VerifyAttr", g, ctx, question, builder.build(), images, slots, tags)


def _build_choose_attr(g, ctx, rng):
    attr = g.attribute
    referent = strip_pattern(g, [("a",)])
    if _match_count(referent, _source_scene(ctx)) != 1:
        return None, "referent not unique in source"
    decoy = _decoy_from(ctx.distractors, ("a",))
    if decoy is None:
        return None, "no decoy attribute"
    safes = safe_distractors("ChooseAttr", g, ctx.distractors)
    pool = _eligible_images(ctx, safes, [referent])
    if not pool:
        return None, "no safe distractor image"
    images = _fill(rng, [ctx.source_image], pool, ctx.config.max_images)
    first, second = (attr, decoy) if rng.random() < 0.5 else (decoy, attr)
    description = describe(referent)
    builder = ProgramBuilder()
    subject = builder.compile_set(referent)
    unique = builder.add("Unique", subject)
    builder.add("ChooseAttr", unique, Literal(first), Literal(second))
    tags = [("attr", first), ("attr", second)] + _attr_tags(builder)
    question = f"Is the {description} {first} or {second}?"
    slots = {"G-NoAttribute": description, "Attribute": attr, "DecoyAttribute": decoy}
    return _finalize("ChooseAttr", g, ctx, question, builder.build(), images, slots, tags)


def _build_query_attr(g, ctx, rng):
    attr = g.attribute
    category = ctx.categories.category_of(attr)
    referent = strip_pattern(g, [("a",)])
    if _match_count(referent, _source_scene(ctx)) != 1:
        return None, "referent not unique in source"
    safes = safe_distractors("QueryAttr", g, ctx.distractors)
    pool = _eligible_images(ctx, safes, [referent])
    if not pool:
        return None, "no safe distractor image"
    images = _fill(rng, [ctx.source_image], pool, ctx.config.max_images)
    description = describe(referent)
    builder = ProgramBuilder()
    subject = builder.compile_set(referent)
    unique = builder.add("Unique", subject)
    builder.add("QueryAttribute", unique, Literal(category))
    tags = [("attr", category)] + _attr_tags(builder)
    question = f"What is the {category} of the {description}?"
    slots = {"G-NoAttribute": description, "AttributeName": category}
    return _finalize("QueryAttr", g, ctx, question, builder.build(), images, slots, tags)


_COMPARATIVE_OPS = {"less": "lt", "more": "gt", "same number": "eq"}
_COMPARATIVE_TOKENS = {"less": "less", "more": "more", "same number": "same"}


def _second_subgraphs(g, ctx):
    own = canonical(g)
    return sorted(
        (c for c in ctx.distractors if canonical(c.witness) != own),
        key=DistractorCandidate.sort_key,
    )


def _build_compare_count(g, ctx, rng):
    others = _second_subgraphs(g, ctx)
    if not others:
        return None, "no second subgraph"
    cand = rng.choice(others)
    g2 = canonicalize(cand.witness)
    word = rng.choice(COMPARATIVE_WORDS)
    builder = ProgramBuilder()
    count1 = builder.add("Count", builder.compile_set(g))
    count2 = builder.add("Count", builder.compile_set(g2))
    builder.add(_COMPARATIVE_OPS[word], count1, count2)
    d1 = describe(g, plural=True)
    d2 = describe(g2, plural=True)
    if word == "same number":
        question = f"There are the same number of {d1} as {d2}"
    else:
        question = f"There are {word} {d1} than {d2}"
    images = _fill(rng, [ctx.source_image, cand.image_id], _mix_pool(ctx), ctx.config.max_images)
    tags = [("count", ""), ("compar", _COMPARATIVE_TOKENS[word])] + _attr_tags(builder)
    slots = {"G": d1, "G2": d2, "Comparative": word}
    return _finalize("CompareCount", g, ctx, question, builder.build(), images, slots, tags)


def _build_count(g, ctx, rng):
    images = _fill(rng, [ctx.source_image], _mix_pool(ctx), ctx.config.max_images)
    builder = ProgramBuilder()
    builder.add("Count", builder.compile_set(g))
    description = describe(g, plural=True, root_clause="bare")
    question = f"How many {description}?"
    tags = [("count", "")] + _attr_tags(builder)
    return _finalize("Count", g, ctx, question, builder.build(), images, {"G": description}, tags)


_COUNT_COMPARE_OPS = {"at least": "geq", "at most": "leq", "exactly": "eq"}


def _build_verify_count(g, ctx, rng):
    images = _fill(rng, [ctx.source_image], _mix_pool(ctx), ctx.config.max_images)
    observed = sum(_match_count(g, ctx.index.scene(i)) for i in images)
    number = _pick_number(rng, observed, ctx.config.max_number)
    word = rng.choice(COUNT_COMPARE_WORDS)
    builder = ProgramBuilder()
    count = builder.add("Count", builder.compile_set(g))
    builder.add(_COUNT_COMPARE_OPS[word], count, Literal(number))
    if number == 1:
        question = f"There is {word} 1 {describe(g)}"
    else:
        question = f"There are {word} {number} {describe(g, plural=True)}"
    tags = [("count", ""), ("num", str(number))] + _attr_tags(builder)
    slots = {"G": describe(g), "CountCompare": word, "Number": number}
    return _finalize("VerifyCount", g, ctx, question, builder.build(), images, slots, tags)


def _group_keep(builder, groups_ref, word, number):
    if word == "exactly":
        return builder.add("KeepIfValuesCountEq", groups_ref, Literal(number))
    if word == "at least":
        return builder.add("KeepIfValuesCountGt", groups_ref, Literal(number - 1))
    return builder.add("KeepIfValuesCountLt", groups_ref, Literal(number + 1))


def _build_count_group_by(g, ctx, rng):
    images = _fill(rng, [ctx.source_image], _mix_pool(ctx), ctx.config.max_images)
    per_image = [_match_count(g, ctx.index.scene(i)) for i in images]
    observed = max(per_image) if per_image else 0
    number = _pick_number(rng, observed, ctx.config.max_number)
    word = rng.choice(COUNT_COMPARE_WORDS)
    builder = ProgramBuilder()
    groups = builder.add("GroupByImages", builder.compile_set(g))
    kept = _group_keep(builder, groups, word, number)
    builder.add("Count", kept)
    description = describe(g, plural=number > 1)
    question = f"How many images contain {word} {number} {description}?"
    tags = [("count", ""), ("group", ""), ("num", str(number))] + _attr_tags(builder)
    slots = {"G": description, "CountCompare": word, "Number": number}
    return _finalize("CountGroupBy", g, ctx, question, builder.build(), images, slots, tags)


_CMP_TESTS = {
    "at least": lambda n, k: n >= k,
    "at most": lambda n, k: n <= k,
    "exactly": lambda n, k: n == k,
}


def _build_verify_count_group_by(g, ctx, rng):
    images = _fill(rng, [ctx.source_image], _mix_pool(ctx), ctx.config.max_images)
    per_image = [_match_count(g, ctx.index.scene(i)) for i in images]
    inner_observed = max(per_image) if per_image else 0
    inner_number = _pick_number(rng, inner_observed, ctx.config.max_number)
    inner_word = rng.choice(COUNT_COMPARE_WORDS)
    matching = sum(
        1 for n in per_image if n > 0 and _CMP_TESTS[inner_word](n, inner_number)
    )
    outer_number = _pick_number(rng, matching, ctx.config.max_number)
    outer_word = rng.choice(COUNT_COMPARE_WORDS)
    builder = ProgramBuilder()
    groups = builder.add("GroupByImages", builder.compile_set(g))
    kept = _group_keep(builder, groups, inner_word, inner_number)
    count = builder.add("Count", kept)
    builder.add(_COUNT_COMPARE_OPS[outer_word], count, Literal(outer_number))
    description = describe(g, plural=inner_number > 1)
    noun = "image that contains" if outer_number == 1 else "images that contain"
    verb = "is" if outer_number == 1 else "are"
    question = (
        f"There {verb} {outer_word} {outer_number} {noun} "
        f"{inner_word} {inner_number} {description}"
    )
    tags = [
        ("count", ""),
        ("group", ""),
        ("num", str(inner_number)),
        ("num", str(outer_number)),
    ] + _attr_tags(builder)
    slots = {
        "G": description,
        "CountCompare": outer_word,
        "Number": outer_number,
        "InnerCountCompare": inner_word,
        "InnerNumber": inner_number,
    }
    return _finalize(
        "VerifyCountGroupBy", g, ctx, question, builder.build(), images, slots, tags
    )


def _build_verify_logic(g, ctx, rng):
    others = _second_subgraphs(g, ctx)
    if not others:
        return None, "no second subgraph"
    cand = rng.choice(others)
    g2 = canonicalize(cand.witness)
    word = rng.choice(LOGIC_WORDS)
    builder = ProgramBuilder()
    first = builder.add("Exists", builder.compile_set(g))
    second = builder.add("Exists", builder.compile_set(g2))
    builder.add("And" if word == "and" else "Or", first, second)
    d1 = describe(g, plural=True)
    d2 = describe(g2, plural=True)
    if word == "and":
        question = f"Are there both {d1} and {d2}?"
    else:
        question = f"Are there either {d1} or {d2}?"
    images = _fill(rng, [ctx.source_image, cand.image_id], _mix_pool(ctx), ctx.config.max_images)
    tags = [("logic", word)] + _attr_tags(builder)
    slots = {"G": d1, "G2": d2, "Logic": word}
    return _finalize("VerifyLogic", g, ctx, question, builder.build(), images, slots, tags)


_QUANT_OPS = {"all": "All", "some": "Some", "no": "None"}
_QUANT_TOKENS = {"all": "all", "some": "some", "no": "none"}


def _build_verify_quant(g, ctx, rng):
    options = []
    if g.attribute is not None:
        options.append(("attr", None))
    for i in range(len(g.relations)):
        options.append(("rel", i))
    if not options:
        return None, "no predicate to quantify over"
    kind, branch = rng.choice(options)
    if kind == "attr":
        predicate = g.attribute
        domain = strip_pattern(g, [("a",)])
        predicate_phrase = predicate
    else:
        rel = g.relations[branch]
        predicate = rel
        domain = strip_pattern(g, [("r", branch)])
        predicate_phrase = relation_clause(rel)
    word = rng.choice(QUANTIFIER_WORDS)
    sub, sub_attrs = _predicate_subprogram(predicate)
    builder = ProgramBuilder()
    domain_ref = builder.compile_set(domain)
    builder.add(_QUANT_OPS[word], domain_ref, sub)
    domain_description = describe(domain, plural=True)
    question = f"{word.capitalize()} {domain_description} are {predicate_phrase}"
    tags = [("quant", _QUANT_TOKENS[word])] + _attr_tags(builder)
    tags += [("attr", a) for a in sub_attrs]
    if domain.attribute is not None or domain.relations:
        tags.append(("quant_compscope", ""))
    images = _fill(rng, [ctx.source_image], _mix_pool(ctx), ctx.config.max_images)
    slots = {"Quantifier": word, "Domain": domain_description, "Predicate": predicate_phrase}
    return _finalize("VerifyQuant", g, ctx, question, builder.build(), images, slots, tags)


def _build_verify_quant_attr(g, ctx, rng):
    category = ctx.categories.category_of(g.attribute)
    domain = strip_pattern(g, [("a",)])
    eligible = []
    for image_id in [ctx.source_image] + _mix_pool(ctx):
        scene = ctx.index.scene(image_id)
        ok = True
        for assignment in match_subgraph(domain, scene):
            root_obj = scene.object(assignment[()])
            if not any(
                ctx.categories.category_of(a) == category for a in root_obj.attributes
            ):
                ok = False
                break
        if ok:
            eligible.append(image_id)
    if ctx.source_image not in eligible:
        return None, "domain objects lack the category in source"
    pool = [i for i in eligible if i != ctx.source_image]
    images = _fill(rng, [ctx.source_image], pool, ctx.config.max_images)
    builder = ProgramBuilder()
    domain_ref = builder.compile_set(domain)
    values = builder.add("UniqueAttributeValues", domain_ref, Literal(category))
    count = builder.add("Count", values)
    builder.add("eq", count, Literal(1))
    domain_description = describe(domain, plural=True)
    question = f"Do all {domain_description} have the same {category}?"
    tags = [("sameattr", category)] + _attr_tags(builder)
    slots = {"Domain": domain_description, "AttributeName": category}
    return _finalize("VerifyQuantAttr", g, ctx, question, builder.build(), images, slots, tags)


def _choose_branch(template_id, g, ctx, rng):
    """Pick an asked branch that has both a decoy and a safe distractor."""
    viable = []
    for i in eligible_branches(template_id, g):
        position = _asked_position_for(template_id, i)
        if RULES[template_id].get("needs_decoy") and _decoy_from(ctx.distractors, position) is None:
            continue
        if not safe_distractors(template_id, g, ctx.distractors, i):
            continue
        viable.append(i)
    if not viable:
        return None
    return rng.choice(viable)


def _build_choose_object(g, ctx, rng):
    branch = _choose_branch("ChooseObject", g, ctx, rng)
    if branch is None:
        return None, "no qualifying branch"
    rel = g.relations[branch]
    true_name = rel.target.name
    decoy = _decoy_from(ctx.distractors, ("r", branch, "t", "o"))
    subject = strip_pattern(g, [("r", branch)])
    if _match_count(subject, _source_scene(ctx)) != 1:
        return None, "referent not unique in source"
    safes = safe_distractors("ChooseObject", g, ctx.distractors, branch)
    pool = _eligible_images(ctx, safes, [subject])
    if not pool:
        return None, "no safe distractor image"
    images = _fill(rng, [ctx.source_image], pool, ctx.config.max_images)
    first, second = (true_name, decoy) if rng.random() < 0.5 else (decoy, true_name)
    builder = ProgramBuilder()
    subject_ref = builder.compile_set(subject)
    unique = builder.add("Unique", subject_ref)
    builder.add("ChooseName", unique, Literal(rel.name), Literal(first), Literal(second))
    subject_description = describe(subject)
    question = (
        f"The {subject_description} is {rel.name} "
        f"{option_phrase(first)} or {option_phrase(second)}?"
    )
    tags = _attr_tags(builder)
    slots = {
        "G-Subject": subject_description,
        "Rel": rel.name,
        "Obj": true_name,
        "DecoyObj": decoy,
        "branch": branch,
    }
    return _finalize("ChooseObject", g, ctx, question, builder.build(), images, slots, tags)


def _build_query_object(g, ctx, rng):
    branches = []
    source_scene = _source_scene(ctx)
    for i in eligible_branches("QueryObject", g):
        subject = strip_pattern(g, [("r", i)])
        assignments = match_subgraph(subject, source_scene)
        if len(assignments) != 1:
            continue
        root_obj = source_scene.object(assignments[0][()])
        rel_name = g.relations[i].name
        targets = {e.target for e in root_obj.relations if e.name == rel_name}
        if len(targets) != 1:
            continue
        if not safe_distractors("QueryObject", g, ctx.distractors, i):
            continue
        branches.append(i)
    if not branches:
        return None, "no qualifying branch"
    branch = rng.choice(branches)
    rel = g.relations[branch]
    subject = strip_pattern(g, [("r", branch)])
    safes = safe_distractors("QueryObject", g, ctx.distractors, branch)
    pool = _eligible_images(ctx, safes, [subject])
    if not pool:
        return None, "no safe distractor image"
    images = _fill(rng, [ctx.source_image], pool, ctx.config.max_images)
    builder = ProgramBuilder()
    subject_ref = builder.compile_set(subject)
    unique = builder.add("Unique", subject_ref)
    related = builder.add("RelatedObjects", unique, Literal(rel.name))
    target = builder.add("Unique", related)
    builder.add("QueryName", target)
    subject_description = describe(subject)
    question = f"What is the {subject_description} {rel.name}?"
    tags = _attr_tags(builder)
    slots = {"G-Subject": subject_description, "Rel": rel.name, "branch": branch}
    return _finalize("QueryObject", g, ctx, question, builder.build(), images, slots, tags)


def _build_verify_same_attr(g, ctx, rng):
    attr = g.attribute
    category = ctx.categories.category_of(attr)
    referent1 = strip_pattern(g, [("a",)])
    source_scene = _source_scene(ctx)
    if _match_count(referent1, source_scene) != 1:
        return None, "referent not unique in source"
    own = canonical(referent1)
    eligible = []
    for cand in _second_subgraphs(g, ctx):
        witness = canonicalize(cand.witness)
        if witness.attribute is None:
            continue
        if ctx.categories.category_of(witness.attribute) != category:
            continue
        referent2 = strip_pattern(witness, [("a",)])
        if canonical(referent2) == own:
            continue
        witness_scene = ctx.index.scene(cand.image_id)
        if _match_count(referent2, witness_scene) != 1:
            continue
        if contains(referent1, witness_scene) or contains(referent2, source_scene):
            continue
        eligible.append((cand, referent2))
    if not eligible:
        return None, "no comparable second referent"
    cand, referent2 = rng.choice(eligible)
    safes = safe_distractors("VerifySameAttr", g, ctx.distractors)
    base = [ctx.source_image, cand.image_id]
    pool = _eligible_images(ctx, safes, [referent1, referent2], exceptions=base)
    images = _fill(rng, base, pool, ctx.config.max_images)
    builder = ProgramBuilder()
    unique1 = builder.add("Unique", builder.compile_set(referent1))
    value1 = builder.add("QueryAttribute", unique1, Literal(category))
    unique2 = builder.add("Unique", builder.compile_set(referent2))
    value2 = builder.add("QueryAttribute", unique2, Literal(category))
    builder.add("eq", value1, value2)
    d1 = describe(referent1)
    d2 = describe(referent2)
    question = f"Does the {d1} and the {d2} have the same {category}?"
    tags = [("sameattr", category)] + _attr_tags(builder)
    slots = {"G": d1, "G2": d2, "AttributeName": category}
    return _finalize("VerifySameAttr", g, ctx, question, builder.build(), images, slots, tags)


def _build_choose_rel(g, ctx, rng):
    branch = _choose_branch("ChooseRel", g, ctx, rng)
    if branch is None:
        return None, "no qualifying branch"
    rel = g.relations[branch]
    decoy = _decoy_from(ctx.distractors, ("r", branch))
    subject = strip_pattern(g, [("r", branch)])
    if _match_count(subject, _source_scene(ctx)) != 1:
        return None, "referent not unique in source"
    safes = safe_distractors("ChooseRel", g, ctx.distractors, branch)
    pool = _eligible_images(ctx, safes, [subject])
    if not pool:
        return None, "no safe distractor image"
    images = _fill(rng, [ctx.source_image], pool, ctx.config.max_images)
    first, second = (rel.name, decoy) if rng.random() < 0.5 else (decoy, rel.name)
    builder = ProgramBuilder()
    unique = builder.add("Unique", builder.compile_set(subject))
    target_ref = builder.compile_set(rel.target)
    builder.add("ChooseRel", unique, target_ref, Literal(first), Literal(second))
    subject_description = describe(subject)
    question = (
        f"Is the {subject_description} {first} {option_phrase(rel.target.name)} "
        f"or {second} it?"
    )
    tags = _attr_tags(builder)
    slots = {
        "G-Subject": subject_description,
        "Rel": rel.name,
        "DecoyRel": decoy,
        "Obj": rel.target.name,
        "branch": branch,
    }
    return _finalize("ChooseRel", g, ctx, question, builder.build(), images, slots, tags)


_BUILDERS = {
    "VerifyAttr": _build_verify_attr,
    "ChooseAttr": _build_choose_attr,
    "QueryAttr": _build_query_attr,
    "CompareCount": _build_compare_count,
    "Count": _build_count,
    "VerifyCount": _build_verify_count,
    "CountGroupBy": _build_count_group_by,
    "VerifyCountGroupBy": _build_verify_count_group_by,
    "VerifyLogic": _build_verify_logic,
    "VerifyQuant": _build_verify_quant,
    "VerifyQuantAttr": _build_verify_quant_attr,
    "ChooseObject": _build_choose_object,
    "QueryObject": _build_query_object,
    "VerifySameAttr": _build_verify_same_attr,
    "ChooseRel": _build_choose_rel,
}


# ---------------------------------------------------------------------------
# alternate-answer pairing


def pair_alternate_answer(record: ExampleRecord, g: PatternObject, ctx: GenContext, rng):
    """Second record with identical question text, different images and a
    different answer; None when no proposal flips the answer."""
    from .programs import parse_program

    g = canonicalize(g)
    template_id = record.template
    program = parse_program(record.program)
    proposals = _alternate_image_sets(record, template_id, g, ctx, rng)
    original = set(record.images)
    for images in proposals:
        if not images or set(images) == original or len(images) > ctx.config.max_images:
            continue
        scenes = [ctx.index.scene(i) for i in images]
        try:
            answer = execute(program, scenes, ctx.categories)
        except ExecutionError:
            continue
        if answer.render() == record.answer:
            continue
        positives_in = sorted(
            i for i in images if i == ctx.source_image or i in ctx.positives
        )
        provenance = dict(record.provenance)
        provenance["positives"] = positives_in
        provenance["pair_of"] = record.id
        rid = record_id(record.question, images, answer.render(), record.program)
        return ExampleRecord(
            id=rid,
            question=record.question,
            images=tuple(images),
            answer=answer.render(),
            program=record.program,
            template=template_id,
            subgraph=record.subgraph,
            provenance=provenance,
        )
    return None


def _alternate_image_sets(record, template_id, g, ctx, rng):
    rule = RULES[template_id]
    proposals = []
    branch = record.provenance.get("slots", {}).get("branch")
    if rule.get("policy") == "referent":
        flips = flip_candidates(template_id, g, ctx.distractors, branch)
        decoy = record.provenance.get("slots", {}).get("DecoyObj") or record.provenance.get(
            "slots", {}
        ).get("DecoyAttribute") or record.provenance.get("slots", {}).get("DecoyRel")
        position = _asked_position_for(template_id, branch)

        def flip_rank(cand):
            replacement = next(
                (s.replacement for s in cand.substitutions if s.path == position), ""
            )
            return (0 if decoy is not None and replacement == decoy else 1,) + cand.sort_key()

        others = [i for i in record.images if i != ctx.source_image]
        for cand in sorted(flips, key=flip_rank):
            images = [cand.image_id] + [i for i in others if i != cand.image_id]
            rng.shuffle(images)
            proposals.append(images)
    for _ in range(8):
        proposals.append(_fill(rng, [ctx.source_image], _mix_pool(ctx), ctx.config.max_images))
    return proposals
