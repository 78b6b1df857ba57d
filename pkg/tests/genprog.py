"""Typed random program generator for the executor equivalence suite."""

from __future__ import annotations

import random

from sgqgen.programs import (
    Literal,
    Program,
    Ref,
    Step,
    SubProgram,
    VarRef,
    validate_program,
)


def corpus_vocab(scenes):
    names, attrs, rels, mods = set(), set(), set(), set()
    for scene in scenes:
        for obj in scene.objects:
            names.add(obj.name)
            attrs.update(obj.attributes)
            for rel in obj.relations:
                rels.add(rel.name)
                mods.update(m for m, _ in rel.modifiers)
    return sorted(names), sorted(attrs), sorted(rels), sorted(mods)


class _Gen:
    def __init__(self, rng: random.Random, vocab, categories):
        self.rng = rng
        names, attrs, rels, mods = vocab
        # Unseen vocabulary is fine (operators handle empty matches), but the
        # pools must not be empty.
        self.names = names or ["thing"]
        self.attrs = attrs or ["plain"]
        self.rels = rels or ["beside"]
        self.mods = mods
        self.categories = sorted(
            {categories.category_of(a) for a in self.attrs if categories.category_of(a)}
        ) or ["color"]
        self.steps: list[Step] = []
        self.by_type: dict[str, list[str]] = {}

    def add(self, op, args, out_type):
        label = str(len(self.steps) + 1)
        self.steps.append(Step(label, op, tuple(args)))
        self.by_type.setdefault(out_type, []).append(label)
        return label

    def pick(self, type_name):
        return Ref(self.rng.choice(self.by_type[type_name]))

    def has(self, type_name):
        return bool(self.by_type.get(type_name))

    def word(self, pool):
        return Literal(self.rng.choice(pool))

    def number(self):
        return Literal(self.rng.randint(0, 4))

    def subprogram(self):
        rng = self.rng
        if rng.random() < 0.5 or not self.rels:
            steps = (Step("a", "VerifyAttribute", (VarRef("x"), self.word(self.attrs))),)
        else:
            steps = (
                Step("a", "Find", (self.word(self.names),)),
                Step("b", "WithRelation", (VarRef("x"), Ref("a"), self.word(self.rels))),
                Step("c", "Exists", (Ref("b"),)),
            )
        return SubProgram("x", steps)


def random_program(rng: random.Random, scenes, categories, max_steps: int = 7) -> Program:
    """A well-typed program of at most max_steps steps whose vocabulary is
    drawn from the scenes (so most runs exercise real data paths)."""
    vocab = corpus_vocab(scenes)
    gen = _Gen(rng, vocab, categories)
    body_steps = rng.randint(1, max_steps - 2)

    gen.add("Find", (gen.word(gen.names),), "set")
    while len(gen.steps) < body_steps:
        roll = rng.random()
        if roll < 0.25:
            gen.add("Find", (gen.word(gen.names),), "set")
        elif roll < 0.40:
            gen.add("Filter", (gen.pick("set"), gen.word(gen.attrs)), "set")
        elif roll < 0.55 and len(gen.by_type.get("set", ())) >= 2:
            op = rng.choice(["WithRelation", "WithRelationObject"])
            gen.add(op, (gen.pick("set"), gen.pick("set"), gen.word(gen.rels)), "set")
        elif roll < 0.62:
            gen.add("GroupByImages", (gen.pick("set"),), "groups")
        elif roll < 0.70 and gen.has("groups"):
            op = rng.choice(
                ["KeepIfValuesCountEq", "KeepIfValuesCountGt", "KeepIfValuesCountLt"]
            )
            gen.add(op, (gen.pick("groups"), gen.number()), "groups")
        elif roll < 0.76:
            gen.add("Unique", (gen.pick("set"),), "object")
        elif roll < 0.82 and gen.rels:
            gen.add("RelatedObjects", (gen.pick("set"), gen.word(gen.rels)), "set")
        elif roll < 0.88:
            gen.add(
                "UniqueAttributeValues",
                (gen.pick("set"), Literal(rng.choice(gen.categories))),
                "values",
            )
        elif roll < 0.94:
            op = rng.choice(["All", "Some", "None"])
            gen.add(op, (gen.pick("set"), gen.subprogram()), "bool")
        else:
            gen.add("UniqueImages", (gen.pick("set"),), "images")

    # Finish with a scalar-producing step.
    roll = rng.random()
    if gen.has("object") and roll < 0.45:
        obj = gen.pick("object")
        choice = rng.randrange(5)
        if choice == 0:
            gen.add("QueryName", (obj,), "label")
        elif choice == 1:
            gen.add(
                "QueryAttribute", (obj, Literal(rng.choice(gen.categories))), "label"
            )
        elif choice == 2:
            gen.add("VerifyAttribute", (obj, gen.word(gen.attrs)), "bool")
        elif choice == 3:
            gen.add(
                "ChooseAttr", (obj, gen.word(gen.attrs), gen.word(gen.attrs)), "label"
            )
        elif gen.rels:
            gen.add(
                "ChooseName",
                (obj, gen.word(gen.rels), gen.word(gen.names), gen.word(gen.names)),
                "label",
            )
        else:
            gen.add("QueryName", (obj,), "label")
    elif gen.has("bool") and roll < 0.55:
        gen.add("And" if rng.random() < 0.5 else "Or", (gen.pick("bool"), gen.pick("bool")), "bool")
    elif roll < 0.8:
        countable = rng.choice(
            [t for t in ("set", "groups", "values", "images") if gen.has(t)]
        )
        count = gen.add("Count", (gen.pick(countable),), "number")
        if rng.random() < 0.6 and len(gen.steps) < max_steps:
            op = rng.choice(["eq", "gt", "lt", "geq", "leq"])
            gen.add(op, (Ref(count), gen.number()), "bool")
    else:
        gen.add("Exists", (gen.pick("set"),), "bool")

    program = Program(tuple(gen.steps))
    validate_program(program)
    return program
