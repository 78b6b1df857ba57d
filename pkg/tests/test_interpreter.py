import random

import pytest

from genprog import random_program
from oracle import oracle_execute
from synth import make_scene, random_corpus
from sgqgen.interpreter import (
    CardinalityError,
    ChoiceError,
    ExecutionError,
    MissingAttributeError,
    PresuppositionError,
    execute,
)
from sgqgen.programs import parse_program, serialize
from sgqgen.scenes import parse_scene_graphs


def run(text, scenes, categories=None):
    return execute(parse_program(text), scenes, categories).render()


def test_sample_program_over_f1(f1_scenes, sample_program_text):
    assert run(sample_program_text, f1_scenes) == "1"


def test_quantifier_over_f1(f1_scenes):
    assert run("1 = Find(dog)\n2 = All(@1, {x| a = VerifyAttribute(x, black)})", f1_scenes) == "false"
    assert run("1 = Find(dog)\n2 = Some(@1, {x| a = VerifyAttribute(x, black)})", f1_scenes) == "true"
    assert run("1 = Find(dog)\n2 = None(@1, {x| a = VerifyAttribute(x, red)})", f1_scenes) == "true"


def test_empty_find_counts_zero(f1_scenes):
    assert run("1 = Find(unicorn)\n2 = Count(@1)", f1_scenes) == "0"


def test_unique_cardinality_error(f1_scenes):
    with pytest.raises(CardinalityError):
        run("1 = Find(man)\n2 = Unique(@1)\n3 = QueryName(@2)", f1_scenes)


def test_empty_domain_presupposition_failure(f1_scenes):
    with pytest.raises(PresuppositionError):
        run(
            "1 = Find(unicorn)\n2 = All(@1, {x| a = VerifyAttribute(x, black)})",
            f1_scenes,
        )


def test_missing_attribute_error(f1_scenes):
    with pytest.raises(MissingAttributeError):
        run(
            "1 = Find(jeans)\n2 = Unique(@1)\n3 = QueryAttribute(@2, color)",
            f1_scenes,
        )


def test_query_attribute_by_category(f1_scenes):
    assert (
        run("1 = Find(table)\n2 = Unique(@1)\n3 = QueryAttribute(@2, material)", f1_scenes)
        == "wood"
    )


def test_with_relation_object_direction(f1_scenes):
    # WithRelationObject returns the tables, not the books
    text = (
        "1 = Find(table)\n2 = Find(book)\n3 = WithRelationObject(@2, @1, on)\n"
        "4 = Count(@3)"
    )
    assert run(text, f1_scenes) == "1"
    text = "1 = Find(table)\n2 = Find(book)\n3 = WithRelation(@2, @1, on)\n4 = Count(@3)"
    assert run(text, f1_scenes) == "2"


def test_with_relation_modifiers():
    scenes = [
        make_scene(
            "a",
            [
                ("m", "man", [], [("uncorking", "b", [("with", "c")])]),
                ("b", "bottle", [], []),
                ("c", "corkscrew", [], []),
            ],
        ),
        make_scene(
            "b",
            [
                ("m", "man", [], [("uncorking", "b", [("with", "k")])]),
                ("b", "bottle", [], []),
                ("k", "knife", [], []),
            ],
        ),
    ]
    text = (
        "1 = Find(corkscrew)\n2 = Find(bottle)\n3 = Find(man)\n"
        "4 = WithRelation(@3, @2, uncorking, with, @1)\n5 = Count(@4)"
    )
    assert run(text, scenes) == "1"


def test_unique_images(f1_scenes):
    text = "1 = Find(book)\n2 = UniqueImages(@1)\n3 = Count(@2)"
    assert run(text, f1_scenes) == "1"


def test_unique_attribute_values(f1_scenes):
    text = "1 = Find(dog)\n2 = UniqueAttributeValues(@1, color)\n3 = Count(@2)"
    assert run(text, f1_scenes) == "2"


def test_choose_operators(f1_scenes):
    assert (
        run("1 = Find(table)\n2 = Unique(@1)\n3 = ChooseAttr(@2, wood, metal)", f1_scenes)
        == "wood"
    )
    with pytest.raises(ChoiceError):
        run("1 = Find(table)\n2 = Unique(@1)\n3 = ChooseAttr(@2, red, metal)", f1_scenes)
    assert (
        run(
            "1 = Find(table)\n2 = Find(book)\n3 = Unique(@2)\n"
            "4 = ChooseRel(@3, @1, on, under)",
            [f1_scenes[2].__class__(f1_scenes[2].image_id, f1_scenes[2].objects[:2])],
        )
        == "on"
    )


def test_choose_name():
    scenes = [
        make_scene(
            "a",
            [
                ("w", "woman", [], [("carrying", "b")]),
                ("b", "bottle", [], []),
            ],
        )
    ]
    text = (
        "1 = Find(woman)\n2 = Unique(@1)\n3 = ChooseName(@2, carrying, bottle, purse)"
    )
    assert run(text, scenes) == "bottle"


def test_related_objects():
    scenes = [
        make_scene(
            "a",
            [
                ("w", "woman", [], [("holding", "p")]),
                ("p", "phone", ["black"], []),
            ],
        )
    ]
    text = (
        "1 = Find(woman)\n2 = Unique(@1)\n3 = RelatedObjects(@2, holding)\n"
        "4 = Unique(@3)\n5 = QueryName(@4)"
    )
    assert run(text, scenes) == "phone"


def test_boolean_and_comparison_ops(f1_scenes):
    assert run("1 = Find(dog)\n2 = Count(@1)\n3 = eq(@2, 2)", f1_scenes) == "true"
    assert run("1 = Find(dog)\n2 = Count(@1)\n3 = gt(@2, 1)", f1_scenes) == "true"
    assert run("1 = Find(dog)\n2 = Count(@1)\n3 = lt(@2, 2)", f1_scenes) == "false"
    assert run("1 = Find(dog)\n2 = Count(@1)\n3 = geq(@2, 2)", f1_scenes) == "true"
    assert run("1 = Find(dog)\n2 = Count(@1)\n3 = leq(@2, 1)", f1_scenes) == "false"
    text = (
        "1 = Find(dog)\n2 = Exists(@1)\n3 = Find(unicorn)\n4 = Exists(@3)\n"
        "5 = And(@2, @4)"
    )
    assert run(text, f1_scenes) == "false"
    assert run(text.replace("And", "Or"), f1_scenes) == "true"


def test_determinism(f1_scenes, sample_program_text):
    program = parse_program(sample_program_text)
    outputs = {execute(program, f1_scenes).render() for _ in range(10)}
    assert outputs == {"1"}
    shuffled = list(reversed(f1_scenes))
    assert execute(program, shuffled).render() == "1"


def test_count_monotonicity(f1_scenes):
    base = int(run("1 = Find(book)\n2 = Count(@1)", f1_scenes))
    filtered = int(run("1 = Find(book)\n2 = Filter(@1, old)\n3 = Count(@2)", f1_scenes))
    assert filtered <= base
    grouped_total = run(
        "1 = Find(book)\n2 = GroupByImages(@1)\n3 = Count(@2)", f1_scenes
    )
    assert int(grouped_total) <= base


def test_renaming_equivariance():
    scenes_a = [
        make_scene(
            "a",
            [("d", "dog", ["black"], [("on", "b")]), ("b", "bench", [], [])],
        )
    ]
    renamed = parse_scene_graphs(
        [
            '{"image_id":"a","objects":['
            '{"id":"d","name":"wolf","attributes":["black"],'
            '"relations":[{"name":"atop","object":"b","modifiers":[]}]},'
            '{"id":"b","name":"chair","attributes":[],"relations":[]}]}'
        ]
    )
    text = "1 = Find(bench)\n2 = Find(dog)\n3 = WithRelation(@2, @1, on)\n4 = Count(@3)"
    renamed_text = text.replace("bench", "chair").replace("dog", "wolf").replace("on)", "atop)")
    assert run(text, scenes_a) == run(renamed_text, renamed) == "1"
    label = "1 = Find(dog)\n2 = Unique(@1)\n3 = QueryName(@2)"
    assert run(label, scenes_a) == "dog"
    assert run(label.replace("dog", "wolf"), renamed) == "wolf"


def test_oracle_equivalence_random_programs(categories):
    rng = random.Random(99)
    for i in range(120):
        scenes = random_corpus(seed=500 + i, n_scenes=rng.randint(1, 4), max_objects=8)
        program = random_program(rng, scenes, categories)
        try:
            got = ("ok", execute(program, scenes, categories).render())
        except ExecutionError as exc:
            got = ("error", exc.kind)
        assert got == oracle_execute(program, scenes, categories), serialize(program)
