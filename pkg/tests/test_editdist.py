import random

from oracle import brute_edit_distance
from synth import random_corpus
from sgqgen.editdist import edit_distance, edit_distance_witness
from sgqgen.lexicon import ExclusionLexicon
from sgqgen.subgraphs import enumerate_subgraphs, node_count, parse_subgraph


def lex_with(*rows):
    lex = ExclusionLexicon()
    for kind, a, b, score in rows:
        lex.add(kind, a, b, score)
    return lex


def test_one_substitution():
    g1 = parse_subgraph("(man <catching (frisbee)> <wearing (jeans)>)")
    g2 = parse_subgraph("(woman <catching (frisbee)> <wearing (jeans)>)")
    assert edit_distance(g1, g2, ExclusionLexicon()) == 1


def test_identity_distance_zero():
    g = parse_subgraph("(man [tall] <wearing (jeans)>)")
    assert edit_distance(g, g, ExclusionLexicon()) == 0


def test_blocked_substitution_incomparable():
    g1 = parse_subgraph("(woman <holding (phone)>)")
    g2 = parse_subgraph("(woman <using (phone)>)")
    lex = lex_with(("relation", "holding", "using", 0.0))
    assert edit_distance(g1, g2, lex) is None
    assert edit_distance(g1, g2, ExclusionLexicon()) == 1


def test_shape_mismatch_incomparable():
    lex = ExclusionLexicon()
    assert edit_distance(parse_subgraph("(dog)"), parse_subgraph("(dog [black])"), lex) is None
    assert (
        edit_distance(
            parse_subgraph("(man <wearing (jeans)>)"), parse_subgraph("(man)"), lex
        )
        is None
    )


def test_witness_reports_positions():
    g1 = parse_subgraph("(man <wearing (jeans)>)")
    g2 = parse_subgraph("(man <wearing (shorts)>)")
    distance, subs = edit_distance_witness(g1, g2, ExclusionLexicon())
    assert distance == 1
    assert len(subs) == 1
    assert subs[0].path == ("r", 0, "t", "o")
    assert (subs[0].original, subs[0].replacement) == ("jeans", "shorts")
    assert subs[0].kind == "object"


def test_best_pairing_chosen():
    # pairing the same-named relations costs 1; the crossed pairing costs 2
    g1 = parse_subgraph("(man <holding (cup)> <wearing (hat)>)")
    g2 = parse_subgraph("(man <holding (ball)> <wearing (hat)>)")
    assert edit_distance(g1, g2, ExclusionLexicon()) == 1


def test_directional_relation_scores():
    g1 = parse_subgraph("(man <riding on (horse)>)")
    g2 = parse_subgraph("(man <near (horse)>)")
    lex = lex_with(("relation", "riding on", "near", 1.0), ("relation", "near", "riding on", 0.0))
    assert edit_distance(g1, g2, lex) == 1
    assert edit_distance(g2, g1, lex) is None


def test_symmetry_for_object_attribute_changes():
    lex = lex_with(("object", "dog", "cat", 0.9), ("attribute", "white", "black", 0.8))
    g1 = parse_subgraph("(dog [white])")
    g2 = parse_subgraph("(cat [black])")
    assert edit_distance(g1, g2, lex) == edit_distance(g2, g1, lex) == 2


def test_modifier_substitution_counts():
    g1 = parse_subgraph("(man <opening {with (corkscrew)} (bottle)>)")
    g2 = parse_subgraph("(man <opening {with (knife)} (bottle)>)")
    assert edit_distance(g1, g2, ExclusionLexicon()) == 1
    g3 = parse_subgraph("(man <opening (bottle)>)")
    assert edit_distance(g1, g3, ExclusionLexicon()) is None


def test_brute_force_agreement_on_small_pairs():
    scenes = random_corpus(seed=7, n_scenes=20, max_objects=6)
    pool = [
        g
        for scene in scenes
        for g in enumerate_subgraphs(scene, max_objects=3)
        if node_count(g) <= 5
    ]
    lex = lex_with(
        ("object", "man", "woman", 0.3),
        ("attribute", "white", "black", 1.0),
        ("relation", "on", "near", 1.0),
        ("relation", "near", "on", 0.2),
    )
    rng = random.Random(13)
    for _ in range(400):
        g1, g2 = rng.choice(pool), rng.choice(pool)
        assert edit_distance(g1, g2, lex) == brute_edit_distance(g1, g2, lex)
