import pytest

from sgqgen.programs import (
    Ref,
    ArityError,
    ForwardReferenceError,
    Literal,
    PLACEHOLDER,
    ProgramSyntaxError,
    TypeMismatchError,
    UnknownOperatorError,
    anonymize,
    anonymized_key,
    parse_program,
    program_literals,
    serialize,
)


def test_sample_program_roundtrip(sample_program_text):
    program = parse_program(sample_program_text)
    ops = [s.op for s in program.steps]
    assert ops == [
        "Find",
        "Filter",
        "Find",
        "WithRelation",
        "GroupByImages",
        "KeepIfValuesCountEq",
        "Count",
    ]
    assert serialize(program) == sample_program_text
    assert parse_program(serialize(program)) == program


def test_whitespace_normalization():
    program = parse_program("1=Find( dog )\n2 =  Count( @1 )")
    assert serialize(program) == "1 = Find(dog)\n2 = Count(@1)"


def test_two_step_program():
    program = parse_program("1 = Find(dog)\n2 = Count(@1)")
    assert len(program.steps) == 2
    assert program.steps[0].args == (Literal("dog"),)


def test_forward_reference_rejected():
    with pytest.raises(ForwardReferenceError) as err:
        parse_program("1 = Count(@0)")
    assert err.value.step == "1"


def test_self_reference_rejected():
    with pytest.raises(ForwardReferenceError):
        parse_program("1 = Find(dog)\n2 = Filter(@2, black)")


def test_unknown_operator():
    with pytest.raises(UnknownOperatorError) as err:
        parse_program("1 = Frobnicate(dog)")
    assert err.value.step == "1"


def test_arity_mismatch():
    with pytest.raises(ArityError) as err:
        parse_program("1 = Find(dog)\n2 = Filter(@1)")
    assert err.value.step == "2"
    with pytest.raises(ArityError):
        parse_program("1 = Find(dog)\n2 = Find(cat)\n3 = WithRelation(@1, @2)")


def test_type_mismatch():
    with pytest.raises(TypeMismatchError) as err:
        parse_program("1 = Find(dog)\n2 = Count(@1)\n3 = gt(@2, @1)")
    assert err.value.step == "3"
    with pytest.raises(TypeMismatchError):
        parse_program("1 = Find(dog)\n2 = GroupByImages(@1)\n3 = Filter(@2, black)")


def test_final_step_must_be_scalar():
    with pytest.raises(TypeMismatchError, match="final step"):
        parse_program("1 = Find(dog)")


def test_eq_polymorphic_but_consistent():
    parse_program(
        "1 = Find(dog)\n2 = Unique(@1)\n3 = QueryAttribute(@2, color)\n"
        "4 = Find(cat)\n5 = Unique(@4)\n6 = QueryAttribute(@5, color)\n7 = eq(@3, @6)"
    )
    parse_program("1 = Find(dog)\n2 = Count(@1)\n3 = eq(@2, 2)")
    with pytest.raises(TypeMismatchError, match="both"):
        parse_program(
            "1 = Find(dog)\n2 = Count(@1)\n3 = Unique(@1)\n"
            "4 = QueryName(@3)\n5 = eq(@2, @4)"
        )


def test_duplicate_label_rejected():
    with pytest.raises(ProgramSyntaxError, match="duplicate"):
        parse_program("1 = Find(dog)\n1 = Count(@1)")


def test_subprogram_parsing_and_scoping():
    text = (
        "1 = Find(dog)\n"
        "2 = All(@1, {x| a = Find(bone); b = WithRelation(x, @a, holding); c = Exists(@b)})"
    )
    program = parse_program(text)
    assert serialize(program) == text
    sub = program.steps[1].args[1]
    assert sub.var == "x"
    assert len(sub.steps) == 3
    # sub-program may reference earlier outer steps
    outer_ref = parse_program(
        "1 = Find(bone)\n2 = Find(dog)\n"
        "3 = Some(@2, {x| a = WithRelation(x, @1, holding); b = Exists(@a)})"
    )
    assert serialize(parse_program(serialize(outer_ref))) == serialize(outer_ref)


def test_subprogram_must_be_boolean():
    with pytest.raises(TypeMismatchError, match="boolean"):
        parse_program("1 = Find(dog)\n2 = All(@1, {x| a = QueryName(x)})")


def test_unbound_variable_rejected():
    # a bare word in a set slot at top level is a word literal, not a variable
    with pytest.raises(TypeMismatchError):
        parse_program("1 = Find(dog)\n2 = Filter(y, black)\n3 = Count(@2)")
    # an explicit variable reference must be bound by an enclosing sub-program
    from sgqgen.programs import Program, Step, VarRef, validate_program

    bad = Program(
        (
            Step("1", "Find", (Literal("dog"),)),
            Step("2", "Filter", (VarRef("y"), Literal("black"))),
            Step("3", "Count", (Ref("2"),)),
        )
    )
    with pytest.raises(ForwardReferenceError, match="unbound"):
        validate_program(bad)


def test_modifier_pairs_in_with_relation():
    text = (
        "1 = Find(corkscrew)\n2 = Find(bottle)\n3 = Find(man)\n"
        "4 = WithRelation(@3, @2, uncorking, with, @1)\n5 = Count(@4)"
    )
    program = parse_program(text)
    assert serialize(program) == text
    with pytest.raises(ArityError):
        parse_program(
            "1 = Find(bottle)\n2 = Find(man)\n3 = WithRelation(@2, @1, uncorking, with)\n4 = Count(@3)"
        )


def test_anonymize_sample(sample_program_text):
    program = parse_program(sample_program_text)
    key = anonymized_key(program)
    assert key == (
        f"Find({PLACEHOLDER}); Filter(@1,{PLACEHOLDER}); Find({PLACEHOLDER}); "
        f"WithRelation(@3,@2,{PLACEHOLDER}); GroupByImages(@4); "
        f"KeepIfValuesCountEq(@5,2); Count(@6)"
    )


def test_anonymize_idempotent(sample_program_text):
    program = parse_program(sample_program_text)
    once = anonymize(program)
    twice = anonymize(once)
    assert once == twice
    assert anonymized_key(program) == anonymized_key(once)


def test_anonymize_merges_lexical_variants():
    a = parse_program("1 = Find(dog)\n2 = Filter(@1, black)\n3 = Count(@2)")
    b = parse_program("1 = Find(cat)\n2 = Filter(@1, white)\n3 = Count(@2)")
    assert anonymized_key(a) == anonymized_key(b)
    c = parse_program("1 = Find(dog)\n2 = Count(@1)")
    assert anonymized_key(a) != anonymized_key(c)


def test_anonymized_key_renumbers_labels():
    a = parse_program("7 = Find(dog)\n9 = Count(@7)")
    b = parse_program("1 = Find(cat)\n2 = Count(@1)")
    assert anonymized_key(a) == anonymized_key(b)


def test_numbers_survive_anonymization():
    a = parse_program("1 = Find(dog)\n2 = Count(@1)\n3 = eq(@2, 3)")
    b = parse_program("1 = Find(dog)\n2 = Count(@1)\n3 = eq(@2, 4)")
    assert anonymized_key(a) != anonymized_key(b)


def test_program_literals(sample_program_text):
    program = parse_program(sample_program_text)
    assert program_literals(program) == {"table", "wood", "book", "on"}
    quantified = parse_program(
        "1 = Find(dog)\n2 = All(@1, {x| a = VerifyAttribute(x, black)})"
    )
    assert program_literals(quantified) == {"dog", "black"}
