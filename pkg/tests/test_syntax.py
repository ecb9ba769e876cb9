from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from aspbench.errors import InvalidIdentifier, LexError, MappingCollision
from aspbench.syntax import (
    CHOICE_RULE,
    COMMENT,
    DIRECTIVE,
    FACT,
    NORMAL_RULE,
    STRONG_CONSTRAINT,
    WEAK_CONSTRAINT,
    GroundAtom,
    PredicateSignature,
    atoms_to_facts,
    drop_show_directives,
    max_weak_level,
    parse_atom,
    parse_program,
    project_atoms,
    rename_predicates,
    strip_input_facts,
)

COLORABILITY = """\
col(red). col(green). col(black). node(1..4).
edge(1,2). edge(4,2). edge(1,3).

1 { colored(X,C) : col(C) } 1 :- node(X).
:- edge(X,Y), colored(X,C), colored(Y,C).
"""


def sig(text: str) -> PredicateSignature:
    return PredicateSignature.parse(text)


class TestParseProgram:
    def test_two_facts(self):
        p = parse_program("col(red). node(1..4).")
        assert len(p.rules) == 2
        assert all(r.kind == FACT for r in p.rules)
        assert set(p.predicate_index) == {sig("col/1"), sig("node/1")}

    def test_empty_program(self):
        p = parse_program("")
        assert p.rules == []
        assert p.text() == ""

    def test_weak_constraint_level(self):
        p = parse_program(":~ colored(X,red). [1@1,X]")
        assert len(p.rules) == 1
        assert p.rules[0].kind == WEAK_CONSTRAINT
        assert p.rules[0].weak_level == 1

    def test_weak_constraint_default_level(self):
        p = parse_program(":~ a(X). [1,X]")
        assert p.rules[0].weak_level == 0

    def test_kind_classification(self):
        p = parse_program(COLORABILITY)
        kinds = [r.kind for r in p.rules]
        assert kinds == [FACT] * 7 + [CHOICE_RULE, STRONG_CONSTRAINT]

    def test_directive_comment_normal(self):
        p = parse_program("% intro\n#show colored/2.\nreach(Y) :- reach(X), edge(X,Y).")
        assert [r.kind for r in p.rules] == [COMMENT, DIRECTIVE, NORMAL_RULE]

    def test_fact_requires_ground_args(self):
        p = parse_program("p(X).")
        assert p.rules[0].kind == NORMAL_RULE

    def test_zero_arity_fact(self):
        p = parse_program("flag.")
        assert p.rules[0].kind == FACT
        assert sig("flag/0") in p.predicate_index

    def test_index_spans_point_into_rules(self):
        p = parse_program(COLORABILITY)
        for s, occs in p.predicate_index.items():
            for occ in occs:
                assert p.rules[occ.rule_index].text[occ.start:occ.end] == s.name

    def test_nested_function_terms_indexed(self):
        p = parse_program("holds(f(X)) :- base(X).")
        assert sig("f/1") in p.predicate_index
        assert sig("holds/1") in p.predicate_index

    def test_reprint_reparse_fixed_point(self):
        p1 = parse_program(COLORABILITY + "% tail comment\n:~ colored(X,red). [1@1,X]")
        p2 = parse_program(p1.text())
        assert [r.text for r in p1.rules] == [r.text for r in p2.rules]
        assert [r.kind for r in p1.rules] == [r.kind for r in p2.rules]
        assert p1.source_hash == p2.source_hash

    @pytest.mark.parametrize(
        "bad",
        ["node(1", "foo :- bar(X.", 'p("oops).', "a :- b", "%* never closed"],
    )
    def test_lex_errors(self, bad):
        with pytest.raises(LexError):
            parse_program(bad)

    def test_lex_error_carries_position(self):
        with pytest.raises(LexError) as err:
            parse_program("ok(1).\nbroken(2")
        assert err.value.line == 2


class TestRename:
    def test_matcher_example(self):
        p = parse_program(
            "colour(1). 1 {assign(N, C) : colour(C)} 1 :- node(N).\n"
            ":- edge(X, Y), assign(X, C), assign(Y, C)."
        )
        out = rename_predicates(p, {"colour": "color", "assign": "chosen"})
        assert sig("chosen/2") in out.predicate_index
        assert sig("color/1") in out.predicate_index
        assert "assign" not in out.predicate_names()

    def test_identity_mapping_is_byte_stable(self):
        p = parse_program(COLORABILITY)
        out = rename_predicates(p, {"node": "node"})
        assert out.text() == p.text()

    def test_collision_when_both_occur(self):
        p = parse_program("a(1). b(2).")
        with pytest.raises(MappingCollision):
            rename_predicates(p, {"a": "x", "b": "x"})

    def test_collision_with_existing_name(self):
        p = parse_program("chosen(1). assign(2).")
        with pytest.raises(MappingCollision):
            rename_predicates(p, {"chosen": "assign"})

    def test_no_collision_when_source_absent(self):
        p = parse_program("a(1).")
        out = rename_predicates(p, {"a": "x", "b": "x"})
        assert sig("x/1") in out.predicate_index

    def test_invalid_identifier(self):
        p = parse_program("a(1).")
        with pytest.raises(InvalidIdentifier):
            rename_predicates(p, {"a": "Not-Valid"})

    def test_rename_applies_to_show_directives(self):
        p = parse_program("assign(1,2).\n#show assign/2.")
        out = rename_predicates(p, {"assign": "chosen"})
        assert "#show chosen/2." in out.text()

    def test_rename_inverse_round_trip(self):
        p = parse_program(COLORABILITY)
        fwd = {"colored": "chosenColor", "col": "hue"}
        inv = {v: k for k, v in fwd.items()}
        assert rename_predicates(rename_predicates(p, fwd), inv).text() == p.text()

    def test_rename_all_arities_of_name(self):
        p = parse_program("p(1). p(1,2). q :- p(1).")
        out = rename_predicates(p, {"p": "r"})
        assert sig("r/1") in out.predicate_index
        assert sig("r/2") in out.predicate_index


class TestStripInputFacts:
    INPUTS = {sig("node/1"), sig("edge/2")}

    def test_strips_embedded_instance(self):
        p = parse_program("node(a). node(b). edge(a,b).\n1 {in(X)} 1 :- node(X).")
        out = strip_input_facts(p, self.INPUTS)
        assert [r.kind for r in out.rules] == [CHOICE_RULE]

    def test_no_input_facts_unchanged(self):
        p = parse_program("col(red).\n1 {in(X)} 1 :- node(X).")
        out = strip_input_facts(p, self.INPUTS)
        assert out.text() == p.text()

    def test_body_occurrences_kept(self):
        p = parse_program("reached(Y) :- edge(X,Y).")
        out = strip_input_facts(p, self.INPUTS)
        assert out.text() == p.text()

    def test_interval_fact_arity(self):
        p = parse_program("node(1..4). keep(5).")
        out = strip_input_facts(p, self.INPUTS)
        assert out.text() == "keep(5).\n"

    def test_idempotent(self):
        p = parse_program("node(1). edge(1,2). other(3).\nfoo :- node(X).")
        once = strip_input_facts(p, self.INPUTS)
        twice = strip_input_facts(once, self.INPUTS)
        assert once.text() == twice.text()


class TestWeakLevels:
    def test_max_over_levels(self):
        p = parse_program(":~ a(X). [1@2,X]\n:~ b(Y). [3@1,Y]")
        assert max_weak_level(p) == 2

    def test_no_weak_constraints(self):
        assert max_weak_level(parse_program("a. b :- a.")) == 0

    def test_preliminary_example(self):
        assert max_weak_level(parse_program(":~ colored(X,red). [1@1,X]")) == 1

    def test_minimize_directive_counts(self):
        p = parse_program("#minimize { C@3,X : cost(X,C) }.")
        assert max_weak_level(p) == 3

    def test_bound_by_every_rule(self):
        p = parse_program(":~ a. [1@4]\n:~ b. [1@2]\n:~ c. [1]")
        top = max_weak_level(p)
        for r in p.rules:
            if r.kind == WEAK_CONSTRAINT:
                assert top >= r.weak_level


class TestAtoms:
    def test_parse_atom_whitespace(self):
        a = parse_atom("colored( 1 , red )")
        assert a.canonical_text == "colored(1,red)"
        assert a.args == ("1", "red")

    def test_parse_nested(self):
        a = parse_atom("trueInGold(1, chosenColor(2, red))")
        assert a.args == ("1", "chosenColor(2,red)")

    def test_zero_arity(self):
        assert parse_atom("flag").canonical_text == "flag"

    def test_string_args_keep_spaces(self):
        a = parse_atom('label(1, "a b")')
        assert a.args == ("1", '"a b"')

    def test_equal_atoms_render_identically(self):
        assert parse_atom("p(1,2)") == parse_atom(" p( 1 ,2 ) ")

    @given(st.recursive(
        st.integers(-99, 99).map(str) | st.sampled_from(["a", "bc", "d1"]),
        lambda children: st.lists(children, min_size=1, max_size=3).map(
            lambda args: f"f({','.join(args)})"
        ),
        max_leaves=5,
    ))
    def test_canonicalization_idempotent(self, term):
        atom = f"p({term})"
        once = parse_atom(atom)
        again = parse_atom(once.canonical_text)
        assert once == again

    def test_project_atoms(self):
        atoms = {parse_atom("colored(1,red)"), parse_atom("reached(1)")}
        out = project_atoms(atoms, {sig("colored/2")})
        assert out == {parse_atom("colored(1,red)")}

    def test_project_empty(self):
        assert project_atoms(frozenset(), {sig("colored/2")}) == frozenset()

    def test_atoms_to_facts_sorted(self):
        text = atoms_to_facts({parse_atom("b"), parse_atom("a(1)")})
        assert text == "a(1).\nb.\n"


class TestDropShow:
    def test_drops_only_show(self):
        p = parse_program("#show colored/2.\n#const k=3.\na.")
        out = drop_show_directives(p)
        assert "#show" not in out.text()
        assert "#const k=3." in out.text()


def test_random_rename_round_trips():
    rng = random.Random(7)
    p = parse_program(COLORABILITY)
    names = sorted(p.predicate_names())
    for _ in range(20):
        targets = [f"pred{rng.randrange(1000)}" for _ in names]
        if len(set(targets)) != len(targets):
            continue
        fwd = dict(zip(names, targets))
        inv = {v: k for k, v in fwd.items()}
        assert rename_predicates(rename_predicates(p, fwd), inv).text() == p.text()


def test_ground_atom_ordering_is_total():
    atoms = [GroundAtom("b"), GroundAtom("a", ("2",)), GroundAtom("a", ("1",))]
    ordered = sorted(atoms)
    assert [a.canonical_text for a in ordered] == ["a(1)", "a(2)", "b"]
