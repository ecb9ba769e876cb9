from __future__ import annotations

import pytest

from aspbench.errors import ExhaustedMutationSpace, GoldFailsSuite
from aspbench.mutation import (
    SWAP_VARIABLES,
    TOGGLE_NEGATION,
    apply_site,
    enumerate_sites,
    generate_mutants,
    validate_suite,
)
from aspbench.suite import parse_suite
from aspbench.syntax import PredicateSignature, parse_program

GOLD = parse_program(
    "col(red). col(green). col(black).\n"
    "1 { chosenColor(X,C) : col(C) } 1 :- node(X).\n"
    ":- edge(X,Y), chosenColor(X,C), chosenColor(Y,C)."
)

SUITE = parse_suite(
    "%@test(name=k4)\n"
    "node(1..4). edge(1,2). edge(1,3). edge(1,4). edge(2,3). edge(2,4). edge(3,4).\n"
    "%@noAnswerSet\n"
    "%@test(name=triangle)\n"
    "node(1..3). edge(1,2). edge(2,3). edge(1,3).\n"
    "%@answerSetCount(count=6)\n"
    '%@constraintForAll(constraint=":- edge(X,Y), chosenColor(X,C), chosenColor(Y,C).")\n'
    '%@constraintForAll(constraint=":- node(U), not chosenColor(U,_).")\n'
    "%@test(name=single)\n"
    "node(1).\n"
    "%@answerSetCount(count=3)\n"
)

INSTANCES = [
    ("triangle", parse_program("node(1..3). edge(1,2). edge(2,3). edge(1,3).")),
]
OUTPUTS = {PredicateSignature("chosenColor", 2)}


class TestGenerateMutants:
    def test_requested_count_distinct_and_valid(self, solver):
        mutants = generate_mutants(GOLD, 15, seed=42, solver=solver)
        assert len(mutants) == 15
        hashes = {m.program.source_hash for m in mutants}
        assert len(hashes) == 15
        assert GOLD.source_hash not in hashes
        for m in mutants:
            assert solver.check_syntax(m.program).ok
            assert m.program.text() != GOLD.text()

    def test_reproducible_from_seed(self, solver):
        a = generate_mutants(GOLD, 10, seed=7, solver=solver)
        b = generate_mutants(GOLD, 10, seed=7, solver=solver)
        assert [m.program.source_hash for m in a] == [m.program.source_hash for m in b]
        assert [m.lineage for m in a] == [m.lineage for m in b]

    def test_different_seed_differs(self, solver):
        a = generate_mutants(GOLD, 10, seed=1, solver=solver)
        b = generate_mutants(GOLD, 10, seed=2, solver=solver)
        assert [m.program.source_hash for m in a] != [m.program.source_hash for m in b]

    def test_single_fact_program_deletion(self, solver):
        one = parse_program("a.")
        mutants = generate_mutants(one, 1, seed=3, solver=solver)
        assert len(mutants) == 1
        assert mutants[0].program.text() == ""

    def test_exhausted_space(self, solver):
        one = parse_program("a.")
        with pytest.raises(ExhaustedMutationSpace) as err:
            generate_mutants(one, 50, seed=3, solver=solver)
        assert err.value.possible < 50

    def test_toggle_negation_site(self):
        rule = parse_program(":- edge(X,Y), colored(X,C), colored(Y,C).")
        sites = enumerate_sites(rule)
        toggled = [s for s in sites if s.kind == TOGGLE_NEGATION]
        texts = {apply_site(rule, s).text().strip() for s in toggled}
        assert ":- edge(X,Y), colored(X,C), not colored(Y,C)." in texts

    def test_swap_variables_single_occurrence_pair(self):
        rule = parse_program(":- edge(X,Y), colored(X,C), colored(Y,C).")
        sites = [s for s in enumerate_sites(rule) if s.kind == SWAP_VARIABLES]
        swapped = {s.new_rule_text for s in sites}
        # swapping the X in edge(X,Y) with the C in colored(X,C)
        assert ":- edge(C,Y), colored(X,X), colored(Y,C)." in swapped

    def test_alpha_equivalent_rewrites_filtered(self, solver):
        from aspbench.mutation import alpha_equivalent_rule

        original = ":- edge(X,Y), colored(X,C), colored(Y,C)."
        assert alpha_equivalent_rule(original, ":- edge(Y,X), colored(Y,C), colored(X,C).")
        assert alpha_equivalent_rule(original, ":- edge(X,Y), colored(Y,C), colored(X,C).")
        assert alpha_equivalent_rule(":- c(X), c(Y), X < Y.", ":- c(X), c(Y), X > Y.")
        assert not alpha_equivalent_rule(original, ":- edge(C,Y), colored(X,X), colored(Y,C).")
        assert not alpha_equivalent_rule(original, ":- edge(X,Y), colored(X,C), not colored(Y,C).")
        mutants = generate_mutants(GOLD, 15, seed=42, solver=solver)
        for m in mutants:
            if len(m.program.rules) != len(GOLD.rules):
                continue  # rule deletion
            for original_rule, mutated_rule in zip(GOLD.rules, m.program.rules):
                if original_rule.text != mutated_rule.text:
                    assert not alpha_equivalent_rule(original_rule.text, mutated_rule.text)

    def test_directives_and_comments_untouched(self):
        p = parse_program("% note\n#show a/1.\na(1).")
        sites = enumerate_sites(p)
        assert all(p.rules[s.rule_index].kind == "fact" for s in sites)


class TestValidateSuite:
    def test_colorability_suite_kills_seeded_mutants(self, solver):
        mutants = generate_mutants(GOLD, 15, seed=42, solver=solver)
        report = validate_suite(
            GOLD, SUITE, INSTANCES, mutants, solver, outputs=OUTPUTS, with_model_f1=False
        )
        assert report.gold_accuracy == 1.0
        assert report.passed, [e.lineage for e in report.unadjudicated_survivors]

    def test_report_carries_both_metrics(self, solver):
        mutants = generate_mutants(GOLD, 3, seed=42, solver=solver)
        report = validate_suite(GOLD, SUITE, INSTANCES, mutants, solver, outputs=OUTPUTS)
        for entry in report.entries:
            assert 0.0 <= entry.suite_accuracy <= 1.0
            assert entry.model_f1 is not None

    def test_weak_suite_has_survivors(self, solver):
        weak = parse_suite("%@test(name=only_sat)\nnode(1).\n%@hasAnswerSet\n")
        mutants = generate_mutants(GOLD, 10, seed=42, solver=solver)
        report = validate_suite(
            GOLD, weak, INSTANCES, mutants, solver, outputs=OUTPUTS, with_model_f1=False
        )
        assert report.survivors
        assert not report.passed

    def test_gold_failing_suite_is_error(self, solver):
        wrong_suite = parse_suite("%@test(name=impossible)\nnode(1).\n%@noAnswerSet\n")
        mutants = generate_mutants(GOLD, 1, seed=42, solver=solver)
        with pytest.raises(GoldFailsSuite):
            validate_suite(GOLD, wrong_suite, INSTANCES, mutants, solver, with_model_f1=False)

    def test_adjudicated_survivors_pass(self, solver):
        weak = parse_suite("%@test(name=only_sat)\nnode(1).\n%@hasAnswerSet\n")
        mutants = generate_mutants(GOLD, 5, seed=42, solver=solver)
        all_hashes = {m.program.source_hash for m in mutants}
        report = validate_suite(
            GOLD, weak, INSTANCES, mutants, solver,
            with_model_f1=False, adjudicated=all_hashes,
        )
        assert report.survivors
        assert report.passed

    def test_report_serializes(self, solver):
        mutants = generate_mutants(GOLD, 2, seed=42, solver=solver)
        report = validate_suite(
            GOLD, SUITE, INSTANCES, mutants, solver, outputs=OUTPUTS, with_model_f1=False
        )
        data = report.to_dict()
        assert data["passed"] is True
        assert len(data["mutants"]) == 2
