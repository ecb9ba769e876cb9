"""Mutant generation and the suite-validation loop.

Mutation sites are enumerated deterministically from the gold program's
rules, shuffled with a seeded RNG, and applied until the requested number
of distinct, syntactically valid mutants is reached. Validation then runs
the suite over every mutant: a suite is strong enough when no mutant keeps
a perfect score.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import ExhaustedMutationSpace, GoldFailsSuite
from .modeleval import evaluate_model_based
from .solver import Solver
from .suite import TestSuite, run_suite
from .syntax import (
    CHOICE_RULE,
    FACT,
    NORMAL_RULE,
    STRONG_CONSTRAINT,
    WEAK_CONSTRAINT,
    PredicateSignature,
    Program,
    parse_program,
    tokenize,
)

DELETE_RULE = "delete_rule"
DELETE_BODY_LITERAL = "delete_body_literal"
TOGGLE_NEGATION = "toggle_negation"
SWAP_COMPARISON = "swap_comparison"
PERTURB_CONSTANT = "perturb_constant"
SWAP_VARIABLES = "swap_variables"
SHIFT_BOUND = "shift_bound"

_MUTABLE_KINDS = (FACT, NORMAL_RULE, CHOICE_RULE, STRONG_CONSTRAINT, WEAK_CONSTRAINT)
_COMPARISON_SWAP = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "=": "!=", "!=": "="}


@dataclass(frozen=True)
class MutationSite:
    kind: str
    rule_index: int
    detail: str
    new_rule_text: str | None  # None = delete the rule


@dataclass
class Mutant:
    program: Program
    lineage: tuple[str, int, str]
    id: int


def _body_literal_spans(text: str) -> list[tuple[int, int]]:
    """Top-level body literal spans after `:-`, excluding the final dot/tail."""
    tokens = tokenize(text)
    try:
        sep = next(i for i, t in enumerate(tokens) if t.text in (":-", ":~"))
    except StopIteration:
        return []
    end = next(i for i, t in enumerate(tokens) if t.text == ".")
    body = tokens[sep + 1:end]
    if not body:
        return []
    spans = []
    depth = 0
    start = body[0].pos
    last_end = body[0].pos
    for tok in body:
        if tok.text in ("(", "{", "["):
            depth += 1
        elif tok.text in (")", "}", "]"):
            depth -= 1
        elif tok.text == "," and depth == 0:
            spans.append((start, last_end))
            start = None
            continue
        if start is None:
            start = tok.pos
        last_end = tok.pos + len(tok.text)
    spans.append((start, last_end))
    return spans


def _sites_for_rule(rule_index: int, text: str, kind: str, constant_pool: list[str]) -> list[MutationSite]:
    sites: list[MutationSite] = [MutationSite(DELETE_RULE, rule_index, text, None)]
    tokens = tokenize(text)

    spans = _body_literal_spans(text)
    if len(spans) >= 2:
        for i, (s, e) in enumerate(spans):
            parts = [text[a:b] for j, (a, b) in enumerate(spans) if j != i]
            head = text[: text.index(":-") + 2] if ":-" in text else text[: text.index(":~") + 2]
            tail = text[spans[-1][1]:]
            sites.append(MutationSite(
                DELETE_BODY_LITERAL, rule_index, f"dropped literal {text[s:e]!r}",
                head + " " + ", ".join(p.strip() for p in parts) + tail,
            ))
    for s, e in spans:
        lit = text[s:e].strip()
        if lit.startswith("not "):
            sites.append(MutationSite(
                TOGGLE_NEGATION, rule_index, f"removed negation on {lit[4:]!r}",
                text[:s] + lit[4:] + text[e:],
            ))
        elif lit[:1].islower():
            sites.append(MutationSite(
                TOGGLE_NEGATION, rule_index, f"negated {lit!r}",
                text[:s] + "not " + lit + text[e:],
            ))

    for tok in tokens:
        if tok.kind == "punct" and tok.text in _COMPARISON_SWAP:
            swapped = _COMPARISON_SWAP[tok.text]
            sites.append(MutationSite(
                SWAP_COMPARISON, rule_index, f"{tok.text} -> {swapped}",
                text[: tok.pos] + swapped + text[tok.pos + len(tok.text):],
            ))

    for i, tok in enumerate(tokens):
        if tok.kind != "num":
            continue
        is_bound = (
            (i + 1 < len(tokens) and tokens[i + 1].text == "{")
            or (i > 0 and tokens[i - 1].text == "}")
        )
        for delta in (+1, -1):
            value = int(tok.text) + delta
            if is_bound and value < 0:
                continue
            site_kind = SHIFT_BOUND if is_bound else PERTURB_CONSTANT
            sites.append(MutationSite(
                site_kind, rule_index, f"{tok.text} -> {value}",
                text[: tok.pos] + str(value) + text[tok.pos + len(tok.text):],
            ))

    for i, tok in enumerate(tokens):
        if tok.kind == "ident" and tok.text in constant_pool:
            nxt = tokens[i + 1] if i + 1 < len(tokens) else None
            if nxt is not None and nxt.text == "(":
                continue  # application, not a constant
            for other in constant_pool:
                if other != tok.text:
                    sites.append(MutationSite(
                        PERTURB_CONSTANT, rule_index, f"{tok.text} -> {other}",
                        text[: tok.pos] + other + text[tok.pos + len(tok.text):],
                    ))

    # exchange one occurrence of a variable with one occurrence of another;
    # swapping every occurrence would only alpha-rename the rule
    var_tokens = [t for t in tokens if t.kind == "var" and t.text != "_"]
    for a in range(len(var_tokens)):
        for b in range(a + 1, len(var_tokens)):
            ta, tb = var_tokens[a], var_tokens[b]
            if ta.text == tb.text:
                continue
            swapped = (
                text[: ta.pos] + tb.text
                + text[ta.pos + len(ta.text): tb.pos] + ta.text
                + text[tb.pos + len(tb.text):]
            )
            sites.append(MutationSite(
                SWAP_VARIABLES, rule_index,
                f"{ta.text}@{ta.pos} <-> {tb.text}@{tb.pos}", swapped,
            ))
    return sites


def _rule_pieces(text: str) -> tuple[str, list[str], list[str]]:
    """(head, body literal texts, variable names in occurrence order)."""
    tokens = tokenize(text)
    sep = next((i for i, t in enumerate(tokens) if t.text in (":-", ":~")), None)
    head = text[: tokens[sep].pos].strip() if sep is not None else text
    literals = [text[s:e].strip() for s, e in _body_literal_spans(text)]
    variables = []
    for t in tokens:
        if t.kind == "var" and t.text != "_" and t.text not in variables:
            variables.append(t.text)
    return head, literals, variables


def _normalize_literal(lit: str) -> str:
    """Canonicalize comparison direction and drop whitespace."""
    toks = tokenize(lit + " ")
    for op, flipped in ((">", "<"), (">=", "<=")):
        idx = [i for i, t in enumerate(toks) if t.kind == "punct" and t.text == op]
        if len(idx) == 1 and 0 < idx[0] < len(toks) - 1:
            i = idx[0]
            left = lit[: toks[i].pos].strip()
            right = lit[toks[i].pos + len(op):].strip()
            lit = f"{right} {flipped} {left}"
            break
    return "".join(lit.split())


def _rename_vars(text: str, mapping: dict[str, str]) -> str:
    result = text
    for tok in reversed(tokenize(text)):
        if tok.kind == "var" and tok.text in mapping:
            result = result[: tok.pos] + mapping[tok.text] + result[tok.pos + len(tok.text):]
    return result


def alpha_equivalent_rule(original: str, mutated: str) -> bool:
    """True when the mutated rule is the original up to variable renaming,
    body literal order, and comparison direction — a semantic no-op."""
    from itertools import permutations

    o_head, o_lits, o_vars = _rule_pieces(original)
    m_head, m_lits, m_vars = _rule_pieces(mutated)
    if len(o_vars) != len(m_vars) or len(o_lits) != len(m_lits):
        return False
    o_key = ("".join(o_head.split()), sorted(_normalize_literal(l) for l in o_lits))
    if len(m_vars) > 6:
        return False  # permutation blow-up guard; treat as distinct
    for perm in permutations(o_vars):
        mapping = dict(zip(m_vars, perm))
        renamed = _rename_vars(mutated, mapping)
        r_head, r_lits, _ = _rule_pieces(renamed)
        key = ("".join(r_head.split()), sorted(_normalize_literal(l) for l in r_lits))
        if key == o_key:
            return True
    return False


def _constant_pool(program: Program) -> list[str]:
    """Symbolic constants usable as replacement values: term-position idents."""
    pool: set[str] = set()
    for rule in program.rules:
        if rule.kind not in _MUTABLE_KINDS:
            continue
        tokens = tokenize(rule.text)
        depth = 0
        for i, tok in enumerate(tokens):
            if tok.text in ("(", "{", "["):
                depth += 1
            elif tok.text in (")", "}", "]"):
                depth -= 1
            elif tok.kind == "ident" and depth > 0 and tok.text != "not":
                nxt = tokens[i + 1] if i + 1 < len(tokens) else None
                if nxt is None or nxt.text != "(":
                    pool.add(tok.text)
    return sorted(pool)


def enumerate_sites(program: Program) -> list[MutationSite]:
    """All mutation sites of a program, in deterministic order."""
    pool = _constant_pool(program)
    sites: list[MutationSite] = []
    for idx, rule in enumerate(program.rules):
        if rule.kind not in _MUTABLE_KINDS:
            continue  # directives and comments stay untouched
        sites.extend(_sites_for_rule(idx, rule.text, rule.kind, pool))
    return sites


def apply_site(program: Program, site: MutationSite) -> Program:
    texts = [r.text for r in program.rules]
    if site.new_rule_text is None:
        del texts[site.rule_index]
    else:
        texts[site.rule_index] = site.new_rule_text
    return parse_program("\n".join(texts))


def generate_mutants(gold: Program, count: int, seed: int, solver: Solver) -> list[Mutant]:
    """Exactly `count` distinct, syntactically valid mutants, reproducibly."""
    if count < 1:
        raise ValueError("count must be >= 1")
    sites = enumerate_sites(gold)
    rng = random.Random(seed)
    order = list(range(len(sites)))
    rng.shuffle(order)

    mutants: list[Mutant] = []
    seen_hashes = {gold.source_hash}
    for site_index in order:
        if len(mutants) >= count:
            break
        site = sites[site_index]
        if site.new_rule_text is not None and alpha_equivalent_rule(
            gold.rules[site.rule_index].text, site.new_rule_text
        ):
            continue
        try:
            mutated = apply_site(gold, site)
        except Exception:
            continue
        if mutated.source_hash in seen_hashes:
            continue
        if not solver.check_syntax(mutated).ok:
            continue
        seen_hashes.add(mutated.source_hash)
        mutants.append(Mutant(
            program=mutated,
            lineage=(site.kind, site.rule_index, site.detail),
            id=len(mutants) + 1,
        ))
    if len(mutants) < count:
        raise ExhaustedMutationSpace(count, len(mutants))
    return mutants


# --- suite validation --------------------------------------------------------


@dataclass
class MutantScore:
    id: int
    lineage: tuple[str, int, str]
    source_hash: str
    suite_accuracy: float
    model_f1: float | None
    survived: bool
    adjudicated: bool


@dataclass
class ValidationReport:
    problem: str | None
    gold_accuracy: float
    entries: list[MutantScore] = field(default_factory=list)

    @property
    def survivors(self) -> list[MutantScore]:
        return [e for e in self.entries if e.survived]

    @property
    def unadjudicated_survivors(self) -> list[MutantScore]:
        return [e for e in self.entries if e.survived and not e.adjudicated]

    @property
    def passed(self) -> bool:
        return not self.unadjudicated_survivors

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "gold_accuracy": self.gold_accuracy,
            "passed": self.passed,
            "mutants": [
                {
                    "id": e.id,
                    "operator": e.lineage[0],
                    "rule_index": e.lineage[1],
                    "detail": e.lineage[2],
                    "source_hash": e.source_hash,
                    "suite_accuracy": e.suite_accuracy,
                    "model_f1": e.model_f1,
                    "survived": e.survived,
                    "adjudicated": e.adjudicated,
                }
                for e in self.entries
            ],
        }


def validate_suite(
    gold: Program,
    suite: TestSuite,
    instances,
    mutants: list[Mutant],
    solver: Solver,
    outputs: set[PredicateSignature] | None = None,
    timeout: float | None = None,
    with_model_f1: bool = True,
    adjudicated: set[str] | None = None,
    problem: str | None = None,
) -> ValidationReport:
    """Score every mutant on the suite (and optionally the model metric).

    The gold program must itself score 1.0 first; survivors are mutants
    with a perfect suite score, minus any adjudicated-equivalent hashes.
    """
    adjudicated = adjudicated or set()
    gold_result = run_suite(gold, suite, solver, timeout)
    if gold_result.accuracy != 1.0:
        failing = [c.name for c in gold_result.cases if not c.passed]
        raise GoldFailsSuite(f"gold fails its own suite on cases: {failing}")

    report = ValidationReport(problem=problem, gold_accuracy=gold_result.accuracy)
    for mutant in mutants:
        suite_result = run_suite(mutant.program, suite, solver, timeout)
        f1 = None
        if with_model_f1 and outputs is not None:
            _, scores = evaluate_model_based(
                mutant.program, gold, instances, outputs, solver, timeout
            )
            f1 = scores.f1
        report.entries.append(MutantScore(
            id=mutant.id,
            lineage=mutant.lineage,
            source_hash=mutant.program.source_hash,
            suite_accuracy=suite_result.accuracy,
            model_f1=f1,
            survived=suite_result.accuracy == 1.0,
            adjudicated=mutant.program.source_hash in adjudicated,
        ))
    return report
