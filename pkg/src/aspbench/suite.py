"""Annotation-based test suites over candidate programs.

A suite is a plain `.lp` file whose annotations live in `%@` comment lines,
so the file stays valid ASP. Each `%@test(name=...)` opens a case; the fact
lines that follow form the case's instance; the other `%@` annotations
attach assertions to the enclosing case:

    %@test(name=triangle)
    node(1..3). edge(1,2). edge(2,3). edge(1,3).
    %@answerSetCount(count=6)
    %@constraintForAll(constraint=":- node(U), not chosenColor(U,_).")

Assertion kinds: noAnswerSet, hasAnswerSet, answerSetCount(count=N),
constraintForAll(constraint="..."), trueInAll(atom="..."),
trueInAtLeastOne(atom="...").
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import SuiteSyntaxError, UnknownAssertionKind
from .solver import SAT, UNSAT, Solver
from .syntax import COMMENT, FACT, STRONG_CONSTRAINT, GroundAtom, Program, atoms_to_facts, parse_atom, parse_program

NO_ANSWER_SET = "no_answer_set"
HAS_ANSWER_SET = "has_answer_set"
ANSWER_SET_COUNT = "answer_set_count"
CONSTRAINT_FOR_ALL = "constraint_for_all"
TRUE_IN_ALL = "true_in_all"
TRUE_IN_AT_LEAST_ONE = "true_in_at_least_one"

_ANNOTATION_KINDS = {
    "noAnswerSet": NO_ANSWER_SET,
    "hasAnswerSet": HAS_ANSWER_SET,
    "answerSetCount": ANSWER_SET_COUNT,
    "constraintForAll": CONSTRAINT_FOR_ALL,
    "trueInAll": TRUE_IN_ALL,
    "trueInAtLeastOne": TRUE_IN_AT_LEAST_ONE,
}

_ANNOTATION_RE = re.compile(r"^\s*%@(\w+)\s*(?:\((.*)\))?\s*$")
_ARG_RE = re.compile(r'\s*(?:(\w+)\s*=\s*)?("(?:[^"\\]|\\.)*"|[^,()"]+)\s*(?:,|$)')


@dataclass(frozen=True)
class Assertion:
    kind: str
    payload: str | int | None = None


@dataclass
class TestCase:
    name: str
    facts: Program
    assertions: list[Assertion] = field(default_factory=list)


@dataclass
class TestSuite:
    cases: list[TestCase] = field(default_factory=list)
    problem: str | None = None


@dataclass
class CaseResult:
    name: str
    status: str  # passed | failed | errored
    reasons: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == "passed"


@dataclass
class SuiteResult:
    accuracy: float
    cases: list[CaseResult] = field(default_factory=list)


def _parse_args(raw: str, line_no: int) -> dict[str, str]:
    args: dict[str, str] = {}
    pos = 0
    index = 0
    while pos < len(raw):
        m = _ARG_RE.match(raw, pos)
        if not m or m.end() == pos:
            raise SuiteSyntaxError(f"malformed annotation arguments: {raw!r}", line_no)
        key, value = m.group(1), m.group(2).strip()
        if value.startswith('"') and value.endswith('"'):
            value = value[1:-1].replace('\\"', '"')
        args[key or str(index)] = value
        index += 1
        pos = m.end()
    return args


def _build_assertion(name: str, args: dict[str, str], line_no: int) -> Assertion:
    kind = _ANNOTATION_KINDS.get(name)
    if kind is None:
        raise UnknownAssertionKind(f"unknown annotation @{name} (line {line_no})")
    if kind in (NO_ANSWER_SET, HAS_ANSWER_SET):
        return Assertion(kind)
    if kind == ANSWER_SET_COUNT:
        value = args.get("count", args.get("0"))
        if value is None or not value.strip().isdigit():
            raise SuiteSyntaxError("answerSetCount needs a non-negative count", line_no)
        return Assertion(kind, int(value))
    if kind == CONSTRAINT_FOR_ALL:
        text = args.get("constraint", args.get("0"))
        if text is None:
            raise SuiteSyntaxError("constraintForAll needs constraint=\"...\"", line_no)
        parsed = parse_program(text)
        rules = [r for r in parsed.rules if r.kind != COMMENT]
        if len(rules) != 1 or rules[0].kind != STRONG_CONSTRAINT:
            raise SuiteSyntaxError("constraintForAll payload must be one strong constraint", line_no)
        return Assertion(kind, rules[0].text)
    atom = args.get("atom", args.get("0"))
    if atom is None:
        raise SuiteSyntaxError(f"{name} needs atom=\"...\"", line_no)
    parse_atom(atom)  # validates
    return Assertion(kind, parse_atom(atom).canonical_text)


def parse_suite(source: str, problem: str | None = None) -> TestSuite:
    """Parse a suite file; rejects empty suites and assertion-less cases."""
    cases: list[TestCase] = []
    current_name: str | None = None
    current_facts: list[str] = []
    current_assertions: list[Assertion] = []
    name_line = 0

    def close_case(line_no: int) -> None:
        nonlocal current_name, current_facts, current_assertions
        if current_name is None:
            return
        if not current_assertions:
            raise SuiteSyntaxError(f"test case {current_name!r} has no assertions", name_line)
        facts = parse_program("\n".join(current_facts))
        for rule in facts.rules:
            if rule.kind not in (FACT, COMMENT):
                raise SuiteSyntaxError(
                    f"test case {current_name!r} contains a non-fact rule: {rule.text!r}",
                    name_line,
                )
        cases.append(TestCase(current_name, facts, current_assertions))
        current_name, current_facts, current_assertions = None, [], []

    for line_no, line in enumerate(source.splitlines(), start=1):
        m = _ANNOTATION_RE.match(line)
        if not m:
            stripped = line.strip()
            if stripped and not stripped.startswith("%") and current_name is None:
                raise SuiteSyntaxError("facts before the first %@test annotation", line_no)
            if current_name is not None:
                current_facts.append(line)
            continue
        name, raw_args = m.group(1), m.group(2) or ""
        args = _parse_args(raw_args, line_no) if raw_args.strip() else {}
        if name == "test":
            close_case(line_no)
            case_name = args.get("name", args.get("0"))
            if not case_name:
                raise SuiteSyntaxError("test annotation needs name=...", line_no)
            if any(c.name == case_name for c in cases):
                raise SuiteSyntaxError(f"duplicate test case name {case_name!r}", line_no)
            current_name = case_name
            name_line = line_no
        else:
            if current_name is None:
                raise SuiteSyntaxError(f"@{name} outside any test case", line_no)
            current_assertions.append(_build_assertion(name, args, line_no))

    close_case(len(source.splitlines()))
    if not cases:
        raise SuiteSyntaxError("suite contains no test cases", 1)
    return TestSuite(cases=cases, problem=problem)


# --- execution -------------------------------------------------------------


def run_case(candidate: Program, case: TestCase, solver: Solver,
             timeout: float | None = None) -> CaseResult:
    """A case passes iff all of its assertions pass."""
    models: list[frozenset[GroundAtom]] | None = None
    reasons: list[str] = []

    def enumerate_models():
        nonlocal models
        if models is None:
            res = solver.solve_all([candidate, case.facts], timeout)
            if res.status not in (SAT, UNSAT):
                raise _CaseError(f"enumeration failed: {res.status} {res.stderr_excerpt}".strip())
            models = [m.atoms for m in res.models]
        return models

    try:
        for assertion in case.assertions:
            ok, why = _check(assertion, candidate, case, solver, timeout, enumerate_models)
            if not ok:
                reasons.append(why)
    except _CaseError as e:
        return CaseResult(case.name, "errored", [str(e)])
    if reasons:
        return CaseResult(case.name, "failed", reasons)
    return CaseResult(case.name, "passed")


class _CaseError(Exception):
    pass


def _check(assertion, candidate, case, solver, timeout, enumerate_models) -> tuple[bool, str]:
    kind = assertion.kind
    if kind in (NO_ANSWER_SET, HAS_ANSWER_SET):
        res = solver.solve_once([candidate, case.facts], timeout)
        if res.status not in (SAT, UNSAT):
            raise _CaseError(f"solve failed: {res.status} {res.stderr_excerpt}".strip())
        if kind == NO_ANSWER_SET:
            return res.status == UNSAT, "expected no answer set, got one"
        return res.status == SAT, "expected an answer set, got none"

    if kind == ANSWER_SET_COUNT:
        count = len(enumerate_models())
        return count == assertion.payload, f"expected {assertion.payload} answer sets, got {count}"

    if kind == CONSTRAINT_FOR_ALL:
        for atoms in enumerate_models():
            res = solver.solve_once([atoms_to_facts(atoms), assertion.payload], timeout)
            if res.status == UNSAT:
                witness = ", ".join(sorted(a.canonical_text for a in atoms)) or "{}"
                return False, f"constraint violated in model {{{witness}}}"
            if res.status != SAT:
                raise _CaseError(f"constraint check failed: {res.status} {res.stderr_excerpt}".strip())
        return True, ""

    atom = parse_atom(assertion.payload)
    all_models = enumerate_models()
    if kind == TRUE_IN_ALL:
        if not all_models:
            return False, f"no models, so {atom} is not in all of them"
        return all(atom in m for m in all_models), f"{atom} missing from some model"
    if kind == TRUE_IN_AT_LEAST_ONE:
        return any(atom in m for m in all_models), f"{atom} in no model"
    raise UnknownAssertionKind(kind)


def run_suite(candidate: Program, suite: TestSuite, solver: Solver,
              timeout: float | None = None) -> SuiteResult:
    """Accuracy is passed cases over total; errored cases count as failed."""
    results = [run_case(candidate, case, solver, timeout) for case in suite.cases]
    passed = sum(1 for r in results if r.passed)
    return SuiteResult(accuracy=passed / len(results), cases=results)
