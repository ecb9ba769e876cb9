"""Problem bundle definitions: loading, validation, and the shipped dataset.

A bundle directory contains:

    description.md          problem statement fed to the generator
    paraphrase1.md          optional paraphrased statements
    paraphrase2.md
    gold.lp                 reference encoding
    manifest.cfg            key = value metadata (see Manifest)
    instances/<name>.lp     fact-only instances, one file each
    tests.suite.lp          annotation-based test suite
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import (
    DatasetRootMissing,
    GoldSelfTestFailure,
    ManifestMismatch,
    MissingFile,
)
from .modeleval import evaluate_model_based
from .solver import Solver
from .suite import TestSuite, parse_suite, run_suite
from .syntax import COMMENT, FACT, PredicateSignature, Program, parse_program

logger = logging.getLogger(__name__)

PROBLEM_NAMES = [
    "colorability",
    "dominating_set",
    "hamiltonian_cycle",
    "hamiltonian_path",
    "hierarchical_clustering",
    "maximal_clique",
    "partitioning",
    "slitherlink",
    "stable_marriage",
    "traveling_salesman",
]

STRUCTURAL = "structural"
SYNTAX = "syntax"
SELF_TEST = "self_test"


@dataclass
class Manifest:
    """Flat key = value metadata for a bundle; round-trips losslessly."""

    name: str
    input_preds: list[str] = field(default_factory=list)
    output_preds: list[str] = field(default_factory=list)
    instances: list[str] = field(default_factory=list)
    timeout: float = 300.0
    has_optimization: bool = False
    adjudicated_survivors: list[str] = field(default_factory=list)

    @classmethod
    def parse(cls, text: str) -> "Manifest":
        values: dict[str, str] = {}
        for line_no, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ManifestMismatch(f"manifest line {line_no} is not key = value: {line!r}")
            key, _, value = stripped.partition("=")
            values[key.strip()] = value.strip()
        if "name" not in values:
            raise ManifestMismatch("manifest lacks a name")

        def split(key: str) -> list[str]:
            raw = values.get(key, "")
            return [item.strip() for item in raw.split(",") if item.strip()]

        return cls(
            name=values["name"],
            input_preds=split("input_preds"),
            output_preds=split("output_preds"),
            instances=split("instances"),
            timeout=float(values.get("timeout", "300")),
            has_optimization=values.get("has_optimization", "false").lower() == "true",
            adjudicated_survivors=split("adjudicated_survivors"),
        )

    def serialize(self) -> str:
        def join(items: list[str]) -> str:
            return ", ".join(items)

        return (
            f"name = {self.name}\n"
            f"input_preds = {join(self.input_preds)}\n"
            f"output_preds = {join(self.output_preds)}\n"
            f"instances = {join(self.instances)}\n"
            f"timeout = {self.timeout:g}\n"
            f"has_optimization = {'true' if self.has_optimization else 'false'}\n"
            f"adjudicated_survivors = {join(self.adjudicated_survivors)}\n"
        )


@dataclass
class ProblemBundle:
    name: str
    description_original: str
    paraphrase_1: str | None
    paraphrase_2: str | None
    gold: Program
    input_preds: set[PredicateSignature]
    output_preds: set[PredicateSignature]
    instances: list[tuple[str, Program]]
    suite: TestSuite
    has_optimization: bool
    per_problem_timeout: float
    adjudicated_survivors: set[str]
    path: Path

    def description_for(self, variant: str) -> str | None:
        if variant == "original":
            return self.description_original
        if variant == "paraphrase1":
            return self.paraphrase_1
        if variant == "paraphrase2":
            return self.paraphrase_2
        raise ValueError(f"unknown variant {variant!r}")


def default_dataset_root() -> Path:
    env = os.environ.get("ASPBENCH_DATASET")
    if env:
        return Path(env)
    return Path(str(resources.files("aspbench").joinpath("data/problems")))


def list_problems(root: Path | None = None) -> list[str]:
    """Names of the problems available under the dataset root."""
    root = Path(root) if root else default_dataset_root()
    if not root.is_dir():
        raise DatasetRootMissing(str(root))
    names = sorted(p.name for p in root.iterdir() if (p / "manifest.cfg").is_file())
    if not names:
        logger.warning("dataset root %s contains no problem bundles", root)
    return names


def _read(path: Path) -> str:
    if not path.is_file():
        raise MissingFile(str(path))
    return path.read_text(encoding="utf-8")


def _parse_sigs(items: list[str]) -> set[PredicateSignature]:
    return {PredicateSignature.parse(item) for item in items}


def _check_fact_only(program: Program, allowed: set[PredicateSignature], what: str) -> None:
    from .syntax import _fact_signature  # shares the fact-arity logic

    for rule in program.rules:
        if rule.kind == COMMENT:
            continue
        if rule.kind != FACT:
            raise ManifestMismatch(f"{what} contains a non-fact rule: {rule.text!r}")
        sig = _fact_signature(rule.text)
        if sig not in allowed:
            raise ManifestMismatch(f"{what} uses non-input predicate {sig}")


def load_bundle(path: Path, solver: Solver | None = None, level: str = STRUCTURAL) -> ProblemBundle:
    """Load and validate one bundle.

    Levels: structural (no solver), syntax (gold must pass check_syntax),
    self_test (gold must score F1 = 1.0 and suite accuracy = 1.0).
    """
    path = Path(path)
    if not path.is_dir():
        raise MissingFile(str(path))
    manifest = Manifest.parse(_read(path / "manifest.cfg"))
    gold = parse_program(_read(path / "gold.lp"))
    description = _read(path / "description.md")
    paraphrase_1 = (path / "paraphrase1.md").read_text() if (path / "paraphrase1.md").is_file() else None
    paraphrase_2 = (path / "paraphrase2.md").read_text() if (path / "paraphrase2.md").is_file() else None

    input_preds = _parse_sigs(manifest.input_preds)
    output_preds = _parse_sigs(manifest.output_preds)
    if not input_preds or not output_preds:
        raise ManifestMismatch(f"{manifest.name}: input_preds and output_preds are required")

    declared = input_preds | output_preds
    missing = {str(sig) for sig in declared if sig not in gold.signatures()}
    if missing:
        raise ManifestMismatch(
            f"{manifest.name}: declared predicates absent from gold: {sorted(missing)}"
        )

    if manifest.has_optimization != gold.has_weak_constraints():
        raise ManifestMismatch(
            f"{manifest.name}: has_optimization flag disagrees with gold's weak constraints"
        )

    instances: list[tuple[str, Program]] = []
    for inst_name in manifest.instances:
        program = parse_program(_read(path / "instances" / f"{inst_name}.lp"))
        _check_fact_only(program, input_preds, f"instance {inst_name}")
        instances.append((inst_name, program))
    if not instances:
        raise ManifestMismatch(f"{manifest.name}: manifest lists no instances")

    suite = parse_suite(_read(path / "tests.suite.lp"), problem=manifest.name)
    for case in suite.cases:
        _check_fact_only(case.facts, input_preds, f"suite case {case.name}")

    bundle = ProblemBundle(
        name=manifest.name,
        description_original=description,
        paraphrase_1=paraphrase_1,
        paraphrase_2=paraphrase_2,
        gold=gold,
        input_preds=input_preds,
        output_preds=output_preds,
        instances=instances,
        suite=suite,
        has_optimization=manifest.has_optimization,
        per_problem_timeout=manifest.timeout,
        adjudicated_survivors=set(manifest.adjudicated_survivors),
        path=path,
    )

    if level in (SYNTAX, SELF_TEST):
        if solver is None:
            raise ValueError(f"level {level!r} requires a solver")
        check = solver.check_syntax(gold, timeout=bundle.per_problem_timeout)
        if not check.ok:
            raise GoldSelfTestFailure(f"{manifest.name}: gold fails syntax check: {check.detail}")
    if level == SELF_TEST:
        self_test_bundle(bundle, solver)
    return bundle


def self_test_bundle(bundle: ProblemBundle, solver: Solver) -> None:
    """Gold self-evaluation: model-based F1 and suite accuracy must be 1.0."""
    _, scores = evaluate_model_based(
        bundle.gold, bundle.gold, bundle.instances, bundle.output_preds,
        solver, timeout=bundle.per_problem_timeout,
    )
    if scores.f1 != 1.0 or scores.precision != 1.0 or scores.recall != 1.0:
        raise GoldSelfTestFailure(
            f"{bundle.name}: gold self-evaluation f1={scores.f1:.4f} "
            f"p={scores.precision:.4f} r={scores.recall:.4f}"
        )
    result = run_suite(bundle.gold, bundle.suite, solver, bundle.per_problem_timeout)
    if result.accuracy != 1.0:
        failing = [c.name for c in result.cases if not c.passed]
        raise GoldSelfTestFailure(f"{bundle.name}: gold fails suite cases {failing}")


def load_all(root: Path | None = None, solver: Solver | None = None,
             level: str = STRUCTURAL) -> list[ProblemBundle]:
    root = Path(root) if root else default_dataset_root()
    return [load_bundle(root / name, solver, level) for name in list_problems(root)]
