"""Model-based semantic metric.

Evaluates a candidate program by how well it reproduces the gold program's
answer sets per instance: gold models are enumerated, coverage of each gold
model is decided by one steered solver call, and remaining candidate models
are counted as wrong via an augmented program that discards exact matches.
Counts pool across instances into micro precision/recall/F1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import AspBenchError
from .solver import SAT, TIMEOUT, UNSAT, AnswerSet, Solver, SolveResult
from .syntax import (
    GroundAtom,
    PredicateSignature,
    Program,
    max_weak_level,
    parse_program,
    project_atoms,
)

AUX_NAMES = ("trueInGold", "mod", "trueInTested", "smallerMG", "smallerMt")

WRONG_MODE_CANDIDATE_OPTIMAL = "p_t_optimal"
WRONG_MODE_ALL_STABLE = "all_stable"


class EmptyBase(AspBenchError):
    """Complement base empty while the target model is not (defensive)."""


@dataclass
class ModelSets:
    """Pooled gold / covered / wrong model sets, tagged by instance."""

    gm: list[AnswerSet] = field(default_factory=list)
    cgm: list[AnswerSet] = field(default_factory=list)
    wm: list[AnswerSet] = field(default_factory=list)
    failed_instances: list[tuple[str, str]] = field(default_factory=list)


@dataclass
class Scores:
    precision: float
    recall: float
    f1: float
    gm_count: int
    cgm_count: int
    wm_count: int
    tpm_count: int
    partial: bool = False


def models_match(m: AnswerSet, m_g: AnswerSet, outputs: set[PredicateSignature]) -> bool:
    """Exact match over the output predicates."""
    return project_atoms(m.atoms, outputs) == project_atoms(m_g.atoms, outputs)


def build_complement_base(as_g: list[AnswerSet], outputs: set[PredicateSignature]) -> frozenset[GroundAtom]:
    """Union of projected atoms over one instance's gold models."""
    base: set[GroundAtom] = set()
    for m in as_g:
        base |= project_atoms(m.atoms, outputs)
    return frozenset(base)


def create_model_constraints(
    m_g: frozenset[GroundAtom] | AnswerSet,
    base: frozenset[GroundAtom],
    outputs: set[PredicateSignature],
    weak_mode: bool = False,
    level: int = 1,
) -> Program:
    """Constraints steering the solver toward one specific gold model.

    Strong mode: `:- not a.` for atoms of the model, `:- a.` for base atoms
    outside it. Weak mode emits the same tests as weak constraints with
    cost 1 at `level`, one discriminating term per atom, so each mismatch
    costs 1 and the level must outrank the candidate's own priorities.
    """
    atoms = m_g.atoms if isinstance(m_g, AnswerSet) else m_g
    atoms = project_atoms(atoms, outputs)
    if atoms and not base:
        raise EmptyBase("target model nonempty but complement base is empty")
    lines = []
    for a in sorted(atoms):
        if weak_mode:
            lines.append(f":~ not {a.canonical_text}. [1@{level},{a.canonical_text}]")
        else:
            lines.append(f":- not {a.canonical_text}.")
    for a in sorted(base - atoms):
        if weak_mode:
            lines.append(f":~ {a.canonical_text}. [1@{level},{a.canonical_text}]")
        else:
            lines.append(f":- {a.canonical_text}.")
    return parse_program("\n".join(lines))


def _aux_names(p_t: Program) -> dict[str, str]:
    """Collision-free names for the augmentation predicates."""
    taken = p_t.predicate_names()
    suffix = ""
    n = 0
    while any(name + suffix in taken for name in AUX_NAMES):
        n += 1
        suffix = f"_b{n}"
    return {name: name + suffix for name in AUX_NAMES}


def aug_program(p_t: Program, as_g: list[AnswerSet], outputs: set[PredicateSignature]) -> Program:
    """Augment the candidate so models matching any gold model are discarded.

    Adds reified gold-model facts, a bridging rule per output predicate,
    and difference rules whose final constraint eliminates exact matches.
    """
    names = _aux_names(p_t)
    tg, mod, tt = names["trueInGold"], names["mod"], names["trueInTested"]
    smg, smt = names["smallerMG"], names["smallerMt"]

    lines: list[str] = []
    for i, m in enumerate(as_g, start=1):
        for a in sorted(project_atoms(m.atoms, outputs)):
            lines.append(f"{tg}({i},{a.canonical_text}).")
    lines.append(f"{mod}(X) :- {tg}(X,_).")
    for sig in sorted(outputs):
        if sig.arity == 0:
            lines.append(f"{tt}({sig.name}) :- {sig.name}.")
        else:
            vs = ",".join(f"V{k}" for k in range(1, sig.arity + 1))
            lines.append(f"{tt}({sig.name}({vs})) :- {sig.name}({vs}).")
    lines.append(f"{smg}(M) :- {tg}(M, X), not {tt}(X).")
    lines.append(f"{smt}(M) :- {mod}(M), {tt}(X), not {tg}(M, X).")
    lines.append(f":- {mod}(M), not {smg}(M), not {smt}(M).")
    return parse_program(p_t.text() + "\n" + "\n".join(lines))


def compute_scores(ms: ModelSets) -> Scores:
    """Micro-pooled precision/recall/F1 from the pooled counts."""
    gm, cgm, wm = len(ms.gm), len(ms.cgm), len(ms.wm)
    tpm = cgm + wm
    precision = cgm / tpm if tpm > 0 else 0.0
    recall = cgm / gm if gm > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return Scores(
        precision=precision,
        recall=recall,
        f1=f1,
        gm_count=gm,
        cgm_count=cgm,
        wm_count=wm,
        tpm_count=tpm,
        partial=bool(ms.failed_instances),
    )


def _distinct_projections(result: SolveResult, outputs: set[PredicateSignature], instance_id: str) -> list[AnswerSet]:
    """Projected models with duplicates collapsed, sorted for determinism."""
    seen: set[frozenset[GroundAtom]] = set()
    out: list[AnswerSet] = []
    for m in result.models:
        proj = project_atoms(m.atoms, outputs)
        if proj in seen:
            continue
        seen.add(proj)
        out.append(AnswerSet(proj, instance_id))
    out.sort(key=AnswerSet.sort_key)
    return out


def evaluate_model_based(
    p_t: Program,
    p_g: Program,
    instances,
    outputs: set[PredicateSignature],
    solver: Solver,
    timeout: float | None = None,
    wrong_mode: str = WRONG_MODE_CANDIDATE_OPTIMAL,
) -> tuple[ModelSets, Scores]:
    """Coverage-and-wrong-model evaluation of a candidate against gold.

    `instances` is a list of (instance_id, Program) pairs or bare Programs.
    A solver timeout drops the whole instance from the pooled counts and
    records it in `failed_instances`; the scores are then flagged partial.
    """
    ms = ModelSets()
    steer_weak = p_g.has_weak_constraints()
    steer_level = max_weak_level(p_t) + 1

    for instance_id, inst in _named(instances):
        gold_res = solver.solve_all([p_g, inst], timeout)
        if gold_res.status not in (SAT, UNSAT):
            ms.failed_instances.append((instance_id, f"gold enumeration: {gold_res.status}"))
            continue
        if gold_res.status == SAT and gold_res.costs is not None and not gold_res.optimum_proven:
            ms.failed_instances.append((instance_id, "gold optimum not proven"))
            continue
        as_g = _distinct_projections(gold_res, outputs, instance_id)
        base = build_complement_base(as_g, outputs)

        covered: list[AnswerSet] = []
        failed = None
        for m_g in as_g:
            constraints = create_model_constraints(m_g, base, outputs, steer_weak, steer_level)
            res = solver.solve_once([p_t, constraints, inst], timeout)
            if res.status in (SAT, UNSAT):
                if res.status == SAT and models_match(res.models[0], m_g, outputs):
                    covered.append(m_g)
            else:
                failed = f"steering solve: {res.status}"
                break
        if failed:
            ms.failed_instances.append((instance_id, failed))
            continue

        wrong_res = _enumerate_wrong(p_t, as_g, inst, outputs, solver, timeout, wrong_mode)
        if wrong_res.status not in (SAT, UNSAT):
            ms.failed_instances.append((instance_id, f"wrong-model enumeration: {wrong_res.status}"))
            continue
        gold_projections = {m.atoms for m in as_g}
        wrong = [
            m for m in _distinct_projections(wrong_res, outputs, instance_id)
            if m.atoms not in gold_projections
        ]

        ms.gm.extend(as_g)
        ms.cgm.extend(covered)
        ms.wm.extend(wrong)

    return ms, compute_scores(ms)


def _enumerate_wrong(p_t, as_g, inst, outputs, solver, timeout, wrong_mode) -> SolveResult:
    """All candidate models that match no gold model.

    For an optimizing candidate the default counts only models that are
    optimal under the candidate's own weak constraints: its proven optimum
    bounds the enumeration of the augmented program.
    """
    p_ta = aug_program(p_t, as_g, outputs)
    if not p_t.has_weak_constraints():
        return solver.solve_all([p_ta, inst], timeout)
    if wrong_mode == WRONG_MODE_ALL_STABLE:
        return solver.solve_all([p_ta, inst], timeout, ignore_optimization=True)
    opt = solver.solve_once([p_t, inst], timeout)
    if opt.status == UNSAT:
        return SolveResult(UNSAT)
    if opt.status != SAT:
        return opt
    if opt.costs is None:
        return solver.solve_all([p_ta, inst], timeout)
    if not opt.optimum_proven:
        return SolveResult(TIMEOUT)
    return solver.solve_all([p_ta, inst], timeout, opt_bound=opt.costs)


def _named(instances) -> list[tuple[str, Program]]:
    named = []
    for k, item in enumerate(instances, start=1):
        if isinstance(item, tuple):
            named.append(item)
        else:
            named.append((f"instance{k}", item))
    return named
