"""Subprocess bridge to the ASP solver.

Two interchangeable backends produce the same machine-readable (outf=2
style) JSON: a native clingo binary, or the pinned clingo WASM build run
under node as a persistent line-protocol server. The WASM server is the
default because it needs no system-wide solver install; point
ASPBENCH_CLINGO at a binary to override.
"""

from __future__ import annotations

import json
import os
import queue
import shutil
import subprocess
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import SolverCrash, SolverUnavailable
from .syntax import GroundAtom, PredicateSignature, Program, parse_atom, project_atoms

SAT = "sat"
UNSAT = "unsat"
SYNTAX_ERROR = "syntax_error"
TIMEOUT = "timeout"
SOLVER_CRASH = "solver_crash"

DEFAULT_TIMEOUT = 300.0

ProgramPart = "Program | str"


@dataclass(frozen=True)
class AnswerSet:
    """A stable model as a set of canonical ground atoms."""

    atoms: frozenset[GroundAtom]
    instance_id: str | None = None

    def project(self, preds: set[PredicateSignature]) -> "AnswerSet":
        return AnswerSet(project_atoms(self.atoms, preds), self.instance_id)

    def sort_key(self) -> tuple[str, ...]:
        return tuple(sorted(a.canonical_text for a in self.atoms))

    def __contains__(self, atom: GroundAtom) -> bool:
        return atom in self.atoms


@dataclass
class SolveRequest:
    program_parts: list
    mode: str  # check_syntax | one_model | all_models | all_optimal_models
    timeout: float = DEFAULT_TIMEOUT
    project: set[PredicateSignature] | None = None


@dataclass
class SolveResult:
    status: str
    models: list[AnswerSet] = field(default_factory=list)
    optimum_proven: bool = False
    costs: list[int] | None = None
    stderr_excerpt: str = ""

    @property
    def satisfiable(self) -> bool:
        return self.status == SAT


@dataclass
class SyntaxCheck:
    ok: bool
    status: str  # "ok" | "syntax_error" | "timeout" | "solver_crash"
    detail: str = ""


def _combine(parts) -> str:
    chunks = []
    for part in parts:
        chunks.append(part.text() if isinstance(part, Program) else str(part))
    return "\n".join(chunks)


def _parts_have_weak(parts) -> bool:
    for part in parts:
        if isinstance(part, Program):
            if part.has_weak_constraints():
                return True
        elif ":~" in part or "#minimize" in part or "#maximize" in part:
            return True
    return False


# --- backends -------------------------------------------------------------


class _NativeBackend:
    """One clingo subprocess per call."""

    def __init__(self, binary: str):
        self.binary = binary

    def run(self, program: str, models: int, options: list[str], timeout: float) -> dict:
        cmd = [self.binary, "--outf=2", f"--models={models}", *options, "-"]
        try:
            proc = subprocess.run(
                cmd,
                input=program.encode(),
                capture_output=True,
                timeout=timeout,
            )
        except subprocess.TimeoutExpired:
            raise _CallTimeout()
        except OSError as e:
            raise SolverCrash(f"failed to run {self.binary}: {e}")
        try:
            return json.loads(proc.stdout.decode())
        except (ValueError, UnicodeDecodeError):
            err = proc.stderr.decode(errors="replace")[-500:]
            if "error" in err.lower():
                return {"Result": "ERROR", "Error": err}
            raise SolverCrash(f"unreadable solver output: {err!r}")

    def close(self) -> None:
        pass


class _WasmServerBackend:
    """Persistent node process serving clingo WASM over a JSON line protocol."""

    def __init__(self, node: str, module_dir: Path, init_timeout: float = 120.0):
        self.node = node
        self.module_dir = module_dir
        self.init_timeout = init_timeout
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._next_id = 0

    def _script_path(self) -> str:
        return str(resources.files("aspbench").joinpath("js/solver_server.js"))

    def _start(self) -> None:
        self._lines = queue.Queue()
        try:
            self._proc = subprocess.Popen(
                [self.node, self._script_path(), str(self.module_dir)],
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
            )
        except OSError as e:
            raise SolverUnavailable(f"cannot start solver server: {e}")
        threading.Thread(target=self._reader, args=(self._proc,), daemon=True).start()
        ready = self._read_line(self.init_timeout)
        if ready is None or '"ready"' not in ready:
            self._kill()
            raise SolverUnavailable("solver server failed to initialize")

    def _reader(self, proc: subprocess.Popen) -> None:
        assert proc.stdout is not None
        for line in proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _read_line(self, timeout: float) -> str | None:
        try:
            return self._lines.get(timeout=timeout)
        except queue.Empty:
            return None

    def _kill(self) -> None:
        if self._proc is not None:
            self._proc.kill()
            self._proc.wait()
            self._proc = None

    def run(self, program: str, models: int, options: list[str], timeout: float) -> dict:
        if self._proc is None or self._proc.poll() is not None:
            self._kill()
            self._start()
        assert self._proc is not None and self._proc.stdin is not None
        self._next_id += 1
        req = {"id": self._next_id, "program": program, "models": models, "options": options}
        try:
            self._proc.stdin.write(json.dumps(req) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            self._kill()
            raise SolverCrash("solver server pipe closed")
        while True:
            line = self._read_line(timeout)
            if line is None:
                # timed out or EOF: the WASM run cannot be interrupted, so restart
                self._kill()
                raise _CallTimeout()
            try:
                reply = json.loads(line)
            except ValueError:
                continue
            if reply.get("id") != self._next_id:
                continue
            if "error" in reply:
                raise SolverCrash(str(reply["error"]))
            return reply["result"]

    def close(self) -> None:
        self._kill()


class _CallTimeout(Exception):
    pass


def _find_wasm_module() -> Path | None:
    candidates = []
    env = os.environ.get("ASPBENCH_CLINGO_WASM")
    if env:
        candidates.append(Path(env))
    candidates.append(Path.cwd() / "solver-js" / "node_modules" / "clingo-wasm")
    here = Path(__file__).resolve()
    for parent in here.parents:
        candidates.append(parent / "solver-js" / "node_modules" / "clingo-wasm")
    candidates.append(Path.home() / ".cache" / "aspbench" / "node_modules" / "clingo-wasm")
    for cand in candidates:
        if (cand / "package.json").exists():
            return cand
    return None


def resolve_backend(clingo_bin: str | None = None, wasm_dir: str | None = None):
    """Pick a solver backend: explicit binary, PATH clingo, then WASM server."""
    binary = clingo_bin or os.environ.get("ASPBENCH_CLINGO") or shutil.which("clingo")
    if binary:
        return _NativeBackend(binary)
    module_dir = Path(wasm_dir) if wasm_dir else _find_wasm_module()
    node = shutil.which("node")
    if module_dir is not None and node:
        return _WasmServerBackend(node, module_dir)
    raise SolverUnavailable(
        "no solver found: install clingo (or set ASPBENCH_CLINGO), or run "
        "`npm --prefix solver-js install` to provision the WASM backend"
    )


# --- solver facade ----------------------------------------------------------


class Solver:
    """Thin, stateless-per-call facade over a solver backend.

    Not thread-safe; use one Solver per worker thread.
    """

    def __init__(self, clingo_bin: str | None = None, wasm_dir: str | None = None,
                 default_timeout: float = DEFAULT_TIMEOUT):
        self._backend = None
        self._clingo_bin = clingo_bin
        self._wasm_dir = wasm_dir
        self.default_timeout = default_timeout

    def _ensure_backend(self):
        if self._backend is None:
            self._backend = resolve_backend(self._clingo_bin, self._wasm_dir)
        return self._backend

    def close(self) -> None:
        if self._backend is not None:
            self._backend.close()
            self._backend = None

    def __enter__(self) -> "Solver":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- operations --------------------------------------------------------

    def check_syntax(self, program, timeout: float | None = None) -> SyntaxCheck:
        """Ground (and trivially solve) the program to surface parse/ground errors."""
        text = _combine([program])
        try:
            raw = self._run(text, models=1, options=[], timeout=timeout)
        except _CallTimeout:
            return SyntaxCheck(False, TIMEOUT, "solver call timed out")
        except SolverCrash as e:
            return SyntaxCheck(False, SOLVER_CRASH, str(e))
        if raw.get("Result") == "ERROR":
            return SyntaxCheck(False, "syntax_error", str(raw.get("Error", "")))
        return SyntaxCheck(True, "ok")

    def solve_all(self, parts, timeout: float | None = None, *, num_models: int = 0,
                  opt_bound: list[int] | None = None,
                  ignore_optimization: bool = False) -> SolveResult:
        """Enumerate stable models; under optimization, all optimal models.

        `opt_bound` switches to bounded enumeration (models with costs equal
        to the given vector); `ignore_optimization` enumerates all stable
        models of an optimizing program.
        """
        text = _combine(parts)
        has_weak = _parts_have_weak(parts)
        options: list[str] = []
        mode = "plain"
        if opt_bound is not None:
            options = ["--opt-mode=enum," + ",".join(str(c) for c in opt_bound)]
            mode = "enum"
        elif has_weak and ignore_optimization:
            options = ["--opt-mode=ignore"]
        elif has_weak:
            options = ["--opt-mode=optN"]
            mode = "optN"
        try:
            raw = self._run(text, models=num_models, options=options, timeout=timeout)
        except _CallTimeout:
            return SolveResult(TIMEOUT)
        except SolverCrash as e:
            return SolveResult(SOLVER_CRASH, stderr_excerpt=str(e))
        return _interpret(raw, mode=mode, opt_bound=opt_bound)

    def solve_once(self, parts, timeout: float | None = None) -> SolveResult:
        """Return at most one model; the optimal one when weak constraints are present."""
        text = _combine(parts)
        has_weak = _parts_have_weak(parts)
        try:
            if has_weak:
                raw = self._run(text, models=0, options=[], timeout=timeout)
            else:
                raw = self._run(text, models=1, options=[], timeout=timeout)
        except _CallTimeout:
            return SolveResult(TIMEOUT)
        except SolverCrash as e:
            return SolveResult(SOLVER_CRASH, stderr_excerpt=str(e))
        result = _interpret(raw, mode="once" if has_weak else "plain", opt_bound=None)
        if result.status == SAT and len(result.models) > 1:
            result.models = result.models[-1:]
        return result

    def _run(self, text: str, models: int, options: list[str], timeout: float | None) -> dict:
        backend = self._ensure_backend()
        return backend.run(text, models, options, timeout or self.default_timeout)


def _interpret(raw: dict, mode: str, opt_bound: list[int] | None) -> SolveResult:
    result = raw.get("Result")
    if result == "ERROR":
        return SolveResult(SYNTAX_ERROR, stderr_excerpt=str(raw.get("Error", "")))
    warnings = "\n".join(w for w in raw.get("Warnings", []) if w).strip()
    if result == "UNSATISFIABLE":
        return SolveResult(UNSAT, stderr_excerpt=warnings)
    if result not in ("SATISFIABLE", "OPTIMUM FOUND"):
        return SolveResult(SOLVER_CRASH, stderr_excerpt=f"unexpected result {result!r}")

    calls = raw.get("Call") or [{}]
    witnesses = calls[0].get("Witnesses") or []
    optimum_proven = result == "OPTIMUM FOUND"
    costs = None
    models_info = raw.get("Models") or {}

    if mode == "optN" and optimum_proven:
        n_opt = int(models_info.get("Optimal", 0))
        witnesses = witnesses[-n_opt:] if n_opt else []
        costs = models_info.get("Costs")
    elif mode == "once" and witnesses:
        witnesses = witnesses[-1:]
        costs = witnesses[0].get("Costs")
    elif mode == "enum":
        witnesses = [w for w in witnesses if w.get("Costs") == opt_bound]
        costs = list(opt_bound) if witnesses else None
        if not witnesses:
            return SolveResult(UNSAT, optimum_proven=False, stderr_excerpt=warnings)
    elif witnesses and witnesses[-1].get("Costs") is not None:
        costs = witnesses[-1]["Costs"]

    models = []
    seen = set()
    for wit in witnesses:
        atoms = frozenset(parse_atom(v) for v in wit.get("Value", []))
        if atoms in seen:
            continue
        seen.add(atoms)
        models.append(AnswerSet(atoms))
    models.sort(key=AnswerSet.sort_key)
    return SolveResult(
        SAT,
        models=models,
        optimum_proven=optimum_proven,
        costs=list(costs) if costs else costs,
        stderr_excerpt=warnings,
    )
