"""Exception taxonomy shared across the harness."""

from __future__ import annotations


class AspBenchError(Exception):
    """Base class for all harness errors."""


# --- source handling ---------------------------------------------------


class LexError(AspBenchError):
    """Lexical problem in ASP source (unbalanced parens, unterminated string)."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} at {line}:{col}")
        self.line = line
        self.col = col


class MappingCollision(AspBenchError):
    """Two distinct candidate predicates would be merged into one gold name."""


class InvalidIdentifier(AspBenchError):
    """A mapped predicate name is not a valid ASP identifier."""


# --- solver bridge -----------------------------------------------------


class SolverUnavailable(AspBenchError):
    """No solver backend could be resolved."""


class SolverCrash(AspBenchError):
    """The solver subprocess died or produced unreadable output."""


# --- test suites -------------------------------------------------------


class SuiteSyntaxError(AspBenchError):
    def __init__(self, message: str, line: int):
        super().__init__(f"{message} (line {line})")
        self.line = line


class UnknownAssertionKind(AspBenchError):
    """Annotation name not in the assertion vocabulary."""


# --- mutation lab ------------------------------------------------------


class ExhaustedMutationSpace(AspBenchError):
    """Program too small to yield the requested number of distinct mutants."""

    def __init__(self, requested: int, possible: int):
        super().__init__(f"requested {requested} mutants, only {possible} possible")
        self.requested = requested
        self.possible = possible


class GoldFailsSuite(AspBenchError):
    """The gold program does not score 1.0 on its own suite."""


# --- benchmark data ----------------------------------------------------


class MissingFile(AspBenchError):
    pass


class ManifestMismatch(AspBenchError):
    """Manifest declarations inconsistent with bundle contents."""


class GoldSelfTestFailure(AspBenchError):
    """Gold program fails its own evaluation (F1 or suite accuracy below 1.0)."""


class DatasetRootMissing(AspBenchError):
    pass


# --- LLM gateway -------------------------------------------------------


class GatewayError(AspBenchError):
    """HTTP failure after retries."""


class EmptyResponse(GatewayError):
    pass


class UnparseableMapping(AspBenchError):
    """Matcher reply is neither a mapping dictionary nor 'No semantic match'."""


class ReplayMiss(GatewayError):
    """Replay endpoint has no fixture for the requested prompt."""


# --- pipeline / report -------------------------------------------------


class DegenerateVariance(AspBenchError):
    """Pearson correlation undefined: a score vector has zero variance."""


class UnknownFigureKind(AspBenchError):
    pass
