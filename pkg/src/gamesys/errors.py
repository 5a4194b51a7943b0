"""Exception types shared across the package."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str  # "error" | "warning"
    line: int
    column: int
    message: str
    symbol: str | None = None

    def __str__(self) -> str:
        where = f"{self.line}:{self.column}"
        sym = f" [{self.symbol}]" if self.symbol else ""
        return f"{where}: {self.severity}: {self.message}{sym}"


class GameSystemError(Exception):
    """Base class for every error raised by gamesys."""


class DescriptionError(GameSystemError):
    """A game description could not be parsed or validated."""

    def __init__(self, diagnostics: list[ParseDiagnostic] | str):
        if isinstance(diagnostics, str):
            diagnostics = [ParseDiagnostic("error", 0, 0, diagnostics)]
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


class ActionRangeError(GameSystemError):
    """An action write produced a value the track does not declare."""


class EvaluationError(GameSystemError):
    """A ludemic function or bracket expression could not be evaluated."""


class IncompleteSystemError(GameSystemError):
    """The system leaves C, L or Omega undefined where play needs it."""


class ResourceLimitError(GameSystemError):
    """A node, state or pass cap was exceeded."""


class SearchCapExceeded(GameSystemError):
    """A backtracking search ran past its branch-visit cap."""

    def __init__(self, cap: int, what: str = "search"):
        self.cap = cap
        super().__init__(f"{what} exceeded cap of {cap} branch visits")


class PreconditionError(GameSystemError):
    """A reduction was asked to act on a subtree that does not qualify."""


class IllegalDecisionError(GameSystemError):
    """A decider returned a decision outside the legal set."""
