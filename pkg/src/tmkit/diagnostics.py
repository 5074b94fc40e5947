"""Shared diagnostic records used by every parser and validator in the kit.

A Diagnostic pins a stable machine-readable code to a human message and a
location.  Locations are either a (line, column) span into source text or a
path-like string ("arcs[3]", "Customer/Card") for checks that run on built
structures after parsing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class SourceSpan:
    line: int  # 1-based
    col: int   # 1-based

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    severity: str = ERROR
    span: Optional[SourceSpan] = None
    path: Optional[str] = None

    @property
    def is_error(self) -> bool:
        return self.severity == ERROR

    def location(self) -> str:
        if self.span is not None:
            return str(self.span)
        return self.path or "-"

    def sort_key(self):
        # Span-bearing diagnostics sort by position; structural ones sort
        # after them by path, then code, so output order is deterministic.
        if self.span is not None:
            return (0, self.span.line, self.span.col, self.code, self.message)
        return (1, 0, 0, self.path or "", self.code + self.message)

    def render(self) -> str:
        return f"{self.severity}[{self.code}] {self.location()}: {self.message}"


def sort_diagnostics(diags: list[Diagnostic]) -> list[Diagnostic]:
    return sorted(diags, key=Diagnostic.sort_key)


def has_errors(diags: list[Diagnostic]) -> bool:
    return any(d.is_error for d in diags)


class TmError(Exception):
    """Raised by operations that cannot return a value, carrying a code."""

    def __init__(self, code: str, message: str, path: Optional[str] = None):
        super().__init__(f"[{code}] {message}")
        self.code = code
        self.message = message
        self.path = path

    def as_diagnostic(self, path: Optional[str] = None) -> Diagnostic:
        return Diagnostic(code=self.code, message=self.message, path=path or self.path)


@dataclass
class ParseResult:
    """Outcome of a total parse: a value or a non-empty diagnostic list."""

    value: object = None
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.value is not None and not has_errors(self.diagnostics)

    def unwrap(self):
        if self.value is None or has_errors(self.diagnostics):
            first = next(d for d in self.diagnostics if d.is_error)
            raise TmError(first.code, f"{first.location()}: {first.message}")
        return self.value
