"""Diagnostics: stable error codes and the file:line:col reporting format.

Every user-facing failure in the toolchain is a Diagnostic with a stable
code, formatted as ``file:line:col: CODE message``.  Library entry points
raise DiagnosticError; the CLI prints the carried diagnostics and exits
nonzero.
"""
from __future__ import annotations

from dataclasses import dataclass, field

# Stable codes.  Frontend / static:
E_SYNTAX = "E_SYNTAX"
E_TYPE = "E_TYPE"
E_REDEF = "E_REDEF"
E_UNDEF = "E_UNDEF"
E_RESERVED = "E_RESERVED"
E_CONST = "E_CONST"
E_UNSUPPORTED = "E_UNSUPPORTED"
E_RECURSION = "E_RECURSION"
# Backend / mapping:
E_FRAME = "E_FRAME"
E_INDIRECT = "E_INDIRECT"
E_HELPER_UNBOUNDED = "E_HELPER_UNBOUNDED"
E_UNMAPPED = "E_UNMAPPED"
E_DRIVER = "E_DRIVER"
# Execution:
E_MEMFAULT = "E_MEMFAULT"
E_BUDGET = "E_BUDGET"
E_TIME_OVERFLOW = "E_TIME_OVERFLOW"
# Checking / search:
E_UNWIND_NEEDED = "E_UNWIND_NEEDED"
E_UNWIND_INSUFFICIENT = "E_UNWIND_INSUFFICIENT"
E_BOUND = "E_BOUND"
E_CHECKER = "E_CHECKER"
# Replay:
E_DIVERGED = "E_DIVERGED"
E_INCOMPLETE_CE = "E_INCOMPLETE_CE"
# Toolchain invariant violations (always a bug, never a user error):
E_INTERNAL = "E_INTERNAL"


@dataclass(frozen=True)
class Loc:
    """Source location (1-based line/col); file may be '<synth>' for generated code."""

    file: str = "<unknown>"
    line: int = 0
    col: int = 0

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    loc: Loc = field(default_factory=Loc)

    def __str__(self) -> str:
        return f"{self.loc}: {self.code} {self.message}"


class DiagnosticError(Exception):
    """Raised for any diagnosable failure; carries one or more diagnostics."""

    def __init__(self, *diags: Diagnostic):
        self.diagnostics = list(diags)
        super().__init__("; ".join(str(d) for d in diags))

    @property
    def code(self) -> str:
        return self.diagnostics[0].code if self.diagnostics else "E_UNKNOWN"


def fail(code: str, message: str, loc: Loc | None = None) -> "DiagnosticError":
    return DiagnosticError(Diagnostic(code, message, loc or Loc()))
