"""Verification oracle: batched `_time` bound checking with counterexamples.

The built-in engine explores the driver-closed program symbolically and
answers whole assertion batches from one cached exploration; exported C
lets external bounded checkers answer the same batches, and a portfolio
merges both with deterministic priority.
"""
from .engine import (BuiltinChecker, Exploration, Path, check, explore,
                     DEFAULT_ENUM_LIMIT)
from .export import export_checkable, insert_batch
from .external import ExternalChecker, Portfolio, portfolio_checker, run_external
from .types import (FALSIFIED, GE, LE, UNKNOWN, VERIFIED, Assertion,
                    AssertionBatch, CheckBudget, Counterexample, Outcome,
                    UnwindSpec, Verdict)

__all__ = [
    "Assertion",
    "AssertionBatch",
    "BuiltinChecker",
    "CheckBudget",
    "Counterexample",
    "DEFAULT_ENUM_LIMIT",
    "Exploration",
    "ExternalChecker",
    "FALSIFIED",
    "GE",
    "LE",
    "Outcome",
    "Path",
    "Portfolio",
    "UNKNOWN",
    "UnwindSpec",
    "VERIFIED",
    "Verdict",
    "check",
    "explore",
    "export_checkable",
    "insert_batch",
    "portfolio_checker",
    "run_external",
]
