"""Adapter for running exported C through an external bounded checker.

The command template receives {file}, {unwind} and {timeout}; the tool's
stdout/stderr are scraped for one SUCCESS/FAILURE token per assertion
(in batch emission order) and optional `name=value` counterexample
lines.  Anything unparseable degrades to Unknown rather than guessing,
and any counterexample we forward is first replayed on the reference
interpreter so its witnessed time is trustworthy.
"""
from __future__ import annotations

import re
import shlex
import subprocess
import tempfile
from pathlib import Path
from typing import Optional, Sequence

from ..diag import E_CHECKER
from ..interp import Interp, map_injector
from ..minic import ast as A
from .engine import BuiltinChecker
from .export import export_checkable
from .types import (FALSIFIED, UNKNOWN, VERIFIED, AssertionBatch, CheckBudget,
                    Counterexample, Outcome, UnwindSpec, Verdict)

_RESULT = re.compile(r"\b(SUCCESS|FAILURE)\b")
_BINDING = re.compile(r"^\s*([A-Za-z_][\w.\[\]]*)\s*=\s*(-?\d+)\s*$")

DEFAULT_TIMEOUT = 60.0


def _nondet_sites(prog: A.Program) -> list[str]:
    return [n.site for n in A.walk(prog) if isinstance(n, A.NondetExpr)]


def _resolve_site(name: str, sites: list[str]) -> Optional[str]:
    """Unique match of a tool-reported variable to an input site: exact,
    or a suffix after a dot (tools usually drop the function qualifier)."""
    if name in sites:
        return name
    hits = [s for s in sites if s.endswith("." + name)]
    if len(hits) == 1:
        return hits[0]
    return None


class ExternalChecker:
    """One command-template tool exposed through the oracle interface."""

    def __init__(self, cmd: str, prog: A.Program,
                 u: Optional[UnwindSpec] = None,
                 budget: Optional[CheckBudget] = None):
        self.cmd = cmd
        self.prog = prog
        self.u = u or UnwindSpec()
        self.budget = budget or CheckBudget()
        self._interp: Optional[Interp] = None

    def _unwind_arg(self) -> int:
        depths = list(self.u.depths.values())
        if self.u.default_depth is not None:
            depths.append(self.u.default_depth)
        return max(depths) if depths else 1

    def _replay(self, assignments: Sequence[tuple[str, int, int]]
                ) -> Optional[int]:
        if self._interp is None:
            self._interp = Interp(self.prog)
        inj = map_injector({(s, k): v for s, k, v in assignments})
        res = self._interp.run(injector=inj, budget=10 ** 8)
        if res.assume_violated or res.assert_failed is not None:
            return None
        return res.time

    def check(self, batch: AssertionBatch) -> Verdict:
        text = export_checkable(self.prog, batch)
        timeout = self.budget.seconds if self.budget.seconds is not None \
            else DEFAULT_TIMEOUT
        v = Verdict()
        with tempfile.TemporaryDirectory(prefix="ticbench-ext-") as td:
            path = Path(td) / "unit.c"
            path.write_text(text)
            argv = shlex.split(self.cmd.format(
                file=str(path), unwind=self._unwind_arg(),
                timeout=int(max(1, timeout))))
            try:
                proc = subprocess.run(
                    argv, capture_output=True, text=True,
                    timeout=timeout + 5.0)
            except subprocess.TimeoutExpired:
                for a in batch:
                    v.outcomes[a.aid] = Outcome(UNKNOWN, reason="timeout")
                v.errors.append((E_CHECKER, "external checker timed out"))
                return v.normalized(batch)
            except OSError as exc:
                for a in batch:
                    v.outcomes[a.aid] = Outcome(UNKNOWN, reason="undecided-path")
                v.errors.append((E_CHECKER, f"external checker failed to run: {exc}"))
                return v.normalized(batch)
        out = proc.stdout + "\n" + proc.stderr
        tokens = _RESULT.findall(out)
        bindings: dict[str, int] = {}
        witnessed: Optional[int] = None
        for line in out.splitlines():
            m = _BINDING.match(line)
            if not m:
                continue
            name, val = m.group(1), int(m.group(2))
            if name == A.TIME_VAR:
                witnessed = val
            else:
                bindings[name] = val
        ce = self._counterexample(bindings, witnessed)
        if len(tokens) < len(batch):
            v.errors.append((E_CHECKER,
                             f"tool reported {len(tokens)} results for "
                             f"{len(batch)} assertions"))
        for k, a in enumerate(batch):
            tok = tokens[k] if k < len(tokens) else None
            if tok == "SUCCESS":
                v.outcomes[a.aid] = Outcome(VERIFIED)
            elif tok == "FAILURE":
                good = ce if ce is not None and _beats(a, ce.witness_time) else None
                if good is not None:
                    good = Counterexample(good.assignments, a.aid,
                                          good.witness_time, good.trail)
                v.outcomes[a.aid] = Outcome(FALSIFIED, good)
            else:
                v.outcomes[a.aid] = Outcome(UNKNOWN, reason="undecided-path")
        v.stats["external"] = {"cmd": argv[0] if argv else "",
                               "returncode": proc.returncode}
        return v.normalized(batch)

    def _counterexample(self, bindings: dict[str, int],
                        witnessed: Optional[int]) -> Optional[Counterexample]:
        if not bindings:
            return None
        sites = _nondet_sites(self.prog)
        assignments = []
        for s in sites:  # program draw order
            for name, val in bindings.items():
                if _resolve_site(name, sites) == s:
                    assignments.append((s, 0, val))
                    break
        if not assignments:
            return None
        y = self._replay(assignments)
        if y is None or (witnessed is not None and y != witnessed):
            return None  # does not reproduce; report the failure bare
        return Counterexample(tuple(assignments), "", y)


def _beats(a, y: int) -> bool:
    return y > a.bound if a.comparator == "<=" else y < a.bound


def run_external(cmd: str, prog: A.Program, batch: AssertionBatch,
                 budget: Optional[CheckBudget] = None,
                 u: Optional[UnwindSpec] = None) -> Verdict:
    """One-shot form of ExternalChecker for a single batch."""
    return ExternalChecker(cmd, prog, u, budget).check(batch)


class Portfolio:
    """Run several oracles over the same batch and merge per assertion.

    Workers are consulted in their given order and the first conclusive
    (Verified or Falsified) outcome per assertion wins, so placing the
    built-in engine first gives it tie priority; the merged verdict does
    not depend on relative tool speed.
    """

    def __init__(self, workers: Sequence):
        if not workers:
            raise ValueError("portfolio needs at least one worker")
        self.workers = list(workers)

    def check(self, batch: AssertionBatch) -> Verdict:
        verdicts = [w.check(batch) for w in self.workers]
        merged = Verdict()
        for w in verdicts:
            merged.errors.extend(w.errors)
        merged.stats["workers"] = len(verdicts)
        for a in batch:
            chosen: Optional[Outcome] = None
            for w in verdicts:
                o = w.outcomes.get(a.aid)
                if o is not None and o.status != UNKNOWN:
                    chosen = o
                    break
            if chosen is None:
                chosen = verdicts[0].outcomes.get(
                    a.aid, Outcome(UNKNOWN, reason="undecided-path"))
            merged.outcomes[a.aid] = chosen
        return merged.normalized(batch)


def portfolio_checker(prog: A.Program, cmds: Sequence[str],
                      u: Optional[UnwindSpec] = None,
                      budget: Optional[CheckBudget] = None) -> Portfolio:
    """Built-in engine first, then one external worker per command."""
    workers: list = [BuiltinChecker(prog, u, budget)]
    workers += [ExternalChecker(c, prog, u, budget) for c in cmds]
    return Portfolio(workers)
