"""Slicing on the final value of `_time`.

Every timing increment defines `_time`, so the backward closure from the
criterion keeps all TIC statements, the control structure they sit
under, whatever feeds those conditions, and every call on the way (a
callee's increments only run if the call runs).  What falls away is pure
value computation: assignments nobody branches on, return values nobody
reads, and the nondeterministic input draws that fed only those.  The
removals are exact, not approximate: the sliced program's final `_time`
equals the original's on every input.

Two statement shapes are trimmed rather than dropped so the result stays
a legal program:

  * a call argument whose parameter the (sliced) callee never reads
    becomes the literal 0; the declaration behind an unread array
    argument is kept, but its element fills are not;
  * a `return` whose value nobody consumes returns the literal 0 (the
    statement itself stays: leaving a function early is control flow).
"""
from __future__ import annotations

from ..diag import E_UNSUPPORTED, fail
from ..minic import ast as A
from ..minic.callgraph import call_graph
from ..minic.typecheck import check_program
from .pdg import CRIT, Pdg


def _closure(roots: set[str], needs: dict[str, set[str]]) -> set[str]:
    seen = set(roots)
    work = list(roots)
    while work:
        n = work.pop()
        for m in needs.get(n, ()):
            if m not in seen:
                seen.add(m)
                work.append(m)
    return seen


def _calls_in(s: A.Stmt) -> list[A.Call]:
    return [n for n in A.walk(s) if isinstance(n, A.Call)]


class _Slicer:
    def __init__(self, p: A.Program, g: Pdg):
        self.p = p
        self.g = g
        cg = call_graph(p)
        root = p.driver or p.entry
        self.reach = cg.reachable_from(root) if root else {f.name for f in p.functions}
        self.mark = self._marks()

    def _marks(self) -> set[str]:
        needs = self.g.needs()
        roots = {n for n in self.g.seeds
                 if n == CRIT or self.g.nodes[n].fn in self.reach}
        mark = _closure(roots, needs)
        # Legality fixpoint: a kept call passing an array the callee never
        # reads still needs that array declared (though not filled).
        decl_of = {
            (fn.name, st.decl.name): st.nid
            for fn in self.p.functions
            for st in A.walk(fn) if isinstance(st, A.DeclStmt)}
        while True:
            forced: set[str] = set()
            for fn in self.p.functions:
                if fn.name not in self.reach:
                    continue
                for st in A.walk(fn):
                    if not isinstance(st, A.Stmt) or st.nid not in mark:
                        continue
                    for c in _calls_in(st):
                        callee = self.p.function(c.name)
                        for i, (arg, param) in enumerate(zip(c.args, callee.params)):
                            if not isinstance(param.vtype, A.ArrayType):
                                continue
                            if f"arg:{c.nid}:{i}" in mark:
                                continue
                            d = decl_of.get((fn.name, arg.name))
                            if d is not None and d not in mark:
                                forced.add(d)
            if not forced:
                return mark
            mark = _closure(mark | forced, needs)

    # ---- output assembly -------------------------------------------------

    def run(self) -> A.Program:
        out = self.p.clone()
        out.functions = [fn for fn in out.functions if fn.name in self.reach]
        for fn in out.functions:
            fn.body = self._body(fn.body, fn.name)
        if out.driver:
            drv = out.function(out.driver)
            survivors = {
                s.target.name if isinstance(s.target, A.VarRef) else s.target.base.name
                for s in A.walk(drv)
                if isinstance(s, A.Assign) and isinstance(s.value, A.NondetExpr)}
            out.hardened = [g for g in out.hardened if g in survivors]
        check_program(out, allow_instrumentation=True)
        return out

    def _body(self, stmts: list[A.Stmt], fname: str) -> list[A.Stmt]:
        out: list[A.Stmt] = []
        for s in stmts:
            if s.nid not in self.mark:
                continue
            if isinstance(s, A.If):
                s.then_body = self._body(s.then_body, fname)
                s.else_body = self._body(s.else_body, fname)
            elif isinstance(s, A.While):
                s.body = self._body(s.body, fname)
            elif isinstance(s, A.For):
                if s.init is not None and s.init.nid not in self.mark:
                    s.init = None
                if s.step is not None and s.step.nid not in self.mark:
                    s.step = None
                s.body = self._body(s.body, fname)
            self._trim_args(s)
            if (isinstance(s, A.Return) and s.value is not None
                    and f"ret:{fname}" not in self.mark
                    and not _calls_in(s)):
                s.value = A.IntLit(0, nid=A.synth_id(s.nid, "slice-ret"),
                                   loc=s.loc)
            out.append(s)
        return out

    def _trim_args(self, s: A.Stmt) -> None:
        for c in _calls_in(s):
            callee = self.p.function(c.name)
            for i, (arg, param) in enumerate(zip(c.args, callee.params)):
                if f"arg:{c.nid}:{i}" in self.mark:
                    continue
                if isinstance(param.vtype, A.ArrayType):
                    continue
                if any(isinstance(x, A.Call) for x in A.walk(arg)):
                    continue
                if isinstance(arg, A.IntLit):
                    continue
                c.args[i] = A.IntLit(0, nid=A.synth_id(c.nid, "slice-arg", i),
                                     loc=arg.loc)


def slice_time(p: A.Program, g: Pdg) -> A.Program:
    """The sub-program of `p` that determines the final value of `_time`."""
    if not p.instrumented:
        raise fail(E_UNSUPPORTED, "slicing criterion requires an instrumented program")
    return _Slicer(p, g).run()
