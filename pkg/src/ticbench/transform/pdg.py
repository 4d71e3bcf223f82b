"""Interprocedural program dependence graph for analysis programs.

Nodes are statements plus a few virtual nodes that make interprocedural
and criterion edges expressible without special-casing the traversal:

  * ``crit``        the value of `_time` at program exit (the slicing
                    criterion); present when the program is instrumented.
  * ``fn:G``        "some statement of G executes"; present when G has at
                    least one call site.  Every statement of G hangs off
                    it by a control edge, and every call site of G feeds
                    it, so keeping any part of G keeps all of its calls.
  * ``ret:G``       G's return value.  It defines the pseudo-variable
                    ``#ret:G`` consumed at call sites that use the call
                    as a value, and it uses whatever G's return
                    expressions read.  Splitting this off the `return`
                    statement lets the slicer keep an early `return`
                    (control flow) while discarding the computation of a
                    value nobody reads.
  * ``arg:C:K``     the K-th argument binding of call node C.  It defines
                    the callee's parameter and uses the argument
                    expression, so an argument's computation is kept
                    exactly when the parameter is read somewhere that
                    matters.

Variable keys are ``fn.name`` for locals and parameters and the bare
name for globals (`_time` included).  Data edges connect every definition
of a key to every use of it, with no kill analysis and no ordering, so
the graph errs toward keeping statements.  Because keys are shared
program-wide and every function body is in the graph, flows through
globals cross call boundaries node to node; call sites need no
read/write summaries.

Control edges run controller -> controlled: structured statements to the
statements in their bodies, function-execution nodes to top-level
statements, and call sites to the callee's ``fn:`` node.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..minic import ast as A
from ..minic.callgraph import call_graph

CRIT = "crit"


@dataclass(frozen=True)
class PdgNode:
    """One dependence-graph node and its def/use footprint."""

    id: str
    kind: str  # statement class name, or criterion|function|return-value|argument
    fn: str  # owning function, "" for the criterion
    defs: frozenset[str] = frozenset()
    uses: frozenset[str] = frozenset()


@dataclass
class Pdg:
    """Dependence graph: nodes, forward data edges, forward control edges.

    `data[n]` holds nodes whose uses are fed by a definition at `n`;
    `control[n]` holds nodes whose execution is governed by `n`.  `seeds`
    are nodes with control effects that any slice must retain (the
    criterion, `break`/`return`, assumptions and assertions, and argument
    bindings whose expressions contain calls).
    """

    nodes: dict[str, PdgNode] = field(default_factory=dict)
    data: dict[str, set[str]] = field(default_factory=dict)
    control: dict[str, set[str]] = field(default_factory=dict)
    seeds: set[str] = field(default_factory=set)

    def needs(self) -> dict[str, set[str]]:
        """Reverse adjacency: keeping a node requires keeping these."""
        out: dict[str, set[str]] = {}
        for src, dsts in list(self.data.items()) + list(self.control.items()):
            for d in dsts:
                out.setdefault(d, set()).add(src)
        return out


def _scan(e: A.Expr, refs: set[str], calls: list[A.Call]) -> None:
    """Collect variable names and calls in `e`; call arguments stay opaque
    (they belong to `arg:` nodes, not to the surrounding statement)."""
    if isinstance(e, A.VarRef):
        refs.add(e.name)
    elif isinstance(e, A.Index):
        refs.add(e.base.name)
        _scan(e.index, refs, calls)
    elif isinstance(e, A.Unary):
        _scan(e.operand, refs, calls)
    elif isinstance(e, A.Binary):
        _scan(e.left, refs, calls)
        _scan(e.right, refs, calls)
    elif isinstance(e, A.Call):
        calls.append(e)


class _Builder:
    def __init__(self, prog: A.Program):
        self.prog = prog
        self.g = Pdg()
        self.cg = call_graph(prog)
        self.locals: dict[str, set[str]] = {}
        for fn in prog.functions:
            names = {p.name for p in fn.params}
            names |= {n.decl.name for n in A.walk(fn) if isinstance(n, A.DeclStmt)}
            self.locals[fn.name] = names
        self.called = {c for fn in prog.functions for c in self.cg.edges[fn.name]}
        # per-node def/use accumulation, folded into frozen nodes at the end
        self.defs: dict[str, set[str]] = {}
        self.uses: dict[str, set[str]] = {}
        self.kinds: dict[str, tuple[str, str]] = {}

    # ---- node assembly ---------------------------------------------------

    def node(self, nid: str, kind: str, fn: str) -> None:
        self.kinds[nid] = (kind, fn)
        self.defs.setdefault(nid, set())
        self.uses.setdefault(nid, set())

    def key(self, fn: str, name: str) -> str:
        return f"{fn}.{name}" if name in self.locals.get(fn, ()) else name

    def control_edge(self, src: str, dst: str) -> None:
        self.g.control.setdefault(src, set()).add(dst)

    def build(self) -> Pdg:
        if self.prog.instrumented:
            self.node(CRIT, "criterion", "")
            self.uses[CRIT].add(A.TIME_VAR)
            self.g.seeds.add(CRIT)
        for fn in self.prog.functions:
            if fn.name in self.called:
                self.node(f"fn:{fn.name}", "function", fn.name)
        for fn in self.prog.functions:
            self.stmts(fn.body, fn, parent=f"fn:{fn.name}")
        self._data_edges()
        for nid, (kind, owner) in self.kinds.items():
            self.g.nodes[nid] = PdgNode(
                nid, kind, owner,
                frozenset(self.defs[nid]), frozenset(self.uses[nid]))
        return self.g

    def _data_edges(self) -> None:
        by_def: dict[str, set[str]] = {}
        by_use: dict[str, set[str]] = {}
        for nid, ks in self.defs.items():
            for k in ks:
                by_def.setdefault(k, set()).add(nid)
        for nid, ks in self.uses.items():
            for k in ks:
                by_use.setdefault(k, set()).add(nid)
        for k, sources in by_def.items():
            sinks = by_use.get(k)
            if not sinks:
                continue
            for s in sources:
                self.g.data.setdefault(s, set()).update(sinks)

    # ---- statements -------------------------------------------------------

    def stmts(self, body: list[A.Stmt], fn: A.FuncDef, parent: str) -> None:
        for s in body:
            self.stmt(s, fn, parent)

    def expr_into(self, e: A.Expr | None, nid: str, fn: A.FuncDef,
                  uses: set[str], discard: bool = False) -> None:
        """Record `e`'s reads into `uses` and expand its calls at `nid`.

        `discard` marks a call whose value the statement throws away (a
        bare call statement); its return value is then not demanded.
        """
        if e is None or isinstance(e, A.NondetExpr):
            return
        refs: set[str] = set()
        calls: list[A.Call] = []
        _scan(e, refs, calls)
        uses.update(self.key(fn.name, r) for r in refs)
        for c in calls:
            callee = self.prog.function(c.name)
            self.control_edge(nid, f"fn:{c.name}")
            if not (discard and c is e):
                uses.add(f"#ret:{c.name}")
            for i, (arg, param) in enumerate(zip(c.args, callee.params)):
                anid = f"arg:{c.nid}:{i}"
                self.node(anid, "argument", fn.name)
                self.defs[anid].add(f"{c.name}.{param.name}")
                self.expr_into(arg, nid, fn, self.uses[anid])
                if any(isinstance(x, A.Call) for x in A.walk(arg)):
                    self.g.seeds.add(anid)

    def stmt(self, s: A.Stmt, fn: A.FuncDef, parent: str) -> None:
        nid = s.nid
        self.node(nid, s.kind, fn.name)
        if parent in self.kinds:
            self.control_edge(parent, nid)
        F = fn.name
        if isinstance(s, A.DeclStmt):
            self.defs[nid].add(self.key(F, s.decl.name))
            items = s.decl.init if isinstance(s.decl.init, list) else [s.decl.init]
            for it in items:
                if isinstance(it, A.Expr):
                    self.expr_into(it, nid, fn, self.uses[nid])
        elif isinstance(s, A.Assign):
            t = s.target
            base = t.name if isinstance(t, A.VarRef) else t.base.name
            self.defs[nid].add(self.key(F, base))
            if isinstance(t, A.Index):
                self.expr_into(t.index, nid, fn, self.uses[nid])
            if s.op != "=":
                self.uses[nid].add(self.key(F, base))
            self.expr_into(s.value, nid, fn, self.uses[nid])
        elif isinstance(s, A.ExprStmt):
            self.expr_into(s.expr, nid, fn, self.uses[nid], discard=True)
        elif isinstance(s, A.If):
            self.expr_into(s.cond, nid, fn, self.uses[nid])
            self.stmts(s.then_body, fn, parent=nid)
            self.stmts(s.else_body, fn, parent=nid)
        elif isinstance(s, A.While):
            self.expr_into(s.cond, nid, fn, self.uses[nid])
            self.stmts(s.body, fn, parent=nid)
        elif isinstance(s, A.For):
            self.expr_into(s.cond, nid, fn, self.uses[nid])
            if s.init is not None:
                self.stmt(s.init, fn, parent=nid)
            if s.step is not None:
                self.stmt(s.step, fn, parent=nid)
            self.stmts(s.body, fn, parent=nid)
        elif isinstance(s, A.Break):
            self.g.seeds.add(nid)
        elif isinstance(s, A.Return):
            self.g.seeds.add(nid)
            if s.value is not None:
                rid = f"ret:{F}"
                if rid not in self.kinds:
                    self.node(rid, "return-value", F)
                    self.defs[rid].add(f"#ret:{F}")
                self.expr_into(s.value, nid, fn, self.uses[rid])
        elif isinstance(s, A.TicStmt):
            self.defs[nid].add(A.TIME_VAR)
            self.uses[nid].add(A.TIME_VAR)
            self.expr_into(s.amount, nid, fn, self.uses[nid])
        elif isinstance(s, (A.AssumeStmt, A.AssertStmt)):
            self.g.seeds.add(nid)
            self.expr_into(s.cond, nid, fn, self.uses[nid])


def build_pdg(p: A.Program) -> Pdg:
    """Dependence graph of `p`, conservative in every uncertain case."""
    return _Builder(p).build()
