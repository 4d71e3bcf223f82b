"""Static call graph: adjacency, per-edge call-site counts, topological order.

MiniC forbids recursion; any cycle (including self-calls) is E_RECURSION.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..diag import E_RECURSION, fail
from . import ast as A


@dataclass
class CallGraph:
    # caller -> callee -> number of static call sites
    edges: dict[str, dict[str, int]] = field(default_factory=dict)
    # callees first (safe order for bottom-up summaries)
    topo_order: list[str] = field(default_factory=list)

    def callees(self, fn: str) -> list[str]:
        return sorted(self.edges.get(fn, {}))

    def reachable_from(self, entry: str) -> set[str]:
        seen: set[str] = set()
        work = [entry]
        while work:
            f = work.pop()
            if f in seen:
                continue
            seen.add(f)
            work.extend(self.edges.get(f, {}))
        return seen


def call_graph(prog: A.Program) -> CallGraph:
    g = CallGraph()
    for fn in prog.functions:
        counts: dict[str, int] = {}
        for n in A.walk(fn):
            if isinstance(n, A.Call):
                counts[n.name] = counts.get(n.name, 0) + 1
        g.edges[fn.name] = counts

    # Kahn's algorithm over reversed edges: emit functions whose callees are done.
    remaining = {f.name for f in prog.functions}
    done: set[str] = set()
    order: list[str] = []
    while remaining:
        progress = False
        for name in sorted(remaining):
            if all(c in done for c in g.edges.get(name, {})):
                order.append(name)
                done.add(name)
                remaining.discard(name)
                progress = True
                break
        if not progress:
            stuck = ", ".join(sorted(remaining))
            fn = prog.function(sorted(remaining)[0])
            raise fail(E_RECURSION, f"recursive call cycle among: {stuck}", fn.loc)
    g.topo_order = order
    return g
