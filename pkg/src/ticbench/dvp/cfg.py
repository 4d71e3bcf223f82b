"""Timed control-flow graph over DVP code, and structural WCET bounds.

Blocks are maximal: a block's cycle cost is the sum of its non-control
instruction costs; all control-transfer cost lives on edges (taken and
not-taken branch costs, jump, call, return).  Simulated cycle counts
decompose exactly into visited block costs plus traversed edge costs.

The structural bound walks the loop nesting innermost-first.  Each loop
collapses into its head: with N = maximum head entries (body executions
plus the final exit test for top-tested loops), one traversal costs

    (N - 1) * (longest head-to-backedge path + backedge cost)
  + longest head-to-exit path + exit edge cost

taking the worst exit.  Calls contribute call + callee summary + return
on the call-to-return-site edge; the call graph is acyclic by
construction.  Helper loops carry their own bounds; user loops take
bounds keyed by the loop condition's node id, and a missing bound is a
hard error (E_BOUND / E_HELPER_UNBOUNDED), never a silent guess.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..diag import E_BOUND, E_HELPER_UNBOUNDED, E_RECURSION, fail
from ..target import BRANCH_OPS
from .isa import MachineFunction, MachineProgram

_CONTROL = set(BRANCH_OPS) | {"JMP", "CALL", "RET"}


@dataclass
class Block:
    id: str
    func: str
    start: int
    end: int  # exclusive, terminator included
    cycles: int
    term: str  # branch | jump | call | ret | fall
    term_op: str
    node_ids: list[str]
    line: int


@dataclass
class Edge:
    src: str
    dst: str
    kind: str  # taken | fallthrough | jump | call | ret | fall
    cycles: int


@dataclass
class TimedCfg:
    blocks: dict[str, Block]
    edges: list[Edge]
    entry_of: dict[str, str]
    starts: dict[str, dict[int, str]] = field(default_factory=dict)

    def function_blocks(self, fn: str) -> list[Block]:
        return sorted((b for b in self.blocks.values() if b.func == fn),
                      key=lambda b: b.start)

    def out_edges(self, block_id: str) -> list[Edge]:
        return [e for e in self.edges if e.src == block_id]


def _leaders(mf: MachineFunction) -> list[int]:
    leaders = {0}
    for i, ins in enumerate(mf.code):
        if ins.op in ("JMP",) or ins.op in BRANCH_OPS:
            target = ins.args[-1] if ins.op != "JMP" else ins.args[0]
            leaders.add(target)
        if ins.op in _CONTROL and i + 1 < len(mf.code):
            leaders.add(i + 1)
    return sorted(leaders)


def _intra_succs(mf: MachineFunction, start: int, end: int) -> list[int]:
    last = mf.code[end - 1]
    if last.op in BRANCH_OPS:
        out = [last.args[2]]
        if end < len(mf.code):
            out.append(end)
        return out
    if last.op == "JMP":
        return [last.args[0]]
    if last.op == "RET":
        return []
    return [end] if end < len(mf.code) else []  # CALL or plain fall


def build_cfg(m: MachineProgram) -> TimedCfg:
    table = m.config.table
    blocks: dict[str, Block] = {}
    edges: list[Edge] = []
    entry_of: dict[str, str] = {}
    starts: dict[str, dict[int, str]] = {}
    # callee -> list of return-site block ids, resolved after all functions
    pending_rets: dict[str, list[str]] = {}
    ret_blocks: dict[str, list[str]] = {}

    for fn in m.functions.values():
        leaders = _leaders(fn)
        bounds = list(zip(leaders, leaders[1:] + [len(fn.code)]))
        # keep only blocks reachable from the function entry
        reach: set[int] = set()
        work = [0]
        span = {s: e for s, e in bounds}
        while work:
            s = work.pop()
            if s in reach:
                continue
            reach.add(s)
            work.extend(_intra_succs(fn, s, span[s]))
        spans = [(s, e) for s, e in bounds if s in reach]
        # maximality: fold a fall-through block into its unique successor
        # when that successor has no other predecessor
        pred_count: dict[int, int] = {}
        for s, e in spans:
            for t in _intra_succs(fn, s, e):
                pred_count[t] = pred_count.get(t, 0) + 1
        merged = True
        while merged:
            merged = False
            for i, (s, e) in enumerate(spans[:-1]):
                last = fn.code[e - 1]
                nxt = spans[i + 1][0]
                if (last.op not in _CONTROL and nxt == e
                        and pred_count.get(nxt, 0) == 1):
                    spans[i] = (s, spans[i + 1][1])
                    del spans[i + 1]
                    merged = True
                    break

        fn_starts: dict[int, str] = {}
        for s, e in spans:
            bid = f"{fn.name}@{s}"
            fn_starts[s] = bid
            last = fn.code[e - 1]
            if last.op in BRANCH_OPS:
                term, term_op, body_end = "branch", last.op, e - 1
            elif last.op == "JMP":
                term, term_op, body_end = "jump", "JMP", e - 1
            elif last.op == "CALL":
                term, term_op, body_end = "call", "CALL", e - 1
            elif last.op == "RET":
                term, term_op, body_end = "ret", "RET", e - 1
            else:
                term, term_op, body_end = "fall", "", e
            cycles = sum(table.cost(fn.code[i].op) for i in range(s, body_end))
            nodes: list[str] = []
            for i in range(s, e):
                nid = fn.code[i].node
                if nid and (not nodes or nodes[-1] != nid) and nid not in nodes:
                    nodes.append(nid)
            line = fn.code[s].loc.line if fn.code[s].loc else 0
            blocks[bid] = Block(bid, fn.name, s, e, cycles, term, term_op, nodes, line)
            ret_blocks.setdefault(fn.name, [])
            if term == "ret":
                ret_blocks[fn.name].append(bid)

        for s, e in spans:
            bid = fn_starts[s]
            last = fn.code[e - 1]
            if last.op in BRANCH_OPS:
                taken, nottaken = table.branch_cost(last.op)
                edges.append(Edge(bid, fn_starts[last.args[2]], "taken", taken))
                if e in fn_starts:
                    edges.append(Edge(bid, fn_starts[e], "fallthrough", nottaken))
            elif last.op == "JMP":
                edges.append(Edge(bid, fn_starts[last.args[0]], "jump", table.cost("JMP")))
            elif last.op == "CALL":
                callee = last.args[0]
                edges.append(Edge(bid, f"{callee}@0", "call", table.call))
                if e in fn_starts:
                    pending_rets.setdefault(callee, []).append(fn_starts[e])
            elif last.op == "RET":
                pass
            elif e in fn_starts:
                edges.append(Edge(bid, fn_starts[e], "fall", 0))
        entry_of[fn.name] = f"{fn.name}@0"
        starts[fn.name] = fn_starts

    for callee, sites in pending_rets.items():
        for rb in ret_blocks.get(callee, []):
            for site in sites:
                edges.append(Edge(rb, site, "ret", m.config.table.ret))
    return TimedCfg(blocks, edges, entry_of, starts)


# ---------------------------------------------------------------- longest path


def _dominators(nodes: list[str], succs: dict[str, list[str]], entry: str) -> dict[str, set[str]]:
    preds: dict[str, list[str]] = {n: [] for n in nodes}
    for n in nodes:
        for s in succs[n]:
            preds[s].append(n)
    dom = {n: set(nodes) for n in nodes}
    dom[entry] = {entry}
    changed = True
    while changed:
        changed = False
        for n in nodes:
            if n == entry:
                continue
            ps = [dom[p] for p in preds[n]]
            new = set.intersection(*ps) | {n} if ps else {n}
            if new != dom[n]:
                dom[n] = new
                changed = True
    return dom


def _toposort(nodes: set[str], adj: dict[str, list[tuple[str, int]]]) -> list[str]:
    indeg = {n: 0 for n in nodes}
    for n in nodes:
        for d, _ in adj.get(n, []):
            if d in nodes:
                indeg[d] += 1
    order, work = [], [n for n in nodes if indeg[n] == 0]
    while work:
        n = work.pop()
        order.append(n)
        for d, _ in adj.get(n, []):
            if d in nodes:
                indeg[d] -= 1
                if indeg[d] == 0:
                    work.append(d)
    return order


def _longest_from(
    src: str, nodes: set[str], adj: dict[str, list[tuple[str, int]]],
    cost: dict[str, int],
) -> dict[str, int]:
    """Longest path sums (node costs inclusive) from src over a DAG subset."""
    order = _toposort(nodes, adj)
    if len(order) != len(nodes):
        raise fail(E_BOUND, "irreducible control flow in structural bound")
    lp = {n: None for n in nodes}
    lp[src] = cost[src]
    for n in order:
        if lp[n] is None:
            continue
        for d, w in adj.get(n, []):
            if d in nodes:
                cand = lp[n] + w + cost[d]
                if lp[d] is None or cand > lp[d]:
                    lp[d] = cand
    return {n: v for n, v in lp.items() if v is not None}


def longest_path(
    cfg: TimedCfg, m: MachineProgram, fn_name: str,
    bounds: dict[str, int], summaries: dict[str, int],
) -> int:
    """Worst-case cycles through one function, excluding its final return edge."""
    table = m.config.table
    mf = m.functions[fn_name]
    fblocks = cfg.function_blocks(fn_name)
    nodes = [b.id for b in fblocks]
    cost = {b.id: b.cycles for b in fblocks}
    adj: dict[str, list[tuple[str, int]]] = {n: [] for n in nodes}
    for e in cfg.edges:
        if e.src not in cost:
            continue
        if e.kind == "call":
            callee = e.dst.split("@", 1)[0]
            site = cfg.starts[fn_name].get(cfg.blocks[e.src].end)
            if site is not None:
                adj[e.src].append((site, table.call + summaries[callee] + table.ret))
        elif e.kind != "ret" and e.dst in cost:
            adj[e.src].append((e.dst, e.cycles))

    entry = cfg.entry_of[fn_name]
    succ_ids = {n: [d for d, _ in adj[n]] for n in nodes}
    dom = _dominators(nodes, succ_ids, entry)
    backedges = [(u, h) for u in nodes for h in succ_ids[u] if h in dom[u]]
    loops: dict[str, set[str]] = {}
    for u, h in backedges:
        body = {h}
        work = [u]
        while work:
            n = work.pop()
            if n in body:
                continue
            body.add(n)
            for p in nodes:
                if n in succ_ids[p]:
                    work.append(p)
        loops.setdefault(h, set()).update(body)

    removed: set[str] = set()
    for h in sorted(loops, key=lambda x: len(loops[x])):
        body = loops[h] - removed
        n_entries = _loop_bound(cfg, mf, fn_name, h, bounds)
        # every in-body edge into the head is a back edge; dropping them
        # leaves the per-iteration DAG
        sub = {u: [(d, w) for d, w in adj[u] if d in body and d != h]
               for u in body}
        lp = _longest_from(h, body, sub, cost)
        iter_cost = 0
        for u, bh in backedges:
            if bh == h and u in lp:
                for d, w in adj[u]:
                    if d == h:
                        iter_cost = max(iter_cost, lp[u] + w)
        out: list[tuple[str, int]] = []
        for u in body:
            if u not in lp:
                continue
            for d, w in adj[u]:
                if d not in body and d not in removed:
                    out.append((d, (n_entries - 1) * iter_cost + lp[u] + w))
        removed |= body - {h}
        cost[h] = 0
        adj[h] = out
        for u in list(adj):
            if u in removed:
                adj[u] = []

    live = set(nodes) - removed
    lp = _longest_from(entry, live, adj, cost)
    best = None
    for b in fblocks:
        if b.term == "ret" and b.id in lp:
            best = lp[b.id] if best is None else max(best, lp[b.id])
    if best is None:
        raise fail(E_BOUND, f"no return path found in {fn_name!r}")
    return best


def _loop_bound(
    cfg: TimedCfg, mf: MachineFunction, fn_name: str, head: str, bounds: dict[str, int]
) -> int:
    start = cfg.blocks[head].start
    if mf.is_helper:
        if start not in mf.loop_bounds:
            raise fail(E_HELPER_UNBOUNDED,
                       f"helper {fn_name!r} has a loop without a static bound")
        return max(1, mf.loop_bounds[start])
    for key in (head, *cfg.blocks[head].node_ids):
        if key in bounds:
            return max(1, bounds[key])
    raise fail(
        E_BOUND,
        f"no iteration bound for the loop at {fn_name}@{start} "
        f"(line {cfg.blocks[head].line}); supply one keyed by the loop "
        f"condition's node id",
    )


def _machine_callgraph(m: MachineProgram) -> dict[str, set[str]]:
    g: dict[str, set[str]] = {name: set() for name in m.functions}
    for name, mf in m.functions.items():
        for ins in mf.code:
            if ins.op == "CALL":
                g[name].add(ins.args[0])
    return g


def structural_wcet(
    m: MachineProgram, entry: str, bounds: dict[str, int] | None = None,
    cfg: TimedCfg | None = None,
) -> int:
    """Input-independent worst-case cycle bound for `entry`, including the
    final return edge (matching what simulate() counts)."""
    if cfg is None:
        cfg = build_cfg(m)
    bounds = bounds or {}
    g = _machine_callgraph(m)
    order: list[str] = []
    seen: set[str] = set()

    def visit(f: str, stack: tuple[str, ...]) -> None:
        if f in stack:
            raise fail(E_RECURSION, f"recursive call cycle through {f!r}")
        if f in seen:
            return
        for c in sorted(g[f]):
            visit(c, stack + (f,))
        seen.add(f)
        order.append(f)

    visit(entry, ())
    summaries: dict[str, int] = {}
    for f in order:
        summaries[f] = longest_path(cfg, m, f, bounds, summaries)
    return summaries[entry] + m.config.table.ret


def helper_summary(m: MachineProgram, helper: str, cfg: TimedCfg | None = None) -> int:
    """Cycles a caller charges for one worst-case helper call, excluding the
    call edge (charged at the call site) but including the return edge."""
    if cfg is None:
        cfg = build_cfg(m)
    g = _machine_callgraph(m)
    summaries: dict[str, int] = {}

    def solve(f: str) -> int:
        if f not in summaries:
            for c in sorted(g[f]):
                solve(c)
            summaries[f] = longest_path(cfg, m, f, {}, summaries)
        return summaries[f]

    return solve(helper) + m.config.table.ret
