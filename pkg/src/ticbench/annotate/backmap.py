"""Timing instrumentation and the machine-to-source back-map.

`instrument` compiles nothing itself: it takes an already-compiled machine
program plus its timed CFG and rewrites the *source* so that a `_time`
accumulator advances by exactly the cycles the processor would spend.  Each
inserted `_time += K;` (a TIC) materializes one back-map entry; the entry
records which machine block the cycles came from and which source
statements that block covers.

Placement invariants, which the equality oracle (interpreted `_time` ==
simulated cycles, per input) depends on:

  * A TIC fires exactly as often as its machine block executes.  Position
    within a straight-line run is free; we pick positions that read well.
  * A loop condition block runs once more than the body.  It becomes two
    entries with the same covered node: a `block` entry at the top of the
    body charging cost + not-taken edge, and an `exit` entry after the
    loop charging cost + taken edge.  A `break` reaches the after-loop
    point without that final condition evaluation, so on break-exit paths
    `_time` exceeds the machine by exactly the exit entry's amount; this
    is the one non-summary source of (sound, bounded) over-approximation.
    A `return` inside the loop leaves the function before the exit TIC
    and stays exact.
  * An `if` condition block becomes a `block` entry before the statement
    charging cost + the cheaper edge, plus, when the two edge costs
    differ, an `edge` entry for the difference at the head of the more
    expensive side (an `else` arm is synthesized if needed).
  * A call into a runtime helper adds a `summary` entry directly after the
    statement containing the call; its cycles are the helper's whole
    execution including its final return.  The call edge itself is charged
    by the block that issues the CALL.  Calls into user functions add no
    summary: the callee's own TICs account for its time.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..diag import Loc, fail, E_INTERNAL
from ..minic import ast as A
from ..minic.typecheck import check_program
from ..dvp.cfg import TimedCfg, Block, build_cfg, helper_summary
from ..dvp.isa import MachineProgram


@dataclass
class MapEntry:
    """One unit of accounted time and where it lives on both sides."""

    id: str
    kind: str  # block | exit | edge | summary
    cycles: int
    block: str  # machine block id the cycles were lifted from
    covered: list[str] = field(default_factory=list)  # source statement ids
    anchors: list[str] = field(default_factory=list)  # ids of the TIC stmts
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "id": self.id, "kind": self.kind, "cycles": self.cycles,
            "block": self.block, "covered": list(self.covered),
            "anchors": list(self.anchors), "detail": dict(self.detail),
        }

    @staticmethod
    def from_dict(d: dict) -> "MapEntry":
        return MapEntry(d["id"], d["kind"], d["cycles"], d["block"],
                        list(d["covered"]), list(d["anchors"]),
                        dict(d.get("detail", {})))


@dataclass
class BackMap:
    entries: dict[str, MapEntry] = field(default_factory=dict)

    def add(self, e: MapEntry) -> MapEntry:
        if e.id in self.entries:
            raise fail(E_INTERNAL, f"duplicate back-map entry {e.id}")
        self.entries[e.id] = e
        return e

    def for_block(self, block_id: str) -> list[MapEntry]:
        return [e for e in self.entries.values() if e.block == block_id]

    def to_dict(self) -> dict:
        return {"entries": [e.to_dict() for e in self.entries.values()]}

    @staticmethod
    def from_dict(d: dict) -> "BackMap":
        bm = BackMap()
        for ed in d["entries"]:
            bm.add(MapEntry.from_dict(ed))
        return bm


# ---------------------------------------------------------------- positions

class _Positions:
    """Where each statement of one function sits, for TIC insertion.

    Positions are (list, index) pairs into the cloned AST's statement
    lists.  Loop-owned satellites get redirected to list positions: a
    `for` init anchors before the loop statement, a step at the end of
    the body (it runs together with the body tail in every iteration).
    """

    def __init__(self, fn: A.FuncDef):
        self.fn = fn
        self.stmt_pos: dict[str, tuple[list, int]] = {}
        self.loop_of_cond: dict[str, A.Stmt] = {}
        self.if_of_cond: dict[str, A.If] = {}
        self.node: dict[str, A.Node] = {fn.nid: fn}
        self._walk(fn.body)

    def _walk(self, body: list[A.Stmt]) -> None:
        for i, s in enumerate(body):
            self.stmt_pos[s.nid] = (body, i)
            self.node[s.nid] = s
            if isinstance(s, A.If):
                self.if_of_cond[s.cond.nid] = s
                self.stmt_pos[s.cond.nid] = (body, i)
                self._walk(s.then_body)
                self._walk(s.else_body)
            elif isinstance(s, A.While):
                self.loop_of_cond[s.cond.nid] = s
                self._walk(s.body)
            elif isinstance(s, A.For):
                self.loop_of_cond[s.cond.nid] = s
                if s.init is not None:
                    self.stmt_pos[s.init.nid] = (body, i)
                    self.node[s.init.nid] = s.init
                if s.step is not None:
                    self.stmt_pos[s.step.nid] = (s.body, len(s.body))
                    self.node[s.step.nid] = s.step
                self._walk(s.body)

    def before(self, nid: str) -> tuple[list, int]:
        return self.stmt_pos[nid]

    def after(self, nid: str) -> tuple[list, int]:
        lst, i = self.stmt_pos[nid]
        return lst, i + 1

    def body_end(self, owner: A.Node) -> tuple[list, int]:
        if isinstance(owner, A.FuncDef):
            return owner.body, len(owner.body)
        if isinstance(owner, (A.While, A.For)):
            return owner.body, len(owner.body)
        if isinstance(owner, A.If):
            return owner.then_body, len(owner.then_body)
        raise fail(E_INTERNAL, f"no body for {owner.kind}")


# ---------------------------------------------------------------- builder

class _Inserter:
    """Collects TIC insertions, then applies them without index drift."""

    def __init__(self) -> None:
        self._pending: list[tuple[int, list, int, int, A.Stmt]] = []
        self._seq = 0

    def put(self, pos: tuple[list, int], stmt: A.Stmt) -> None:
        lst, idx = pos
        self._pending.append((id(lst), lst, idx, self._seq, stmt))
        self._seq += 1

    def apply(self) -> None:
        by_list: dict[int, tuple[list, list[tuple[int, int, A.Stmt]]]] = {}
        for key, lst, idx, seq, stmt in self._pending:
            by_list.setdefault(key, (lst, []))[1].append((idx, seq, stmt))
        for lst, items in by_list.values():
            items.sort(key=lambda t: (t[0], t[1]))
            # Highest index first so earlier insertions keep their offsets.
            i = len(items)
            while i > 0:
                j = i
                while j > 0 and items[j - 1][0] == items[i - 1][0]:
                    j -= 1
                idx = items[i - 1][0]
                lst[idx:idx] = [t[2] for t in items[j:i]]
                i = j


def _make_tic(entry: MapEntry, cycles: int, loc: Loc, ordinal: int = 0) -> A.TicStmt:
    nid = A.synth_id(entry.id, "tic", ordinal)
    amt = A.IntLit(cycles, nid=A.synth_id(entry.id, "tic-amount", ordinal), loc=loc)
    tic = A.TicStmt(amount=amt, entry=entry.id, nid=nid, loc=loc)
    entry.anchors.append(nid)
    return tic


class _FnInstrumenter:
    def __init__(self, src: A.FuncDef, blocks: list[Block], m: MachineProgram,
                 cfg: TimedCfg, summaries: dict[str, int],
                 bm: BackMap, ins: _Inserter):
        self.src = src
        self.blocks = blocks
        self.m = m
        self.mf = m.function(src.name)
        self.table = m.config.table
        self.cfg = cfg
        self.summaries = summaries
        self.bm = bm
        self.ins = ins
        self.pos = _Positions(src)
        # Return sites: block start -> node id of the statement whose call
        # transfers there, so post-call cycles can anchor after it.
        self.retsite: dict[int, str] = {}
        for b in blocks:
            if b.term == "call":
                self.retsite[b.end] = self.mf.code[b.end - 1].node

    # -- placement ----------------------------------------------------

    def _anchor(self, b: Block, cond: bool = False) -> tuple[list, int]:
        covered = b.node_ids
        if not covered:
            return self.pos.body_end(self.src)
        last = self.pos.node.get(covered[-1])
        if isinstance(last, A.Break):
            return self.pos.before(covered[-1])
        if isinstance(last, A.Return):
            return self.pos.before(covered[-1])
        if isinstance(last, (A.While, A.For)):
            return self.pos.body_end(last)
        if isinstance(last, A.FuncDef):
            return self.pos.body_end(last)
        if isinstance(last, A.If) and len(covered) == 1 and b.term == "jump":
            # The jump-to-join block of an empty `then` arm.
            return self.pos.body_end(last)
        # A block resuming after a call is charged after the calling
        # statement, except when it finishes evaluating a condition: the
        # charge must precede the branch it feeds on every outcome.
        if not cond:
            site = self.retsite.get(b.start)
            if site is not None and covered[0] == site:
                return self.pos.after(site)
        return self.pos.before(covered[0])

    def _loc_of(self, b: Block) -> Loc:
        ins0 = self.mf.code[b.start]
        return ins0.loc if ins0.loc is not None else Loc(self.src.loc.file)

    # -- per-block entries ---------------------------------------------

    def run(self) -> None:
        for b in self.blocks:
            if b.term == "branch":
                self._branch_block(b)
            else:
                self._plain_block(b)
            if b.term == "call":
                callee = self.mf.code[b.end - 1].args[0]
                if callee in self.summaries:
                    self._summary(b, callee)

    def _plain_block(self, b: Block) -> None:
        extra = {"fall": 0, "jump": self.table.cost("JMP"),
                 "call": self.table.call, "ret": self.table.ret}[b.term]
        e = self.bm.add(MapEntry(f"b:{b.id}", "block", b.cycles + extra, b.id,
                                 covered=list(b.node_ids)))
        self.ins.put(self._anchor(b), _make_tic(e, e.cycles, self._loc_of(b)))

    def _branch_block(self, b: Block) -> None:
        taken, nottaken = self.table.branch_cost(b.term_op)
        cond_nid = self.mf.code[b.end - 1].node
        loop = self.pos.loop_of_cond.get(cond_nid)
        if loop is not None:
            # Taken always exits the loop; fallthrough enters the body.
            e = self.bm.add(MapEntry(f"b:{b.id}", "block", b.cycles + nottaken,
                                     b.id, covered=list(b.node_ids)))
            self.ins.put((loop.body, 0), _make_tic(e, e.cycles, self._loc_of(b)))
            x = self.bm.add(MapEntry(f"x:{b.id}", "exit", b.cycles + taken,
                                     b.id, covered=list(b.node_ids),
                                     detail={"loop": loop.nid}))
            self.ins.put(self.pos.after(loop.nid), _make_tic(x, x.cycles, self._loc_of(b)))
            return
        iff = self.pos.if_of_cond.get(cond_nid)
        if iff is None:
            raise fail(E_INTERNAL, f"branch in {b.id} not owned by a condition")
        base = min(taken, nottaken)
        e = self.bm.add(MapEntry(f"b:{b.id}", "block", b.cycles + base, b.id,
                                 covered=list(b.node_ids)))
        self.ins.put(self._anchor(b, cond=True),
                     _make_tic(e, e.cycles, self._loc_of(b)))
        if taken != nottaken:
            # Charge the difference only on the more expensive arm; taken
            # goes to the else side, fallthrough to the then side.
            side, arm = (("else", iff.else_body) if taken > nottaken
                         else ("then", iff.then_body))
            d = self.bm.add(MapEntry(f"d:{b.id}", "edge", abs(taken - nottaken),
                                     b.id, covered=[cond_nid],
                                     detail={"if": iff.nid, "arm": side}))
            self.ins.put((arm, 0), _make_tic(d, d.cycles, self._loc_of(b)))

    def _summary(self, b: Block, callee: str) -> None:
        stmt_nid = self.mf.code[b.end - 1].node
        e = self.bm.add(MapEntry(f"s:{b.id}", "summary", self.summaries[callee],
                                 b.id, covered=[stmt_nid],
                                 detail={"callee": callee}))
        # Nothing may follow a return or break, so summaries for calls
        # inside one are charged just before it (same path, same total).
        stmt = self.pos.node[stmt_nid]
        where = (self.pos.before(stmt_nid)
                 if isinstance(stmt, (A.Return, A.Break))
                 else self.pos.after(stmt_nid))
        self.ins.put(where, _make_tic(e, e.cycles, self._loc_of(b)))


# ---------------------------------------------------------------- API

def instrument(prog: A.Program, m: MachineProgram,
               cfg: Optional[TimedCfg] = None) -> tuple[A.Program, BackMap]:
    """Rewrite `prog` with TIC statements accounting every machine cycle.

    Returns a new, type-checked program (the input is untouched) and the
    back-map tying each TIC to its machine block.  `m` must be the result
    of compiling `prog` unmodified; node ids are the correspondence.
    """
    if cfg is None:
        cfg = build_cfg(m)
    out = prog.clone()
    bm = BackMap()
    ins = _Inserter()
    summaries = {mf.name: helper_summary(m, mf.name, cfg)
                 for mf in m.functions.values() if mf.is_helper}
    for mf in m.functions.values():
        if mf.is_helper:
            continue
        blocks = sorted(cfg.function_blocks(mf.name), key=lambda b: b.start)
        _FnInstrumenter(out.function(mf.name), blocks, m, cfg,
                        summaries, bm, ins).run()
    ins.apply()
    tv = A.VarDecl(
        name=A.TIME_VAR, vtype=A.U64, storage="global",
        init=A.IntLit(0, nid=A.synth_id("prog", "time-init", 0)),
        nid=A.synth_id("prog", "time-global", 0))
    out.globals.insert(0, tv)
    check_program(out, allow_instrumentation=True)
    return out, bm


def verify_coverage(prog: A.Program, bm: BackMap) -> list[str]:
    """Node ids of executable statements no back-map entry covers.

    A statement counts as covered when it or any of its descendants
    appears in some entry's covered list (conditions stand in for their
    `if`/loop statements).  Declarations without initializers generate no
    code and are exempt.  An empty result is the invariant instrumented
    programs must satisfy.
    """
    covered: set[str] = set()
    for e in bm.entries.values():
        covered.update(e.covered)

    missing: list[str] = []

    def stmt_covered(s: A.Stmt) -> bool:
        if s.nid in covered:
            return True
        return any(n.nid in covered for n in A.walk(s))

    for fn in prog.functions:
        for n in A.walk(fn):
            if not isinstance(n, A.Stmt):
                continue
            if isinstance(n, (A.TicStmt, A.AssumeStmt, A.AssertStmt)):
                continue
            if isinstance(n, A.DeclStmt) and n.decl.init is None:
                continue
            if not stmt_covered(n):
                missing.append(n.nid)
    return missing
