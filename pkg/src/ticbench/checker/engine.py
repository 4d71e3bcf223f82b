"""Built-in bounded verification engine.

Decides batches of `_time` bound claims on a driver-closed program by
forward symbolic exploration of every path.  Each path runs in one of
two precision modes:

  * narrow: the feasible input assignments are kept as an explicit row
    set and filtered through every branch constraint, so per-path times
    are exact.  Rows are only materialized for inputs a constraint (or
    array index, or the final time expression) actually mentions, and a
    fresh input is clipped by its first constraint before the row set is
    extended, so small-domain programs enumerate exactly.
  * wide: per-input intervals (with a coarse stride for simple
    congruences) refined from single-input constraints; branches that
    interval reasoning cannot decide fork optimistically and the path is
    marked approximate.  Approximate paths over-state their time range,
    which keeps upper-bound verdicts sound; a claimed violation is only
    reported after an interpreter replay of a concrete witness confirms
    it, so falsification is never speculative.

A path starts narrow and spills to wide when the row set would exceed
the enumeration cap (2^20 rows by default, configurable).

Branch forks are deterministic (then-branch first).  Loops either
terminate structurally (constant-bound counter heads run concretely) or
consume unwinding depth from an UnwindSpec; with a loop's exhaustion
flag set (the default), exceeding its depth is recorded and blocks
Verified outcomes instead of silently truncating the state space.

Value semantics mirror the reference interpreter operation for
operation (same conversion, comparison and wrap rules), and every
counterexample is validated by replaying it through that interpreter, so
a Falsified verdict always carries a reproducible witness.
"""
from __future__ import annotations

import random
import time as _clock
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from ..diag import (E_CHECKER, E_MEMFAULT, E_TIME_OVERFLOW,
                    E_UNWIND_INSUFFICIENT, E_UNWIND_NEEDED, fail)
from ..interp import Interp, map_injector
from ..minic import ast as A
from ..minic.callgraph import call_graph
from ..minic.typecheck import fold_const, promote, usual_type
from ..semantics import binop, compare, shift, unop, wrap
from ..transform.accel import _recognize, const_trip
from .types import (FALSIFIED, GE, LE, UNKNOWN, VERIFIED, AssertionBatch,
                    CheckBudget, Counterexample, Outcome, UnwindSpec, Verdict)

NARROW = "narrow"
WIDE = "wide"

_U64_LIMIT = 1 << 64
_BRK = object()

DEFAULT_ENUM_LIMIT = 1 << 20


# ---------------------------------------------------------------- symbolic values

class Sx:
    """A symbolic value: an operation DAG over input atoms.

    Builders fold concrete subtrees away, so a value is an Sx exactly
    when it mentions at least one atom.  `t` is the node's value type
    (None for python-int time sums and comparisons).
    """

    __slots__ = ("op", "t", "args", "atoms", "_fn")

    def __init__(self, op: str, t: Optional[A.IType], args: tuple):
        self.op = op
        self.t = t
        self.args = args
        ats: set[int] = set()
        if op == "atom":
            ats.add(args[0])
        else:
            for a in args:
                if isinstance(a, Sx):
                    ats |= a.atoms
        self.atoms = frozenset(ats)
        self._fn: Optional[Callable] = None

    def __repr__(self) -> str:  # debugging aid only
        return f"Sx({self.op}, {self.args!r})"


Val = Union[int, Sx]


def sx_atom(idx: int, t: A.IType) -> Sx:
    return Sx("atom", t, (idx,))


def _preserves(src: Optional[A.IType], dst: A.IType) -> bool:
    """True when every canonical value of src is canonical in dst."""
    if src is None:
        return False
    if src.bits == dst.bits and src.signed == dst.signed:
        return True
    if src.bits < dst.bits:
        return dst.signed or not src.signed
    return False


def sx_conv(v: Val, src: Optional[A.IType], dst: A.IType) -> Val:
    if isinstance(v, int):
        return wrap(v, dst)
    if _preserves(src, dst) or _preserves(v.t, dst):
        return v
    return Sx("conv", dst, (v,))


def sx_bin(op: str, l: Val, r: Val, t: A.IType) -> Val:
    if isinstance(l, int) and isinstance(r, int):
        return binop(op, l, r, t)
    if op == "+":
        if isinstance(r, int):
            if r == 0:
                return l
            # ((x + c1) + c2) -> (x + (c1 + c2)); modular addition associates
            if isinstance(l, Sx) and l.op == "bin" and l.args[0] == "+" \
                    and l.t == t and isinstance(l.args[2], int):
                return sx_bin("+", l.args[1], binop("+", l.args[2], r, t), t)
        elif isinstance(l, int) and l == 0:
            return r
    if op == "*" and (r == 1 if isinstance(r, int) else False):
        return l
    return Sx("bin", t, (op, l, r))


def sx_cmp(op: str, l: Val, r: Val) -> Val:
    if isinstance(l, int) and isinstance(r, int):
        return compare(op, l, r)
    return Sx("cmp", None, (op, l, r))


def sx_shift(op: str, l: Val, r: Val, t: A.IType) -> Val:
    if isinstance(l, int) and isinstance(r, int):
        return shift(op, l, r, t)
    return Sx("shift", t, (op, l, r))


def sx_un(op: str, v: Val, t: A.IType) -> Val:
    if isinstance(v, int):
        return unop(op, v, t)
    return Sx("un", t, (op, v))


def sx_not(v: Val) -> Val:
    if isinstance(v, int):
        return int(v == 0)
    return Sx("not", None, (v,))


def sx_time_add(t: Val, v: Val) -> Val:
    """Plain integer addition for the 64-bit time counter (checked at its
    limit separately, so no wrap node is needed)."""
    if isinstance(t, int) and isinstance(v, int):
        return t + v
    if isinstance(v, int):
        if isinstance(t, Sx) and t.op == "pyadd" and isinstance(t.args[1], int):
            return Sx("pyadd", None, (t.args[0], t.args[1] + v))
        return Sx("pyadd", None, (t, v))
    if isinstance(t, int):
        return Sx("pyadd", None, (v, t))
    return Sx("pyadd", None, (t, v))


# -- compilation to row predicates/evaluators --------------------------------

_ENV_BASE = {"B": binop, "H": shift, "U": unop, "W": wrap}


def _src(v: Val, types: list) -> str:
    if isinstance(v, int):
        return repr(v)
    op = v.op
    if op == "atom":
        return f"v[{v.args[0]}]"
    if op == "conv":
        return f"W({_src(v.args[0], types)},T[{_tidx(types, v.t)}])"
    if op == "pyadd":
        return f"({_src(v.args[0], types)}+{_src(v.args[1], types)})"
    if op == "bin":
        o, l, r = v.args
        return (f"B({o!r},{_src(l, types)},{_src(r, types)},"
                f"T[{_tidx(types, v.t)}])")
    if op == "cmp":
        o, l, r = v.args
        return f"(({_src(l, types)}){o}({_src(r, types)}))"
    if op == "shift":
        o, l, r = v.args
        return (f"H({o!r},{_src(l, types)},{_src(r, types)},"
                f"T[{_tidx(types, v.t)}])")
    if op == "un":
        o, a = v.args
        return f"U({o!r},{_src(a, types)},T[{_tidx(types, v.t)}])"
    if op == "not":
        return f"(({_src(v.args[0], types)})==0)"
    raise fail(E_CHECKER, f"cannot compile symbolic op {op}")


def _tidx(types: list, t: A.IType) -> int:
    for i, x in enumerate(types):
        if x is t:
            return i
    types.append(t)
    return len(types) - 1


def compiled(v: Sx) -> Callable:
    """Compile the DAG into `lambda v: ...` over a full atom-value vector."""
    if v._fn is None:
        types: list[A.IType] = []
        src = _src(v, types)
        env = dict(_ENV_BASE)
        env["T"] = tuple(types)
        v._fn = eval(f"lambda v: {src}", env)  # noqa: S307 - our own codegen
    return v._fn


# ---------------------------------------------------------------- domains

@dataclass(frozen=True)
class Dom:
    """Strided interval: the values lo, lo+stride, ..., up to hi."""

    lo: int
    hi: int
    stride: int = 1

    def size(self) -> int:
        if self.hi < self.lo:
            return 0
        return (self.hi - self.lo) // self.stride + 1

    def values(self) -> range:
        return range(self.lo, self.hi + 1, self.stride)

    def clamp_hi(self, hi: int) -> "Dom":
        if hi >= self.hi:
            return self
        n = (hi - self.lo) // self.stride if hi >= self.lo else -1
        return Dom(self.lo, self.lo + n * self.stride, self.stride)

    def clamp_lo(self, lo: int) -> "Dom":
        if lo <= self.lo:
            return self
        k = -(-(lo - self.lo) // self.stride)
        return Dom(self.lo + k * self.stride, self.hi, self.stride)

    def mid(self) -> int:
        m = self.lo + (self.hi - self.lo) // 2
        return self.clamp_hi(m).hi if self.size() else self.lo


def type_dom(t: A.IType) -> Dom:
    return Dom(t.min, t.max, 1)


def _iv(v: Val, doms: dict[int, Dom]) -> tuple[int, int]:
    """Interval bounds of a value under per-atom domains (over-approximate)."""
    if isinstance(v, int):
        return (v, v)
    op = v.op
    if op == "atom":
        d = doms.get(v.args[0])
        if d is not None:
            return (d.lo, d.hi)
        return (v.t.min, v.t.max)
    if op == "conv":
        lo, hi = _iv(v.args[0], doms)
        t = v.t
        if t.min <= lo and hi <= t.max:
            return (lo, hi)
        return (t.min, t.max)
    if op == "pyadd":
        a, b = (_iv(x, doms) for x in v.args)
        return (a[0] + b[0], a[1] + b[1])
    if op == "bin":
        o, l, r = v.args
        t = v.t
        (llo, lhi), (rlo, rhi) = _iv(l, doms), _iv(r, doms)
        lo = hi = None
        if o == "+":
            lo, hi = llo + rlo, lhi + rhi
        elif o == "-":
            lo, hi = llo - rhi, lhi - rlo
        elif o == "*":
            c = (llo * rlo, llo * rhi, lhi * rlo, lhi * rhi)
            lo, hi = min(c), max(c)
        elif o == "/" and rlo == rhi and rlo > 0 and llo >= 0:
            lo, hi = llo // rlo, lhi // rlo
        elif o == "%" and rlo == rhi and rlo > 0 and llo >= 0:
            if lhi < rlo:
                return (llo, lhi)
            return (0, rlo - 1)
        elif o == "&" and rlo == rhi and rlo >= 0 and llo >= 0:
            return (0, min(lhi, rlo))
        if lo is not None and t.min <= lo and hi <= t.max:
            return (lo, hi)
        return (t.min, t.max)
    if op == "cmp":
        o, l, r = v.args
        (llo, lhi), (rlo, rhi) = _iv(l, doms), _iv(r, doms)
        if o in ("<", "<="):
            if compare(o, lhi, rlo):
                return (1, 1)
            if not compare(o, llo, rhi):
                return (0, 0)
            return (0, 1)
        if o in (">", ">="):
            if compare(o, llo, rhi):
                return (1, 1)
            if not compare(o, lhi, rlo):
                return (0, 0)
            return (0, 1)
        if o == "==":
            if llo == lhi == rlo == rhi:
                return (1, 1)
            if lhi < rlo or rhi < llo:
                return (0, 0)
            return (0, 1)
        if o == "!=":
            if lhi < rlo or rhi < llo:
                return (1, 1)
            if llo == lhi == rlo == rhi:
                return (0, 0)
            return (0, 1)
    if op == "not":
        lo, hi = _iv(v.args[0], doms)
        if lo > 0 or hi < 0:
            return (0, 0)
        if lo == 0 and hi == 0:
            return (1, 1)
        return (0, 1)
    if op == "un":
        o, a = v.args
        t = v.t
        lo, hi = _iv(a, doms)
        if o == "-":
            lo, hi = -hi, -lo
        elif o == "~":
            lo, hi = ~hi, ~lo
        else:
            if lo > 0 or hi < 0:
                return (0, 0)
            if lo == 0 and hi == 0:
                return (1, 1)
            return (0, 1)
        if t.min <= lo and hi <= t.max:
            return (lo, hi)
        return (t.min, t.max)
    if op == "shift":
        o, a, c = v.args
        t = v.t
        if isinstance(c, int):
            cc = c & (t.bits - 1)
            alo, ahi = _iv(a, doms)
            if o == ">>":
                return (alo >> cc, ahi >> cc)
            lo, hi = alo << cc, ahi << cc
            if t.min <= lo and hi <= t.max:
                return (lo, hi)
        return (t.min, t.max)
    raise fail(E_CHECKER, f"cannot bound symbolic op {op}")


_NEGATE = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}


def _as_cmp(cond: Sx, want: bool) -> tuple[str, Val, Val]:
    """Normalize a branch condition to a comparison that must hold."""
    if cond.op == "not":
        inner = cond.args[0]
        if isinstance(inner, Sx):
            return _as_cmp(inner, not want)
        return ("==", inner, 0) if want else ("!=", inner, 0)
    if cond.op == "cmp":
        o, l, r = cond.args
        return (o, l, r) if want else (_NEGATE[o], l, r)
    return ("!=", cond, 0) if want else ("==", cond, 0)


def _strip_atom(v: Val, doms: dict[int, Dom]) -> Optional[Sx]:
    """Unwrap value-preserving conversions down to a bare atom, if any."""
    while isinstance(v, Sx) and v.op == "conv":
        inner = v.args[0]
        if not isinstance(inner, Sx):
            return None
        lo, hi = _iv(inner, doms)
        if not (v.t.min <= lo and hi <= v.t.max):
            return None
        v = inner
    if isinstance(v, Sx) and v.op == "atom":
        return v
    return None


def _congruence(v: Sx) -> Optional[tuple[Sx, int]]:
    """Match (atom % c) or (atom & m with m+1 a power of two); -> (atom, stride)."""
    if v.op != "bin":
        return None
    o, l, r = v.args
    if not (isinstance(r, int) and isinstance(l, Sx) and l.op == "atom"):
        return None
    if o == "%" and r > 0:
        return (l, r)
    if o == "&" and r >= 0 and ((r + 1) & r) == 0:
        return (l, r + 1)
    return None


def refine(cond: Sx, want: bool, doms: dict[int, Dom]) -> tuple[Optional[dict[int, Dom]], bool]:
    """Restrict atom domains so `cond == want` can hold.

    Returns (new doms or None when unchanged, exact).  `exact` means the
    restricted product contains exactly the satisfying assignments, so
    the caller may treat the branch split as decided rather than
    optimistic.  A restriction to an empty domain proves infeasibility
    even when inexact (the superset shrank to nothing).
    """
    op, l, r = _as_cmp(cond, want)

    def clamp(atom: Sx, other_lo: int, other_hi: int, o: str) -> tuple[Optional[dict[int, Dom]], bool]:
        j = atom.args[0]
        d = doms.get(j) or type_dom(atom.t)
        point = other_lo == other_hi
        if o == "<":
            nd = d.clamp_hi(other_hi - 1)
        elif o == "<=":
            nd = d.clamp_hi(other_hi)
        elif o == ">":
            nd = d.clamp_lo(other_lo + 1)
        elif o == ">=":
            nd = d.clamp_lo(other_lo)
        elif o == "==":
            # a point target clamps to {c} (or nothing, if unaligned);
            # a ranged target only bounds the superset
            nd = d.clamp_lo(other_lo).clamp_hi(other_hi)
        elif o == "!=":
            if point and other_lo == d.lo:
                nd = Dom(d.lo + d.stride, d.hi, d.stride)
            elif point and other_lo == d.hi:
                nd = Dom(d.lo, d.hi - d.stride, d.stride)
            else:
                return (None, False)
        else:
            return (None, False)
        out = dict(doms)
        out[j] = nd
        return (out, point)

    for side, other, o in ((l, r, op), (r, l, _FLIP[op])):
        if not isinstance(side, Sx):
            continue
        atom = _strip_atom(side, doms)
        if atom is not None and (not isinstance(other, Sx) or not other.atoms & side.atoms):
            olo, ohi = _iv(other, doms)
            return clamp(atom, olo, ohi, o)
        cong = _congruence(side) if isinstance(side, Sx) else None
        if cong is not None and o == "==" and isinstance(other, int) and other == 0:
            atom, step = cong
            j = atom.args[0]
            d = doms.get(j) or type_dom(atom.t)
            if d.stride == 1 and d.lo >= 0:
                # (x % c) == 0 and (x & (2^k - 1)) == 0 are exact stride facts
                lo = -(-d.lo // step) * step
                hi = (d.hi // step) * step
                out = dict(doms)
                out[j] = Dom(lo, hi, step)
                return (out, True)
    return (None, False)


_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "==", "!=": "!="}


# ---------------------------------------------------------------- machine state

@dataclass(frozen=True)
class Atom:
    """One input draw: its site id, per-site occurrence, and value type.

    Artifacts (site == "") stand for values the wide mode gave up on
    (reads through an undecided array index); they never appear in
    counterexamples.
    """

    site: str
    occ: int
    t: A.IType


class _SymArr:
    __slots__ = ("cells", "base")

    def __init__(self, cells: list, base: str):
        self.cells = cells
        self.base = base


class _Frame:
    __slots__ = ("fn", "vars")

    def __init__(self, fn: str, vars: dict):
        self.fn = fn
        self.vars = vars


class _St:
    """One explorer state: storage, inputs, feasibility knowledge, time."""

    __slots__ = ("G", "frames", "scratch", "time", "mode", "atoms", "rows",
                 "bound", "doms", "pc", "counts", "iters", "trail",
                 "optimistic")

    def __init__(self):
        self.G: dict[str, object] = {}
        self.frames: list[_Frame] = []
        self.scratch: list[_SymArr] = []
        self.time: Val = 0
        self.mode = NARROW
        self.atoms: list[Atom] = []
        self.rows: list[tuple] = [()]
        self.bound: set[int] = set()
        self.doms: dict[int, Dom] = {}
        self.pc: list[tuple[Sx, bool]] = []
        self.counts: dict[str, int] = {}
        self.iters: dict[str, int] = {}
        self.trail: list[str] = []
        self.optimistic = False

    def clone(self) -> "_St":
        n = _St.__new__(_St)
        memo: dict[int, _SymArr] = {}

        def arr(a: _SymArr) -> _SymArr:
            c = memo.get(id(a))
            if c is None:
                c = _SymArr(list(a.cells), a.base)
                memo[id(a)] = c
            return c

        def v(x):
            return arr(x) if isinstance(x, _SymArr) else x

        n.G = {k: v(x) for k, x in self.G.items()}
        n.frames = [_Frame(f.fn, {k: v(x) for k, x in f.vars.items()})
                    for f in self.frames]
        n.scratch = [arr(a) for a in self.scratch]
        n.time = self.time
        n.mode = self.mode
        n.atoms = list(self.atoms)
        n.rows = list(self.rows)
        n.bound = set(self.bound)
        n.doms = dict(self.doms)
        n.pc = list(self.pc)
        n.counts = dict(self.counts)
        n.iters = dict(self.iters)
        n.trail = list(self.trail)
        n.optimistic = self.optimistic
        return n

    def mark(self, note: str) -> None:
        if len(self.trail) < 2048:
            self.trail.append(note)


@dataclass
class Path:
    """One terminal exploration path with its time range and witness data."""

    kind: str  # done | assume | assert | fault
    exact: bool
    lo: int = 0
    hi: int = 0
    time: Val = 0
    atoms: list[Atom] = field(default_factory=list)
    bound: set[int] = field(default_factory=set)
    doms: dict[int, Dom] = field(default_factory=dict)
    pc: list[tuple[Sx, bool]] = field(default_factory=list)
    row_hi: Optional[tuple] = None
    row_lo: Optional[tuple] = None
    trail: tuple[str, ...] = ()
    ret: Optional[Val] = None
    note: str = ""


@dataclass
class Exploration:
    """Everything one exploration learned: the terminal path set plus the
    honesty flags verdict assembly needs (truncation, unwind shortfalls)."""

    paths: list[Path]
    truncated: bool
    timed_out: bool
    mem_out: bool
    insufficient: list[str]
    errors: list[tuple[str, str]]
    stats: dict


class _Stop(Exception):
    pass


# ---------------------------------------------------------------- explorer

class _Explorer:
    def __init__(self, prog: A.Program, u: UnwindSpec, budget: CheckBudget,
                 enum_limit: int):
        if not prog.driver:
            raise fail(E_CHECKER, "program has no driver; close it first")
        self.prog = prog
        self.width = prog.word_width
        self.enum_limit = enum_limit
        self.budget = budget
        self.fns = {f.name: f for f in prog.functions}
        self.locals: dict[str, set[str]] = {}
        for f in prog.functions:
            names = {p.name for p in f.params}
            names |= {n.decl.name for n in A.walk(f) if isinstance(n, A.DeclStmt)}
            self.locals[f.name] = names
        self.bounded, self.depths, self.exhaust, self.loop_names = \
            _scan_loops(prog, u)
        self.paths: list[Path] = []
        self.insufficient: list[str] = []
        self.errors: list[tuple[str, str]] = []
        self.spills = 0
        self.pruned = {"assume": 0, "assert": 0, "fault": 0, "unwind": 0}
        self.steps = 0
        self.deadline = (None if budget.seconds is None
                         else _clock.monotonic() + budget.seconds)
        self.truncated = False
        self.timed_out = False
        self.mem_out = False

    # -- bookkeeping ------------------------------------------------------

    def tick(self) -> None:
        self.steps += 1
        if self.steps > self.budget.max_steps:
            self.timed_out = True
            raise _Stop()
        if self.deadline is not None and (self.steps & 127) == 0 \
                and _clock.monotonic() > self.deadline:
            self.timed_out = True
            raise _Stop()

    def run(self) -> Exploration:
        t0 = _clock.monotonic()
        st = self._initial()
        try:
            for st2, sig in self.run_body([st], self.fns[self.prog.driver].body):
                self._finish(st2, sig)
        except _Stop:
            self.truncated = True
        ins = sorted(set(self.insufficient))
        errors = list(self.errors)
        for label in ins:
            errors.append((E_UNWIND_INSUFFICIENT,
                           f"loop {label} can run past its unwind depth"))
        done = sum(1 for p in self.paths if p.kind == "done")
        stats = {
            "paths": len(self.paths), "done": done, "steps": self.steps,
            "spills": self.spills, "pruned": dict(self.pruned),
            "seconds": round(_clock.monotonic() - t0, 6),
        }
        return Exploration(self.paths, self.truncated or self.mem_out,
                           self.timed_out, self.mem_out, ins, errors, stats)

    def _initial(self) -> _St:
        st = _St()
        for g in self.prog.globals:
            if g.name == A.TIME_VAR:
                continue
            if isinstance(g.vtype, A.ArrayType):
                vals = [0] * g.vtype.length
                if isinstance(g.init, list):
                    for i, e in enumerate(g.init):
                        vals[i] = wrap(_need_const(e), g.vtype.elem)
                st.G[g.name] = _SymArr(vals, base=f"<global>.{g.name}")
            else:
                st.G[g.name] = wrap(_need_const(g.init) if g.init is not None else 0,
                                    g.vtype)
        st.frames.append(_Frame(self.prog.driver, {}))
        return st

    def _finish(self, st: _St, sig) -> None:
        p = Path(kind="done", exact=not st.optimistic, time=st.time,
                 atoms=st.atoms, bound=st.bound, doms=st.doms, pc=st.pc,
                 trail=tuple(st.trail),
                 ret=sig[1] if isinstance(sig, tuple) else None)
        if isinstance(st.time, int):
            p.lo = p.hi = st.time
            if st.mode == NARROW and st.rows:
                p.row_hi = p.row_lo = st.rows[0]
        elif st.mode == NARROW and self._bind(st, st.time, None):
            f = compiled(st.time)
            best = worst = None
            for r in st.rows:
                t = f(r)
                if best is None or t > best[0]:
                    best = (t, r)
                if worst is None or t < worst[0]:
                    worst = (t, r)
            p.hi, p.row_hi = best
            p.lo, p.row_lo = worst
            p.bound = st.bound
        else:
            p.exact = False
            p.lo, p.hi = _iv(st.time, st.doms)
        if p.hi >= _U64_LIMIT:
            self.errors.append((E_TIME_OVERFLOW,
                                "a path's time bound reaches 2^64"))
        self._record(p)

    def _record(self, p: Path) -> None:
        self.paths.append(p)
        if len(self.paths) >= self.budget.max_paths:
            self.mem_out = True
            raise _Stop()

    def _kill(self, st: _St, kind: str, note: str = "") -> None:
        self.pruned[kind] += 1
        if kind in ("assert", "fault"):
            p = Path(kind=kind, exact=not st.optimistic, time=st.time,
                     atoms=st.atoms, bound=st.bound, doms=st.doms, pc=st.pc,
                     trail=tuple(st.trail), note=note)
            lo, hi = (st.time, st.time) if isinstance(st.time, int) \
                else _iv(st.time, st.doms)
            p.lo, p.hi = lo, hi
            self._record(p)

    # -- narrow-mode row machinery ---------------------------------------

    def _new_atom(self, st: _St, site: str, t: A.IType) -> Sx:
        occ = st.counts.get(site, 0)
        st.counts[site] = occ + 1
        idx = len(st.atoms)
        st.atoms.append(Atom(site, occ, t))
        if st.mode == NARROW:
            st.rows = [r + (None,) for r in st.rows]
        return sx_atom(idx, t)

    def _artifact(self, st: _St, t: A.IType) -> Sx:
        idx = len(st.atoms)
        st.atoms.append(Atom("", idx, t))
        if st.mode == NARROW:
            st.rows = [r + (None,) for r in st.rows]
        return sx_atom(idx, t)

    def _spill(self, st: _St) -> None:
        doms: dict[int, Dom] = {}
        for j in st.bound:
            col = [r[j] for r in st.rows]
            doms[j] = Dom(min(col), max(col), 1)
        st.doms = doms
        st.rows = []
        st.bound = set()
        st.mode = WIDE
        st.optimistic = True
        self.spills += 1

    def _bind(self, st: _St, v: Sx, want: Optional[bool]) -> bool:
        """Materialize rows for v's unbound atoms; False when spilled wide."""
        todo = sorted(j for j in v.atoms if j not in st.bound)
        for j in todo:
            dom = type_dom(st.atoms[j].t)
            if want is not None:
                dom = self._bind_restriction(st, v, want, j) or dom
            n = dom.size()
            if n * max(len(st.rows), 1) > self.enum_limit:
                self._spill(st)
                return False
            vals = list(dom.values())
            st.rows = [r[:j] + (x,) + r[j + 1:] for r in st.rows for x in vals]
            st.bound.add(j)
        return True

    def _bind_restriction(self, st: _St, cond: Sx, want: bool,
                          j: int) -> Optional[Dom]:
        """Sound domain pre-clip for atom j from a single constraint, taken
        before the row cross-product so `x = nondet(); assume(x <= small)`
        never materializes the full type range."""
        op, l, r = _as_cmp(cond, want)
        for side, other, o in ((l, r, op), (r, l, _FLIP[op])):
            if not isinstance(side, Sx):
                continue
            atom = _strip_atom(side, {})
            if atom is None or atom.args[0] != j:
                continue
            if isinstance(other, Sx):
                if not other.atoms <= st.bound:
                    return None
                f = compiled(other)
                olo = ohi = None
                for row in st.rows:
                    x = f(row)
                    olo = x if olo is None or x < olo else olo
                    ohi = x if ohi is None or x > ohi else ohi
                if olo is None:
                    return None
            else:
                olo = ohi = other
            d = type_dom(st.atoms[j].t)
            if o == "<":
                return d.clamp_hi(ohi - 1)
            if o == "<=":
                return d.clamp_hi(ohi)
            if o == ">":
                return d.clamp_lo(olo + 1)
            if o == ">=":
                return d.clamp_lo(olo)
            if o == "==":
                return d.clamp_lo(olo).clamp_hi(ohi)
            return None
        return None

    # -- forking ----------------------------------------------------------

    def branch(self, st: _St, cv: Val, note: str) -> list[tuple[_St, bool]]:
        """Split a state on a condition value; then-side first."""
        if isinstance(cv, int):
            return [(st, cv != 0)]
        if st.mode == NARROW and self._bind(st, cv, None):
            f = compiled(cv)
            t_rows, f_rows = [], []
            for r in st.rows:
                (t_rows if f(r) else f_rows).append(r)
            out: list[tuple[_St, bool]] = []
            if t_rows and f_rows:
                s2 = st.clone()
                st.rows = t_rows
                st.pc.append((cv, True))
                st.mark(note + "/T")
                s2.rows = f_rows
                s2.pc.append((cv, False))
                s2.mark(note + "/F")
                return [(st, True), (s2, False)]
            if t_rows:
                st.pc.append((cv, True))
                return [(st, True)]
            st.pc.append((cv, False))
            return [(st, False)]
        # wide
        lo, hi = _iv(cv, st.doms)
        if lo > 0 or hi < 0:
            return [(st, True)]
        if lo == 0 and hi == 0:
            return [(st, False)]
        out = []
        s_else: Optional[_St] = None
        dt, exact_t = refine(cv, True, st.doms)
        de, exact_e = refine(cv, False, st.doms)
        feas_t = dt is None or all(d.size() for d in dt.values())
        feas_e = de is None or all(d.size() for d in de.values())
        if feas_t and feas_e:
            s_else = st.clone()
        if feas_t:
            if dt is not None:
                st.doms = dt
            st.pc.append((cv, True))
            st.mark(note + "/T")
            if not exact_t:
                st.optimistic = True
            out.append((st, True))
        if feas_e:
            se = s_else if s_else is not None else st
            if de is not None:
                se.doms = de
            se.pc.append((cv, False))
            se.mark(note + "/F")
            if not exact_e:
                se.optimistic = True
            out.append((se, False))
        return out

    def constrain(self, st: _St, cv: Val, want: bool) -> Optional[_St]:
        """Keep only executions where cv has the wanted truth (assume)."""
        if isinstance(cv, int):
            return st if (cv != 0) == want else None
        if st.mode == NARROW and self._bind(st, cv, want):
            f = compiled(cv)
            st.rows = [r for r in st.rows if bool(f(r)) == want]
            st.pc.append((cv, want))
            return st if st.rows else None
        lo, hi = _iv(cv, st.doms)
        if hi < 0 or lo > 0:
            truth: Optional[bool] = True
        elif lo == 0 and hi == 0:
            truth = False
        else:
            truth = None
        if truth is not None and truth != want:
            return None
        nd, exact = refine(cv, want, st.doms)
        if nd is not None:
            if not all(d.size() for d in nd.values()):
                return None
            st.doms = nd
        if not exact and truth is None:
            st.optimistic = True
        st.pc.append((cv, want))
        return st

    def concretize(self, st: _St, v: Val) -> list[tuple[_St, Optional[int]]]:
        """All concrete values v can take (forking); None = unresolvable."""
        if isinstance(v, int):
            return [(st, v)]
        if st.mode == NARROW and self._bind(st, v, None):
            f = compiled(v)
            groups: dict[int, list[tuple]] = {}
            for r in st.rows:
                groups.setdefault(f(r), []).append(r)
            items = sorted(groups.items())
            out = []
            for k, (val, rows) in enumerate(items):
                s = st if k == len(items) - 1 else st.clone()
                s.rows = rows
                out.append((s, val))
            return out
        lo, hi = _iv(v, st.doms)
        if lo == hi:
            return [(st, lo)]
        return [(st, None)]

    # -- expression evaluation -------------------------------------------

    def eval(self, st: _St, e: A.Expr) -> list[tuple[_St, Val]]:
        if isinstance(e, A.IntLit):
            return [(st, wrap(e.value, e.ctype))]
        if isinstance(e, A.VarRef):
            return [(st, self._read_var(st, e))]
        if isinstance(e, A.Index):
            return self._read_index(st, e)
        if isinstance(e, A.Unary):
            out = []
            for s1, v in self.eval(st, e.operand):
                if e.op == "!":
                    out.append((s1, sx_not(v)))
                else:
                    out.append((s1, sx_un(e.op, sx_conv(v, e.operand.ctype, e.ctype),
                                          e.ctype)))
            return out
        if isinstance(e, A.Binary):
            return self._eval_binary(st, e)
        if isinstance(e, A.Call):
            return self._eval_call(st, e)
        if isinstance(e, A.NondetExpr):
            return [(st, self._new_atom(st, e.site, e.nondet_type))]
        raise fail(E_CHECKER, f"unexpected expression {e.kind}", e.loc)

    def _read_var(self, st: _St, e: A.VarRef) -> Val:
        name = e.name
        if name == A.TIME_VAR:
            return st.time
        fn = st.frames[-1].fn
        if name in self.locals[fn]:
            vars = st.frames[-1].vars
            v = vars.get(name)
            if v is None:
                v = self._new_atom(st, f"{fn}.{name}", e.ctype)
                vars[name] = v
            return v
        return st.G[name]

    def _arr_of(self, st: _St, base: A.VarRef) -> _SymArr:
        name = base.name
        fn = st.frames[-1].fn
        if name in self.locals[fn]:
            a = st.frames[-1].vars.get(name)
            if a is None:
                raise fail(E_CHECKER, f"array {fn}.{name} read before declaration")
            return a
        return st.G[name]

    def _read_index(self, st: _St, e: A.Index) -> list[tuple[_St, Val]]:
        out = []
        for s1, iv in self.eval(st, e.index):
            a = self._arr_of(s1, e.base)
            for s2, i in self.concretize(s1, iv):
                a2 = self._arr_of(s2, e.base)
                if i is None:
                    # wide mode gave up on the index: havoc the read
                    s2.optimistic = True
                    out.append((s2, self._artifact(s2, e.ctype)))
                    continue
                if not 0 <= i < len(a2.cells):
                    self._kill(s2, "fault", f"index {i} outside [0, {len(a2.cells)})")
                    continue
                v = a2.cells[i]
                if v is None:
                    v = self._new_atom(s2, f"{a2.base}[{i}]", e.ctype)
                    a2.cells[i] = v
                out.append((s2, v))
        return out

    def _eval_binary(self, st: _St, e: A.Binary) -> list[tuple[_St, Val]]:
        op = e.op
        lt, rt = e.left.ctype, e.right.ctype
        out = []
        for s1, l in self.eval(st, e.left):
            for s2, r in self.eval(s1, e.right):
                if op in ("<", "<=", ">", ">=", "==", "!="):
                    u = usual_type(lt, rt, self.width)
                    out.append((s2, sx_cmp(op, sx_conv(l, lt, u),
                                           sx_conv(r, rt, u))))
                elif op in ("<<", ">>"):
                    out.append((s2, sx_shift(op, sx_conv(l, lt, e.ctype), r,
                                             e.ctype)))
                else:
                    out.append((s2, sx_bin(op, sx_conv(l, lt, e.ctype),
                                           sx_conv(r, rt, e.ctype), e.ctype)))
        return out

    def _eval_call(self, st: _St, e: A.Call) -> list[tuple[_St, Val]]:
        fn = self.fns[e.name]
        # plans: per state, the argument values gathered so far; mutable
        # arrays are parked in state scratch so forks re-map them
        mark = len(st.scratch)
        states: list[tuple[_St, list]] = [(st, [])]
        for a, p in zip(e.args, fn.params):
            nxt = []
            for s1, plan in states:
                if isinstance(p.vtype, A.ArrayType):
                    s1.scratch.append(self._arr_of(s1, a))
                    nxt.append((s1, plan + [("arr", len(s1.scratch) - 1)]))
                else:
                    for s2, v in self.eval(s1, a):
                        nxt.append((s2, plan + [("val", sx_conv(v, a.ctype, p.vtype))]))
            states = nxt
        out = []
        for s1, plan in states:
            self.tick()
            vars: dict[str, object] = {}
            for p, (tag, x) in zip(fn.params, plan):
                vars[p.name] = s1.scratch[x] if tag == "arr" else x
            s1.frames.append(_Frame(fn.name, vars))
            for s2, sig in self.run_body([s1], fn.body):
                s2.frames.pop()
                del s2.scratch[mark:]
                out.append((s2, sig[1] if isinstance(sig, tuple) else None))
        return out

    # -- statement execution ----------------------------------------------

    def run_body(self, states: list[_St], stmts: list[A.Stmt]
                 ) -> list[tuple[_St, object]]:
        """Run states through a statement list; (state, signal) per survivor
        where signal is None (fell through), break, or ("R", value)."""
        out: list[tuple[_St, object]] = []
        live = states
        for s in stmts:
            if not live:
                break
            nxt: list[_St] = []
            for st in live:
                for st2, sig in self.exec_stmt(st, s):
                    if sig is None:
                        nxt.append(st2)
                    else:
                        out.append((st2, sig))
            live = nxt
        out.extend((st, None) for st in live)
        return out

    def exec_stmt(self, st: _St, s: A.Stmt) -> list[tuple[_St, object]]:
        self.tick()
        if isinstance(s, A.TicStmt):
            out = []
            for s1, v in self.eval(st, s.amount):
                nt = sx_time_add(s1.time, v)
                if isinstance(nt, int) and nt >= _U64_LIMIT:
                    self._kill(s1, "fault", "the timing counter exceeded 64 bits")
                    continue
                s1.time = nt
                out.append((s1, None))
            return out
        if isinstance(s, A.DeclStmt):
            return self._exec_decl(st, s.decl)
        if isinstance(s, A.Assign):
            return self._exec_assign(st, s)
        if isinstance(s, A.ExprStmt):
            return [(s1, None) for s1, _ in self.eval(st, s.expr)]
        if isinstance(s, A.If):
            out = []
            for s1, cv in self.eval(st, s.cond):
                for s2, taken in self.branch(s1, cv, s.nid[:8]):
                    body = s.then_body if taken else s.else_body
                    out.extend(self.run_body([s2], body))
            return out
        if isinstance(s, A.While):
            return self._exec_loop(st, s, init=None, step=None)
        if isinstance(s, A.For):
            return self._exec_loop(st, s, init=s.init, step=s.step)
        if isinstance(s, A.Break):
            return [(st, _BRK)]
        if isinstance(s, A.Return):
            if s.value is None:
                return [(st, ("R", None))]
            rt = self.fns[st.frames[-1].fn].ret_type
            return [(s1, ("R", sx_conv(v, s.value.ctype, rt)))
                    for s1, v in self.eval(st, s.value)]
        if isinstance(s, A.AssumeStmt):
            out = []
            for s1, cv in self.eval(st, s.cond):
                s2 = self.constrain(s1, cv, True)
                if s2 is None:
                    self.pruned["assume"] += 1
                else:
                    out.append((s2, None))
            return out
        if isinstance(s, A.AssertStmt):
            out = []
            for s1, cv in self.eval(st, s.cond):
                for s2, taken in self.branch(s1, cv, s.nid[:8] + "/assert"):
                    if taken:
                        out.append((s2, None))
                    else:
                        self._kill(s2, "assert", s.label or s.nid)
            return out
        raise fail(E_CHECKER, f"unexpected statement {s.kind}", s.loc)

    def _exec_decl(self, st: _St, d: A.VarDecl) -> list[tuple[_St, object]]:
        fn = st.frames[-1].fn
        vars = st.frames[-1].vars
        if isinstance(d.vtype, A.ArrayType):
            a = vars.get(d.name)
            if a is None:
                # one stack region per activation, persisting across
                # re-executions of the declaration inside loops
                a = _SymArr([None] * d.vtype.length, base=f"{fn}.{d.name}")
                vars[d.name] = a
            states = [st]
            if isinstance(d.init, list):
                for i, e in enumerate(d.init):
                    nxt = []
                    for s1 in states:
                        for s2, v in self.eval(s1, e):
                            # re-fetch: a fork re-mapped the array object
                            arr = s2.frames[-1].vars[d.name]
                            arr.cells[i] = sx_conv(v, e.ctype, d.vtype.elem)
                            nxt.append(s2)
                    states = nxt
            return [(s, None) for s in states]
        if d.init is None:
            return [(st, None)]  # stays unwritten; a read injects
        out = []
        for s1, v in self.eval(st, d.init):
            s1.frames[-1].vars[d.name] = sx_conv(v, d.init.ctype, d.vtype)
            out.append((s1, None))
        return out

    def _compound(self, old: Val, v: Val, aop: str, tt: A.IType,
                  vt: A.IType) -> Val:
        op = aop[:-1]
        if op in ("<<", ">>"):
            u = promote(tt, self.width)
            return sx_conv(sx_shift(op, sx_conv(old, tt, u), v, u), u, tt)
        u = usual_type(tt, vt, self.width)
        return sx_conv(sx_bin(op, sx_conv(old, tt, u), sx_conv(v, vt, u), u),
                       u, tt)

    def _exec_assign(self, st: _St, s: A.Assign) -> list[tuple[_St, object]]:
        # evaluation order mirrors the interpreter: target location (and,
        # for compound forms, the old value) before the right-hand side
        if isinstance(s.target, A.VarRef):
            name = s.target.name
            if name == A.TIME_VAR:
                st.time = 0  # type checking admits only `_time = 0`
                return [(st, None)]
            tt = s.target.ctype
            old = None if s.op == "=" else self._read_var(st, s.target)
            out = []
            for s1, v in self.eval(st, s.value):
                if s.op == "=":
                    nv = sx_conv(v, s.value.ctype, tt)
                else:
                    nv = self._compound(old, v, s.op, tt, s.value.ctype)
                fn = s1.frames[-1].fn
                if name in self.locals[fn]:
                    s1.frames[-1].vars[name] = nv
                else:
                    s1.G[name] = nv
                out.append((s1, None))
            return out
        # array element target
        tgt = s.target
        et = tgt.ctype
        out = []
        for s1, iv2 in self.eval(st, tgt.index):
            for s2, i in self.concretize(s1, iv2):
                a = self._arr_of(s2, tgt.base)
                if i is None:
                    # unknown position: the old values and the stored one
                    # are gone; havoc the whole array
                    for s3, _v in self.eval(s2, s.value):
                        s3.optimistic = True
                        a3 = self._arr_of(s3, tgt.base)
                        a3.cells = [self._artifact(s3, et) for _ in a3.cells]
                        out.append((s3, None))
                    continue
                if not 0 <= i < len(a.cells):
                    self._kill(s2, "fault",
                               f"index {i} outside [0, {len(a.cells)})")
                    continue
                old = None
                if s.op != "=":
                    old = a.cells[i]
                    if old is None:
                        # drawn but not stored back, as in the interpreter
                        old = self._new_atom(s2, f"{a.base}[{i}]", et)
                for s3, v in self.eval(s2, s.value):
                    nv = sx_conv(v, s.value.ctype, et) if s.op == "=" \
                        else self._compound(old, v, s.op, et, s.value.ctype)
                    self._arr_of(s3, tgt.base).cells[i] = nv
                    out.append((s3, None))
        return out

    def _exec_loop(self, st: _St, s, init, step) -> list[tuple[_St, object]]:
        out: list[tuple[_St, object]] = []
        st.iters[s.nid] = 0
        if init is not None:
            active = [s1 for s1, _ in self.exec_stmt(st, init)]
        else:
            active = [st]
        structural = s.nid in self.bounded
        depth = self.depths.get(s.nid)
        while active:
            nxt: list[_St] = []
            for s0 in active:
                self.tick()
                for s1, cv in self.eval(s0, s.cond):
                    for s2, taken in self.branch(s1, cv, s.nid[:8] + "/it"):
                        if not taken:
                            out.append((s2, None))
                            continue
                        if not structural and s2.iters[s.nid] >= depth:
                            label = self.loop_names[s.nid]
                            if self.exhaust[s.nid]:
                                self.insufficient.append(label)
                            self.pruned["unwind"] += 1
                            continue
                        for s3, sig in self.run_body([s2], s.body):
                            if sig is _BRK:
                                out.append((s3, None))
                            elif sig is not None:
                                out.append((s3, sig))
                            else:
                                conts = ([(s3, None)] if step is None
                                         else self.exec_stmt(s3, step))
                                for s4, _ in conts:
                                    s4.iters[s.nid] += 1
                                    nxt.append(s4)
            active = nxt
        return out


def _need_const(e: A.Expr) -> int:
    v = fold_const(e)
    if v is None:
        raise fail(E_CHECKER, "global initializer did not fold")
    return v


def _counter_written(body: list[A.Stmt], counter: str) -> bool:
    for s in body:
        for n in A.walk(s):
            if isinstance(n, A.Assign) and isinstance(n.target, A.VarRef) \
                    and n.target.name == counter:
                return True
    return False


def _scan_loops(prog: A.Program, u: UnwindSpec):
    """Classify every reachable loop: structurally bounded, or unwound to a
    given depth.  A loop with neither is a hard error naming the loop."""
    entry = prog.driver or prog.entry
    reach = call_graph(prog).reachable_from(entry) if entry else \
        {f.name for f in prog.functions}
    bounded: set[str] = set()
    depths: dict[str, int] = {}
    exhaust: dict[str, bool] = {}
    names: dict[str, str] = {}
    for fn in prog.functions:
        if fn.name not in reach:
            continue
        k = 0
        for n in A.walk(fn):
            if not isinstance(n, (A.While, A.For)):
                continue
            label = f"{fn.name}:{k}"
            k += 1
            names[n.nid] = label
            if isinstance(n, A.For):
                head = _recognize(n)
                if head is not None and not _counter_written(n.body, head.counter) \
                        and const_trip(head, prog.word_width) is not None:
                    bounded.add(n.nid)
                    continue
            d = u.depths.get(n.nid)
            if d is None:
                d = u.depths.get(label)
            if d is None:
                d = u.default_depth
            if d is None:
                raise fail(E_UNWIND_NEEDED,
                           f"loop {label} (id {n.nid}) has no structural bound "
                           f"and no unwind depth", n.loc)
            depths[n.nid] = d
            exhaust[n.nid] = u.assert_exhaustion
    return bounded, depths, exhaust, names


# ---------------------------------------------------------------- verdicts

class BuiltinChecker:
    """The bounded engine behind one (program, unwind, budget) choice.

    Exploration is lazy and cached: the path set does not depend on the
    assertion batch, so an iterative search asking many batches about the
    same program pays for exploration once.
    """

    def __init__(self, prog: A.Program, u: Optional[UnwindSpec] = None,
                 budget: Optional[CheckBudget] = None,
                 enum_limit: int = DEFAULT_ENUM_LIMIT):
        self.prog = prog
        self.u = u or UnwindSpec()
        self.budget = budget or CheckBudget()
        self.enum_limit = enum_limit
        self._ex: Optional[Exploration] = None
        self._interp: Optional[Interp] = None
        self._wit_hi: Optional[tuple] = None
        self._wit_lo: Optional[tuple] = None
        self._wit_done = {LE: False, GE: False}

    # -- exploration -------------------------------------------------------

    def exploration(self) -> Exploration:
        if self._ex is None:
            self._ex = _Explorer(self.prog, self.u, self.budget,
                                 self.enum_limit).run()
        return self._ex

    def interp(self) -> Interp:
        if self._interp is None:
            self._interp = Interp(self.prog)
        return self._interp

    # -- witnesses ---------------------------------------------------------

    def _replay(self, assignments: list[tuple[str, int, int]]
                ) -> Optional[int]:
        inj = map_injector({(s, k): v for s, k, v in assignments})
        res = self.interp().run(injector=inj, budget=10 ** 8)
        if res.assume_violated or res.assert_failed is not None:
            return None
        return res.time

    def _exact_witness(self, p: Path, high: bool) -> Optional[tuple]:
        row = p.row_hi if high else p.row_lo
        if row is None:
            row = tuple(None for _ in p.atoms)
        assignments = [(a.site, a.occ, row[j])
                       for j, a in enumerate(p.atoms)
                       if j in p.bound and a.site and row[j] is not None]
        y = self._replay(assignments)
        if y is None:
            self._note_divergence(p, "witness replay rejected")
            return None
        want = p.hi if high else p.lo
        if y != want:
            self._note_divergence(p, f"replay time {y} != predicted {want}")
        return (tuple(assignments), y, p.trail)

    def _solved_witness(self, p: Path, high: bool) -> Optional[tuple]:
        relevant: set[int] = set()
        for c, _ in p.pc:
            relevant |= c.atoms
        if isinstance(p.time, Sx):
            relevant |= p.time.atoms
        vec: list[int] = [0] * len(p.atoms)
        doms = {j: p.doms.get(j) or type_dom(p.atoms[j].t) for j in relevant}
        checks = [(compiled(c), want, c) for c, want in p.pc]

        def seed(mode: str, rng: Optional[random.Random]) -> None:
            for j in sorted(relevant):
                d = doms[j]
                if rng is not None:
                    vec[j] = d.lo + rng.randrange(d.size()) * d.stride
                elif mode == "hi":
                    vec[j] = d.hi
                elif mode == "lo":
                    vec[j] = d.lo
                elif mode == "mid":
                    vec[j] = d.mid()
                else:
                    vec[j] = 0 if d.lo <= 0 <= d.hi else d.lo

        def repair() -> bool:
            for _ in range(8):
                ok = True
                for f, want, c in checks:
                    if bool(f(vec)) == want:
                        continue
                    ok = False
                    if not self._repair_one(c, want, vec, doms, f):
                        return False
                if ok:
                    return True
            return all(bool(f(vec)) == want for f, want, _ in checks)

        attempts = [("hi", None), ("lo", None), ("mid", None), ("zero", None)]
        attempts += [("rnd", random.Random(f"witness/{p.trail[-1] if p.trail else 0}/{k}"))
                     for k in range(40)]
        for mode, rng in attempts:
            seed(mode, rng)
            if not repair():
                continue
            assignments = [(p.atoms[j].site, p.atoms[j].occ, vec[j])
                           for j in sorted(relevant) if p.atoms[j].site]
            y = self._replay(assignments)
            if y is not None:
                return (tuple(assignments), y, p.trail)
        return None

    def _repair_one(self, c: Sx, want: bool, vec: list[int],
                    doms: dict[int, Dom], f: Callable) -> bool:
        op, l, r = _as_cmp(c, want)
        for side, other, o in ((l, r, op), (r, l, _FLIP[op])):
            atom = _strip_atom(side, {}) if isinstance(side, Sx) else None
            if atom is None:
                continue
            j = atom.args[0]
            if j not in doms:
                continue
            d = doms[j]
            cands: list[int] = []
            base = other if isinstance(other, int) else compiled(other)(vec)
            cands += [base, base + d.stride, base - d.stride]
            cands += [d.hi, d.lo, d.mid(), 0, 1]
            for cand in cands:
                if cand < d.lo or cand > d.hi or (cand - d.lo) % d.stride:
                    continue
                old = vec[j]
                vec[j] = cand
                if bool(f(vec)) == want:
                    return True
                vec[j] = old
        # last resort: perturb any atom the constraint mentions
        for j in sorted(c.atoms):
            if j not in doms:
                continue
            d = doms[j]
            for cand in (d.lo, d.hi, d.mid()):
                old = vec[j]
                vec[j] = cand
                if bool(f(vec)) == want:
                    return True
                vec[j] = old
        return False

    def _note_divergence(self, p: Path, msg: str) -> None:
        ex = self.exploration()
        ex.errors.append((E_CHECKER, msg))

    def best_witness(self, comparator: str) -> Optional[tuple]:
        """The largest (for <=) or smallest (for >=) replay-validated time."""
        if self._wit_done[comparator]:
            return self._wit_hi if comparator == LE else self._wit_lo
        high = comparator == LE
        done = [p for p in self.exploration().paths if p.kind == "done"]
        done.sort(key=lambda p: (-(p.hi) if high else p.lo))
        best: Optional[tuple] = None
        for p in done:
            bound = p.hi if high else p.lo
            if best is not None and (bound <= best[1] if high else bound >= best[1]):
                break
            w = self._exact_witness(p, high) if p.exact \
                else self._solved_witness(p, high)
            if w is None:
                continue
            if best is None or (w[1] > best[1] if high else w[1] < best[1]):
                best = w
        self._wit_done[comparator] = True
        if high:
            self._wit_hi = best
        else:
            self._wit_lo = best
        return best

    # -- verdict assembly ---------------------------------------------------

    def check(self, batch: AssertionBatch) -> Verdict:
        ex = self.exploration()
        done = [p for p in ex.paths if p.kind == "done"]
        blocked = ex.truncated or bool(ex.insufficient) \
            or any(code in (E_MEMFAULT, E_TIME_OVERFLOW) for code, _ in ex.errors)
        sound_max = max((p.hi for p in done), default=None)
        sound_min = min((p.lo for p in done), default=None)
        exact_all = all(p.exact for p in done)
        v = Verdict(errors=list(ex.errors), stats=dict(ex.stats))
        if ex.timed_out:
            reason = "timeout"
        elif ex.mem_out:
            reason = "memory"
        else:
            reason = "undecided-path"
        for a in batch:
            if a.comparator == LE:
                holds = sound_max is None or sound_max <= a.bound
                if holds and not blocked:
                    v.outcomes[a.aid] = Outcome(VERIFIED)
                    continue
                w = self.best_witness(LE) if (blocked or not holds) else None
                if w is not None and w[1] > a.bound:
                    v.outcomes[a.aid] = Outcome(FALSIFIED, Counterexample(
                        w[0], a.aid, w[1], w[2]))
                elif holds:  # blocked paths may hide larger times
                    v.outcomes[a.aid] = Outcome(UNKNOWN, reason=reason)
                elif exact_all and not blocked:
                    # every path exact yet no witness: engine defect, be honest
                    v.outcomes[a.aid] = Outcome(UNKNOWN, reason="undecided-path")
                else:
                    v.outcomes[a.aid] = Outcome(UNKNOWN, reason=reason)
            else:
                holds = sound_min is None or sound_min >= a.bound
                if holds and not blocked:
                    v.outcomes[a.aid] = Outcome(VERIFIED)
                    continue
                w = self.best_witness(GE)
                if w is not None and w[1] < a.bound:
                    v.outcomes[a.aid] = Outcome(FALSIFIED, Counterexample(
                        w[0], a.aid, w[1], w[2]))
                elif holds:
                    v.outcomes[a.aid] = Outcome(UNKNOWN, reason=reason)
                else:
                    v.outcomes[a.aid] = Outcome(UNKNOWN, reason=reason)
        return v.normalized(batch)


def explore(p: A.Program, u: Optional[UnwindSpec] = None,
            budget: Optional[CheckBudget] = None,
            enum_limit: int = DEFAULT_ENUM_LIMIT) -> Exploration:
    """Run the built-in engine once and return its terminal path summary."""
    return BuiltinChecker(p, u, budget, enum_limit).exploration()


def check(p: A.Program, batch: AssertionBatch, u: Optional[UnwindSpec] = None,
          budget: Optional[CheckBudget] = None,
          enum_limit: int = DEFAULT_ENUM_LIMIT) -> Verdict:
    """Decide a batch of `_time` bound claims on a driver-closed program."""
    return BuiltinChecker(p, u, budget, enum_limit).check(batch)
