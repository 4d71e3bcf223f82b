"""Reference source-level executor.

Runs a type-checked program (plain or instrumented) under an input
injector and reports the final `_time`, so instrumented timing can be
validated against the cycle-accurate machine simulation: on any input,
the sum of executed TIC amounts is at least the simulated cycle count of
the uninstrumented program, and equals it except where instrumentation
deliberately over-approximates (helper summaries charging the helper's
worst path; the after-loop exit charge on paths that leave via `break`).

Functions are compiled once into Python closures over (run state, frame);
re-running with new inputs costs no re-traversal, which keeps exhaustive
input sweeps tractable.

Input protocol, shared with the simulator: an injector is a callable
`(site, occurrence) -> int`.  Explicit nondet sites use the ids assigned
during type checking; reads of never-written locals are implicit sites
named `func.var` / `func.arr[k]`, counted per run in first-read order.
Injected values are reduced into the site's type domain.

Executions are total: the only aborts are diagnosable faults (out of
bounds indexing, exhausted step budget, `_time` exceeding 64 bits), a
failed assumption, or a failed assertion, each reported in the result.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .diag import fail, E_BUDGET, E_MEMFAULT, E_TIME_OVERFLOW, E_INTERNAL
from .minic import ast as A
from .semantics import binop, compare, shift, unop, wrap
from .target import TargetConfig

Injector = Callable[[str, int], int]

_U64_LIMIT = 1 << 64
_BREAK = object()


@dataclass(frozen=True)
class AssertHit:
    """A failed assertion: where, which label, and `_time` at that point."""

    nid: str
    label: str
    time: int


@dataclass
class InterpResult:
    ret: Optional[int]
    time: int
    steps: int
    assert_failed: Optional[AssertHit] = None
    assume_violated: bool = False
    # (site, occurrence, value) in draw order; replaying these through a
    # map injector reproduces the run exactly.
    nondet_log: list[tuple[str, int, int]] = field(default_factory=list)
    events: Optional[list[tuple]] = None


class _AssumeViolated(Exception):
    pass


class _AssertFailed(Exception):
    def __init__(self, hit: AssertHit):
        self.hit = hit


class _Arr(list):
    """Runtime array; carries its injection-site base through references."""

    __slots__ = ("base",)

    def __init__(self, items, base: str):
        super().__init__(items)
        self.base = base


class _State:
    __slots__ = ("G", "injector", "counts", "time", "steps", "budget",
                 "events", "nondet_log")

    def __init__(self, G: dict, injector: Optional[Injector], budget: int,
                 events: Optional[list]):
        self.G = G
        self.injector = injector
        self.counts: dict[str, int] = {}
        self.time = 0
        self.steps = 0
        self.budget = budget
        self.events = events
        self.nondet_log: list[tuple[str, int, int]] = []

    def inject(self, site: str, t: A.IType) -> int:
        k = self.counts.get(site, 0)
        self.counts[site] = k + 1
        v = wrap(self.injector(site, k), t) if self.injector else wrap(0, t)
        self.nondet_log.append((site, k, v))
        return v

    def tick(self, n: int = 1) -> None:
        self.steps += n
        if self.steps > self.budget:
            raise fail(E_BUDGET, f"step budget of {self.budget} exhausted")


_ExprC = Callable[[_State, list], int]
_StmtC = Callable[[_State, list], object]


class Interp:
    """Closure-compiled executor for one program."""

    def __init__(self, prog: A.Program, config: Optional[TargetConfig] = None):
        self.prog = prog
        self.config = config or TargetConfig(word_width=prog.word_width)
        self.fns: dict[str, "_FnCode"] = {}
        for fn in prog.functions:
            self.fns[fn.name] = _FnCode(fn)
        for fc in self.fns.values():
            fc.compile(self)

    # -- running --------------------------------------------------------

    def run(self, entry: Optional[str] = None, args: tuple[int, ...] = (),
            *, injector: Optional[Injector] = None, budget: int = 10 ** 8,
            trace: bool = False) -> InterpResult:
        """Execute `entry` (default: the driver) and collect the outcome.

        `args` feeds a non-driver entry directly; array parameters take
        sequences.  With `trace`, the result carries an event list of
        ("enter"|"exit", fn, time), ("stmt", fn, nid, time-before) and
        ("tic", entry-id, amount, time-after) tuples.
        """
        name = entry or self.prog.driver or self.prog.entry
        if not name:
            raise fail(E_INTERNAL, "no entry function given or recorded")
        fc = self.fns[name]
        events: Optional[list] = [] if trace else None
        st = _State(self._globals(), injector, budget, events)
        frame = fc.new_frame()
        if len(args) != len(fc.params):
            raise fail(E_INTERNAL,
                       f"{name} takes {len(fc.params)} arguments, got {len(args)}")
        for (slot, t), a in zip(fc.params, args):
            if isinstance(t, A.ArrayType):
                vals = list(a)
                if len(vals) != t.length:
                    raise fail(E_INTERNAL, f"array argument length {len(vals)}, "
                                           f"expected {t.length}")
                frame[slot] = _Arr([wrap(v, t.elem) for v in vals], base="<arg>")
            else:
                frame[slot] = wrap(a, t)
        try:
            ret = fc.call(st, frame)
        except _AssumeViolated:
            return InterpResult(None, st.time, st.steps, assume_violated=True,
                                nondet_log=st.nondet_log, events=events)
        except _AssertFailed as ex:
            return InterpResult(None, st.time, st.steps, assert_failed=ex.hit,
                                nondet_log=st.nondet_log, events=events)
        return InterpResult(ret, st.time, st.steps,
                            nondet_log=st.nondet_log, events=events)

    def _globals(self) -> dict:
        G: dict[str, object] = {}
        for g in self.prog.globals:
            if isinstance(g.vtype, A.ArrayType):
                vals = [0] * g.vtype.length
                if isinstance(g.init, list):
                    for i, e in enumerate(g.init):
                        vals[i] = wrap(_const(e), g.vtype.elem)
                G[g.name] = _Arr(vals, base=f"<global>.{g.name}")
            elif g.name == A.TIME_VAR:
                continue  # lives in run state, not in storage
            else:
                G[g.name] = wrap(_const(g.init) if g.init is not None else 0,
                                 g.vtype)
        return G


def _const(e: A.Expr) -> int:
    from .minic.typecheck import fold_const
    v = fold_const(e)
    if v is None:
        raise fail(E_INTERNAL, "global initializer did not fold")
    return v


# ---------------------------------------------------------------- function

class _FnCode:
    def __init__(self, fn: A.FuncDef):
        self.fn = fn
        self.name = fn.name
        self.slots: dict[str, int] = {}
        self.params: list[tuple[int, Union[A.IType, A.ArrayType]]] = []
        for p in fn.params:
            self.params.append((self._slot(p.name), p.vtype))
        for n in A.walk(fn):
            if isinstance(n, A.DeclStmt):
                self._slot(n.decl.name)
        self.nslots = len(self.slots)
        self.body: list[_StmtC] = []

    def _slot(self, name: str) -> int:
        if name not in self.slots:
            self.slots[name] = len(self.slots)
        return self.slots[name]

    def new_frame(self) -> list:
        return [None] * self.nslots

    def compile(self, interp: Interp) -> None:
        cc = _FnCompiler(self, interp)
        self.body = [cc.stmt(s) for s in self.fn.body]

    def call(self, st: _State, frame: list) -> Optional[int]:
        if st.events is not None:
            st.events.append(("enter", self.name, st.time))
        sig = _run_body(self.body, st, frame)
        if st.events is not None:
            st.events.append(("exit", self.name, st.time))
        if isinstance(sig, tuple):
            return sig[1]
        return None


def _run_body(body: list[_StmtC], st: _State, fr: list):
    for c in body:
        sig = c(st, fr)
        if sig is not None:
            return sig
    return None


# ---------------------------------------------------------------- compiler

class _FnCompiler:
    def __init__(self, fc: _FnCode, interp: Interp):
        self.fc = fc
        self.interp = interp
        self.fname = fc.name

    # -- expressions -----------------------------------------------------

    def expr(self, e: A.Expr) -> _ExprC:
        t = e.ctype
        if isinstance(e, A.IntLit):
            v = wrap(e.value, t)
            return lambda st, fr: v
        if isinstance(e, A.VarRef):
            return self.var_read(e)
        if isinstance(e, A.Index):
            return self.index_read(e)
        if isinstance(e, A.Unary):
            return self.unary(e)
        if isinstance(e, A.Binary):
            return self.binary(e)
        if isinstance(e, A.Call):
            return self.call(e)
        if isinstance(e, A.NondetExpr):
            site, nt = e.site, e.nondet_type
            return lambda st, fr: st.inject(site, nt)
        raise fail(E_INTERNAL, f"unexpected expression {e.kind}", e.loc)

    def var_read(self, e: A.VarRef) -> _ExprC:
        name = e.name
        if name == A.TIME_VAR:
            return lambda st, fr: st.time
        if name in self.fc.slots:
            slot = self.fc.slots[name]
            t = e.ctype
            site = f"{self.fname}.{name}"

            def c(st, fr):
                v = fr[slot]
                if v is None:
                    v = st.inject(site, t)
                    fr[slot] = v
                return v
            return c
        return lambda st, fr: st.G[name]

    def _array(self, base: A.VarRef) -> Callable[[_State, list], _Arr]:
        name = base.name
        if name in self.fc.slots:
            slot = self.fc.slots[name]
            fname = self.fname

            def local_arr(st, fr):
                a = fr[slot]
                if a is None:
                    raise fail(E_INTERNAL, f"array {fname}.{name} read before "
                                           f"declaration")
                return a
            return local_arr
        return lambda st, fr: st.G[name]

    def index_read(self, e: A.Index) -> _ExprC:
        arr = self._array(e.base)
        idx = self.expr(e.index)
        t = e.ctype
        loc = e.loc

        def c(st, fr):
            a = arr(st, fr)
            i = idx(st, fr)
            if not 0 <= i < len(a):
                raise fail(E_MEMFAULT, f"index {i} outside [0, {len(a)})", loc)
            v = a[i]
            if v is None:
                v = st.inject(f"{a.base}[{i}]", t)
                a[i] = v
            return v
        return c

    def unary(self, e: A.Unary) -> _ExprC:
        t = e.ctype
        op = e.op
        sub = self.expr(e.operand)
        if op == "!":
            return lambda st, fr: int(sub(st, fr) == 0)
        conv = _converter(e.operand.ctype, t)
        return lambda st, fr: unop(op, conv(sub(st, fr)), t)

    def binary(self, e: A.Binary) -> _ExprC:
        op = e.op
        l, r = self.expr(e.left), self.expr(e.right)
        lt, rt = e.left.ctype, e.right.ctype
        if op in ("<", "<=", ">", ">=", "==", "!="):
            from .minic.typecheck import usual_type
            u = usual_type(lt, rt, self.interp.prog.word_width)
            cl, cr = _converter(lt, u), _converter(rt, u)
            return lambda st, fr: compare(op, cl(l(st, fr)), cr(r(st, fr)))
        t = e.ctype
        if op in ("<<", ">>"):
            cl = _converter(lt, t)
            return lambda st, fr: shift(op, cl(l(st, fr)), r(st, fr), t)
        cl, cr = _converter(lt, t), _converter(rt, t)
        return lambda st, fr: binop(op, cl(l(st, fr)), cr(r(st, fr)), t)

    def call(self, e: A.Call) -> _ExprC:
        fc = self.interp.fns[e.name]
        arg_cs = []
        for (slot, pt), a in zip(fc.params, e.args):
            if isinstance(pt, A.ArrayType):
                arg_cs.append((slot, self._array(a)))  # type: ignore[arg-type]
            else:
                ac = self.expr(a)
                conv = _converter(a.ctype, pt)
                arg_cs.append((slot, lambda st, fr, ac=ac, conv=conv: conv(ac(st, fr))))
        nslots = fc.nslots

        def c(st, fr):
            st.tick()
            nf = [None] * nslots
            for slot, ac in arg_cs:
                nf[slot] = ac(st, fr)
            return fc.call(st, nf)
        return c

    # -- statements -------------------------------------------------------

    def stmt(self, s: A.Stmt) -> _StmtC:
        inner = self._stmt(s)
        if isinstance(s, (A.TicStmt,)):
            return inner  # tics trace themselves with their entry id
        fn, nid = self.fname, s.nid

        def c(st, fr):
            st.tick()
            if st.events is not None:
                st.events.append(("stmt", fn, nid, st.time))
            return inner(st, fr)
        return c

    def _stmt(self, s: A.Stmt) -> _StmtC:
        if isinstance(s, A.DeclStmt):
            return self.decl(s.decl)
        if isinstance(s, A.Assign):
            return self.assign(s)
        if isinstance(s, A.ExprStmt):
            sub = self.expr(s.expr)
            return lambda st, fr: (sub(st, fr), None)[1]
        if isinstance(s, A.If):
            cond = self.expr(s.cond)
            then_b = [self.stmt(x) for x in s.then_body]
            else_b = [self.stmt(x) for x in s.else_body]
            return lambda st, fr: (_run_body(then_b, st, fr) if cond(st, fr)
                                   else _run_body(else_b, st, fr))
        if isinstance(s, A.While):
            cond = self.expr(s.cond)
            body = [self.stmt(x) for x in s.body]

            def wloop(st, fr):
                while True:
                    st.tick()
                    if not cond(st, fr):
                        return None
                    sig = _run_body(body, st, fr)
                    if sig is _BREAK:
                        return None
                    if sig is not None:
                        return sig
            return wloop
        if isinstance(s, A.For):
            init = self.stmt(s.init) if s.init is not None else None
            cond = self.expr(s.cond)
            step = self.stmt(s.step) if s.step is not None else None
            body = [self.stmt(x) for x in s.body]

            def floop(st, fr):
                if init is not None:
                    init(st, fr)
                while True:
                    st.tick()
                    if not cond(st, fr):
                        return None
                    sig = _run_body(body, st, fr)
                    if sig is _BREAK:
                        return None
                    if sig is not None:
                        return sig
                    if step is not None:
                        step(st, fr)
            return floop
        if isinstance(s, A.Break):
            return lambda st, fr: _BREAK
        if isinstance(s, A.Return):
            if s.value is None:
                return lambda st, fr: ("R", None)
            sub = self.expr(s.value)
            conv = _converter(s.value.ctype, self.fc.fn.ret_type)
            return lambda st, fr: ("R", conv(sub(st, fr)))
        if isinstance(s, A.TicStmt):
            amt = self.expr(s.amount)
            entry = s.entry

            def tic(st, fr):
                st.tick()
                v = amt(st, fr)
                nt = st.time + v
                if nt >= _U64_LIMIT:
                    raise fail(E_TIME_OVERFLOW,
                               "the timing counter exceeded 64 bits", s.loc)
                st.time = nt
                if st.events is not None:
                    st.events.append(("tic", entry, v, nt))
                return None
            return tic
        if isinstance(s, A.AssumeStmt):
            cond = self.expr(s.cond)

            def assume(st, fr):
                if not cond(st, fr):
                    raise _AssumeViolated()
                return None
            return assume
        if isinstance(s, A.AssertStmt):
            cond = self.expr(s.cond)
            nid, label = s.nid, s.label

            def check(st, fr):
                if not cond(st, fr):
                    raise _AssertFailed(AssertHit(nid, label, st.time))
                return None
            return check
        raise fail(E_INTERNAL, f"unexpected statement {s.kind}", s.loc)

    def decl(self, d: A.VarDecl) -> _StmtC:
        slot = self.fc.slots[d.name]
        if isinstance(d.vtype, A.ArrayType):
            n, et = d.vtype.length, d.vtype.elem
            base = f"{self.fname}.{d.name}"
            # The frame cell persists across re-executions of the
            # declaration (a loop-local array is one stack region), so
            # unlisted elements keep earlier writes, as on the machine.
            if isinstance(d.init, list):
                items = [(i, self.expr(e), _converter(e.ctype, et))
                         for i, e in enumerate(d.init)]

                def ca(st, fr):
                    a = fr[slot]
                    if a is None:
                        a = _Arr([None] * n, base=base)
                        fr[slot] = a
                    for i, ec, conv in items:
                        a[i] = conv(ec(st, fr))
                    return None
                return ca

            def cu(st, fr):
                if fr[slot] is None:
                    fr[slot] = _Arr([None] * n, base=base)
                return None
            return cu
        if d.init is None:
            return lambda st, fr: None  # stays unwritten; reads inject
        sub = self.expr(d.init)
        conv = _converter(d.init.ctype, d.vtype)
        return lambda st, fr: (fr.__setitem__(slot, conv(sub(st, fr))), None)[1]

    def assign(self, s: A.Assign) -> _StmtC:
        value = self.expr(s.value)
        if isinstance(s.target, A.VarRef):
            name = s.target.name
            if name == A.TIME_VAR:
                # Type checking admits only `_time = 0`.
                return lambda st, fr: (st.__setattr__("time", 0), None)[1]
            tt = s.target.ctype
            if name in self.fc.slots:
                slot = self.fc.slots[name]
                if s.op == "=":
                    conv = _converter(s.value.ctype, tt)
                    return lambda st, fr: (
                        fr.__setitem__(slot, conv(value(st, fr))), None)[1]
                read = self.var_read(s.target)
                apply_ = self._compound(s.op, tt, s.value.ctype)
                return lambda st, fr: (
                    fr.__setitem__(slot, apply_(read(st, fr), value(st, fr))),
                    None)[1]
            if s.op == "=":
                conv = _converter(s.value.ctype, tt)
                return lambda st, fr: (
                    st.G.__setitem__(name, conv(value(st, fr))), None)[1]
            apply_ = self._compound(s.op, tt, s.value.ctype)
            return lambda st, fr: (
                st.G.__setitem__(name, apply_(st.G[name], value(st, fr))),
                None)[1]
        # Array element target: evaluate base and index once.
        tgt = s.target
        arr = self._array(tgt.base)
        idx = self.expr(tgt.index)
        et = tgt.ctype
        loc = tgt.loc

        def locate(st, fr):
            a = arr(st, fr)
            i = idx(st, fr)
            if not 0 <= i < len(a):
                raise fail(E_MEMFAULT, f"index {i} outside [0, {len(a)})", loc)
            return a, i

        if s.op == "=":
            conv = _converter(s.value.ctype, et)

            def cs(st, fr):
                a, i = locate(st, fr)
                a[i] = conv(value(st, fr))
                return None
            return cs
        apply_ = self._compound(s.op, et, s.value.ctype)

        def cc(st, fr):
            a, i = locate(st, fr)
            old = a[i]
            if old is None:
                old = st.inject(f"{a.base}[{i}]", et)
            a[i] = apply_(old, value(st, fr))
            return None
        return cc

    def _compound(self, aop: str, tt: A.IType,
                  vt: A.IType) -> Callable[[int, int], int]:
        """old OP= new: compute in the usual type, store back in tt."""
        from .minic.typecheck import promote, usual_type
        op = aop[:-1]
        if op in ("<<", ">>"):
            u = promote(tt, self.interp.prog.word_width)
            cl = _converter(tt, u)
            back = _converter(u, tt)
            return lambda old, v: back(shift(op, cl(old), v, u))
        u = usual_type(tt, vt, self.interp.prog.word_width)
        cl, cr = _converter(tt, u), _converter(vt, u)
        back = _converter(u, tt)
        return lambda old, v: back(binop(op, cl(old), cr(v), u))


def _converter(src: Optional[A.IType], dst: A.IType) -> Callable[[int], int]:
    """Value conversion between canonical type domains (a plain wrap)."""
    if src is not None and src.bits == dst.bits and src.signed == dst.signed:
        return lambda v: v
    return lambda v: wrap(v, dst)


# ---------------------------------------------------------------- injectors

def map_injector(values: dict, default: int = 0) -> Injector:
    """Injector from {site: value} or {(site, occurrence): value}."""

    def inject(site: str, k: int) -> int:
        if (site, k) in values:
            return values[(site, k)]
        # A site listed bare applies to every occurrence.
        return values.get(site, default)
    return inject


def random_injector(rng) -> Injector:
    """Uniform draws over the full 32-bit pattern space (wrapped per site)."""
    return lambda site, k: rng.getrandbits(32)
