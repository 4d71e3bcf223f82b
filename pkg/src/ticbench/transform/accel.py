"""Loop acceleration: replace counter loops by exact closed forms.

A loop is eligible when it is a `for` over a single scalar counter
(`i = a; i rel b; i += c` with constant c) and its body is straight
line: timing increments with amounts that fold to constants, plus
assignments of the shapes `v = const`, `v = v + const`, `v = v - const`
(compound spellings included).  Such a loop is replaced by

    _k0_j = a;  _k1_j = <trip count>;
    _time += _k1_j*c1 + _k1_j*c2 + ...;   one term per body increment
    <final values of the written variables>;

leaving in place the increment that follows the loop, which charges the
final condition evaluation.  Replacements are exact: the final `_time`
and every surviving variable match the original run bit for bit, which
pins down the arithmetic below.

Constant bounds are resolved by stepping the counter numerically in its
declared modular type, so wrap-around loops count exactly as they
execute (up to an iteration cap).  Symbolic bounds are supported for
`<` with step +1 and `>` with step -1 when the counter's type makes the
modular trip count `b - a` faithful (32-bit, or unsigned at any width);
the trip count is then guarded by an emptiness test on fresh pre-loop
state, and written variables are restricted to `v = v +/- const` so
their closed forms `v + _k1*const` hold modularly.

Nested constant loops collapse bottom-up: an inner replacement is
straight-line code with constant-foldable increments, which makes the
outer loop eligible in turn.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .. import semantics as S
from ..minic import ast as A
from ..minic.pretty import Printer
from ..minic.typecheck import check_program, fold_const, usual_type

# Loops that step more times than this keep their syntactic form and are
# left to the checker's unwinding mechanism.
ITER_CAP = 1 << 21

_PRINT = Printer()


@dataclass(frozen=True)
class LoopSummary:
    """Closed-form record of one replaced (or abstracted) loop.

    `recurrences` maps each variable the loop wrote to the emitted
    closed form for its exit value, or the marker "nondet" when the
    abstraction stage released it.  A summary with any "nondet" entry
    over-approximates; otherwise it is exact.
    """

    loop: str  # node id of the loop this summary stands for
    fn: str  # enclosing function
    counter: str  # counter variable name
    k0: str  # fresh variable holding the counter's initial value
    k1: str  # fresh variable holding the trip count
    trip: Optional[int]  # trip count when constant, None when symbolic
    recurrences: Mapping[str, str]
    time_formula: str  # text of the emitted `_time` increment amount
    cond_cost: int  # trailing charge for the final condition evaluation

    @property
    def exact(self) -> bool:
        return "nondet" not in self.recurrences.values()


# ---------------------------------------------------------------- recognition


def _fold_env(e: A.Expr, env: dict[str, int]) -> Optional[int]:
    """fold_const extended with known variable values (plain-int arithmetic;
    callers wrap results at store or comparison boundaries)."""
    if isinstance(e, A.VarRef):
        return env.get(e.name)
    if isinstance(e, A.Unary):
        v = _fold_env(e.operand, env)
        if v is None:
            return None
        return {"-": -v, "~": ~v, "!": int(v == 0)}[e.op]
    if isinstance(e, A.Binary):
        l, r = _fold_env(e.left, env), _fold_env(e.right, env)
        if l is None or r is None:
            return None
        lit = A.Binary(e.op, A.IntLit(l), A.IntLit(r))
        return fold_const(lit)
    return fold_const(e) if isinstance(e, A.IntLit) else None


@dataclass
class _Head:
    counter: str
    ctype: A.IType
    scoped: bool  # counter declared in the for-init (dead after the loop)
    init: Optional[A.Expr]  # None when the init clause is absent
    rel: str
    bound: A.Expr
    delta: int


def _step_delta(st: A.Assign, counter: str) -> Optional[int]:
    if not (isinstance(st.target, A.VarRef) and st.target.name == counter):
        return None
    if st.op in ("+=", "-="):
        c = fold_const(st.value)
        return None if c is None else (c if st.op == "+=" else -c)
    if st.op == "=" and isinstance(st.value, A.Binary):
        b = st.value
        if b.op == "+" and isinstance(b.left, A.VarRef) and b.left.name == counter:
            c = fold_const(b.right)
        elif b.op == "+" and isinstance(b.right, A.VarRef) and b.right.name == counter:
            c = fold_const(b.left)
        elif b.op == "-" and isinstance(b.left, A.VarRef) and b.left.name == counter:
            c = fold_const(b.right)
            c = None if c is None else -c
        else:
            return None
        return c
    return None


def const_trip(head: _Head, width: int) -> Optional[tuple[int, int, int]]:
    """(initial value, trip count, final value) of a constant-bound counter,
    stepped numerically in the counter's modular type; None when the head is
    not constant or the count exceeds ITER_CAP."""
    a = _fold_env(head.init, {}) if head.init is not None else None
    b = _fold_env(head.bound, {})
    if a is None or b is None:
        return None
    t, bt = head.ctype, head.bound.ctype
    ut = usual_type(t, bt, width)
    i_val, bc, n = S.wrap(a, t), S.wrap(S.wrap(b, bt), ut), 0
    while S.compare(head.rel, S.wrap(i_val, ut), bc):
        n += 1
        if n > ITER_CAP:
            return None
        i_val = S.wrap(i_val + head.delta, t)
    return S.wrap(a, t), n, i_val


def _recognize(loop: A.For) -> Optional[_Head]:
    if loop.step is None or not isinstance(loop.cond, A.Binary):
        return None
    cond = loop.cond
    if cond.op not in ("<", "<=", ">", ">=", "==", "!="):
        return None
    if isinstance(cond.left, A.VarRef):
        ref, rel, bound = cond.left, cond.op, cond.right
    elif isinstance(cond.right, A.VarRef):
        flip = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "==", "!=": "!="}
        ref, rel, bound = cond.right, flip[cond.op], cond.left
    else:
        return None
    counter = ref.name
    if ref.decl is None or isinstance(ref.decl.vtype, A.ArrayType):
        return None
    if any(isinstance(n, A.VarRef) and n.name == counter for n in A.walk(bound)):
        return None
    delta = _step_delta(loop.step, counter)
    if delta is None or delta == 0:
        return None
    scoped, init = False, None
    if isinstance(loop.init, A.Assign):
        if not (loop.init.op == "=" and isinstance(loop.init.target, A.VarRef)
                and loop.init.target.name == counter):
            return None
        init = loop.init.value
    elif isinstance(loop.init, A.DeclStmt):
        if loop.init.decl.name != counter or loop.init.decl.init is None:
            return None
        scoped, init = True, loop.init.decl.init
    elif loop.init is not None:
        return None
    return _Head(counter, ref.decl.vtype, scoped, init, rel, bound, delta)


@dataclass
class _Body:
    tics: list[int]
    writes: dict[str, tuple[str, int]]  # var -> ("add", k) | ("set", value)
    wtypes: dict[str, A.IType]


def _scan_body(loop: A.For, head: _Head) -> Optional[_Body]:
    env: dict[str, int] = {}
    local = set()  # names declared inside the body, dead after replacement
    tics: list[int] = []
    writes: dict[str, tuple[str, int]] = {}
    wtypes: dict[str, A.IType] = {}
    for st in loop.body:
        if isinstance(st, A.TicStmt):
            v = _fold_env(st.amount, env)
            if v is None or not 0 <= v < (1 << 64):
                return None
            tics.append(v)
        elif isinstance(st, A.DeclStmt):
            d = st.decl
            if isinstance(d.vtype, A.ArrayType) or not isinstance(d.init, A.Expr):
                return None
            v = _fold_env(d.init, env)
            if v is None:
                return None
            env[d.name] = S.wrap(v, d.vtype)
            local.add(d.name)
        elif isinstance(st, A.Assign):
            t = st.target
            if not isinstance(t, A.VarRef) or t.name == head.counter:
                return None
            if t.decl is None or isinstance(t.decl.vtype, A.ArrayType):
                return None
            name, vt = t.name, t.decl.vtype
            fx = self_fx = None
            v = _fold_env(st.value, env) if st.op == "=" else None
            if v is not None:
                fx = ("set", S.wrap(v, vt))
            else:
                self_fx = _step_delta(st, name)
                if self_fx is None:
                    return None
                fx = ("add", self_fx)
            if fx[0] == "set":
                env[name] = fx[1]
            elif name in env:
                env[name] = S.wrap(env[name] + fx[1], vt)
            if name in local:
                continue
            prev = writes.get(name)
            if fx[0] == "set" or prev is None or prev[0] == "add" and fx[0] == "add":
                nxt = fx if fx[0] == "set" or prev is None else ("add", prev[1] + fx[1])
            else:  # set then add
                nxt = ("set", S.wrap(prev[1] + fx[1], vt))
            writes[name] = nxt
            wtypes[name] = vt
        else:
            return None
    return _Body(tics, writes, wtypes)


# ---------------------------------------------------------------- emission


def _lit(v: int, *, nid: str) -> A.Expr:
    if v < 0:
        return A.Unary("-", A.IntLit(-v, nid=nid + "n"), nid=nid)
    return A.IntLit(v, nid=nid)


class _Emitter:
    def __init__(self, prog: A.Program):
        self.prog = prog
        self.summaries: list[LoopSummary] = []

    def fresh(self, loop: A.For):
        j = len(self.summaries)
        seq = [0]

        def nid() -> str:
            seq[0] += 1
            return A.synth_id(loop.nid, "accel", seq[0])

        return j, nid

    def decl(self, name: str, vt: A.IType, init: A.Expr, nid) -> A.DeclStmt:
        d = A.VarDecl(name, vt, "local", init, nid=nid())
        return A.DeclStmt(d, nid=nid())

    def tic_amount(self, k1: str, tics: list[int], nid) -> Optional[A.Expr]:
        terms = [
            A.Binary("*", A.VarRef(k1, nid=nid()), _lit(c, nid=nid()), nid=nid())
            for c in tics]
        if not terms:
            return None
        amount = terms[0]
        for t in terms[1:]:
            amount = A.Binary("+", amount, t, nid=nid())
        return amount

    def trailing_cost(self, following: Optional[A.Stmt]) -> int:
        if isinstance(following, A.TicStmt):
            v = fold_const(following.amount)
            if v is not None:
                return v
        return 0

    # -- constant trip count

    def const_loop(self, loop: A.For, head: _Head, body: _Body,
                   following: Optional[A.Stmt], fname: str) -> Optional[list[A.Stmt]]:
        walked = const_trip(head, self.prog.word_width)
        if walked is None:
            return None
        a, n, i_val = walked
        t = head.ctype
        j, nid = self.fresh(loop)
        k0, k1 = f"_k0_{j}", f"_k1_{j}"
        out = [
            self.decl(k0, t, _lit(a, nid=nid()), nid),
            self.decl(k1, A.U32, _lit(n, nid=nid()), nid),
        ]
        amount = self.tic_amount(k1, body.tics, nid)
        if amount is not None:
            out.append(A.TicStmt(amount, nid=nid()))
        rec: dict[str, str] = {}
        for name, (kind, k) in body.writes.items():
            vt = body.wtypes[name]
            if kind == "set":
                if n == 0:
                    continue
                value: A.Expr = _lit(k, nid=nid())
            else:
                m = (n * k) % (1 << vt.bits)
                if m == 0:
                    continue
                value = A.Binary("+", A.VarRef(name, nid=nid()),
                                 _lit(m, nid=nid()), nid=nid())
            out.append(A.Assign(A.VarRef(name, nid=nid()), "=", value, nid=nid()))
            rec[name] = _PRINT.expr(value)
        if not head.scoped:
            out.append(A.Assign(A.VarRef(head.counter, nid=nid()), "=",
                                _lit(i_val, nid=nid()), nid=nid()))
            rec[head.counter] = str(i_val)
        self.summaries.append(LoopSummary(
            loop.nid, fname, head.counter, k0, k1, n, rec,
            _PRINT.expr(amount) if amount is not None else "0",
            self.trailing_cost(following)))
        return out

    # -- symbolic trip count

    def symbolic_loop(self, loop: A.For, head: _Head, body: _Body,
                      following: Optional[A.Stmt], fname: str,
                      written: set[str]) -> Optional[list[A.Stmt]]:
        t, bt = head.ctype, head.bound.ctype
        if (head.rel, head.delta) not in (("<", 1), (">", -1)):
            return None
        # The u32 trip count b - a is the true count only when reducing
        # mod the counter's type cannot flip its sign bit meaning.
        if t.bits != 32 and t.signed:
            return None
        if usual_type(t, bt, self.prog.word_width) != t:
            return None
        for e in (head.init, head.bound):
            if e is not None and any(
                    isinstance(n, (A.Call, A.NondetExpr)) for n in A.walk(e)):
                return None
        invariant_over = written | {head.counter}
        if any(isinstance(n, A.VarRef) and n.name in invariant_over
               for n in A.walk(head.bound)):
            return None
        if any(kind == "set" for kind, _ in body.writes.values()):
            return None
        j, nid = self.fresh(loop)
        k0, k1, kb = f"_k0_{j}", f"_k1_{j}", f"_b_{j}"
        init = head.init if head.init is not None else A.VarRef(head.counter, nid=nid())
        out = [
            self.decl(k0, t, init, nid),
            self.decl(kb, bt, head.bound, nid),
            self.decl(k1, A.U32, A.IntLit(0, nid=nid()), nid),
        ]
        lo, hi = (k0, kb) if head.rel == "<" else (kb, k0)
        guard = A.Binary("<", A.VarRef(lo, nid=nid()), A.VarRef(hi, nid=nid()), nid=nid())
        trip = A.Binary("-", A.VarRef(hi, nid=nid()), A.VarRef(lo, nid=nid()), nid=nid())
        out.append(A.If(guard, [A.Assign(A.VarRef(k1, nid=nid()), "=", trip, nid=nid())],
                        [], nid=nid()))
        amount = self.tic_amount(k1, body.tics, nid)
        if amount is not None:
            out.append(A.TicStmt(amount, nid=nid()))
        rec: dict[str, str] = {}
        for name, (_, k) in body.writes.items():
            op = "+" if k >= 0 else "-"
            value = A.Binary(op, A.VarRef(name, nid=nid()),
                             A.Binary("*", A.VarRef(k1, nid=nid()),
                                      _lit(abs(k), nid=nid()), nid=nid()), nid=nid())
            out.append(A.Assign(A.VarRef(name, nid=nid()), "=", value, nid=nid()))
            rec[name] = _PRINT.expr(value)
        if not head.scoped:
            op = "+" if head.delta > 0 else "-"
            value = A.Binary(op, A.VarRef(k0, nid=nid()), A.VarRef(k1, nid=nid()), nid=nid())
            out.append(A.Assign(A.VarRef(head.counter, nid=nid()), "=", value, nid=nid()))
            rec[head.counter] = _PRINT.expr(value)
        self.summaries.append(LoopSummary(
            loop.nid, fname, head.counter, k0, k1, None, rec,
            _PRINT.expr(amount) if amount is not None else "0",
            self.trailing_cost(following)))
        return out

    # -- traversal

    def body(self, stmts: list[A.Stmt], fname: str) -> list[A.Stmt]:
        out: list[A.Stmt] = []
        for idx, s in enumerate(stmts):
            if isinstance(s, A.If):
                s.then_body = self.body(s.then_body, fname)
                s.else_body = self.body(s.else_body, fname)
            elif isinstance(s, A.While):
                s.body = self.body(s.body, fname)
            elif isinstance(s, A.For):
                s.body = self.body(s.body, fname)
                following = stmts[idx + 1] if idx + 1 < len(stmts) else None
                rep = self.try_loop(s, following, fname)
                if rep is not None:
                    out.extend(rep)
                    continue
            out.append(s)
        return out

    def try_loop(self, loop: A.For, following: Optional[A.Stmt],
                 fname: str) -> Optional[list[A.Stmt]]:
        head = _recognize(loop)
        if head is None:
            return None
        body = _scan_body(loop, head)
        if body is None:
            return None
        rep = self.const_loop(loop, head, body, following, fname)
        if rep is None:
            rep = self.symbolic_loop(loop, head, body, following, fname,
                                     set(body.writes))
        return rep


def accelerate(p: A.Program) -> tuple[A.Program, list[LoopSummary]]:
    """Replace every eligible counter loop in `p` by its exact closed form."""
    out = p.clone()
    em = _Emitter(out)
    while True:
        before = len(em.summaries)
        for fn in out.functions:
            fn.body = em.body(fn.body, fn.name)
        if len(em.summaries) == before:
            return out, em.summaries
        # Re-checking resolves types and decl backrefs on emitted nodes,
        # which the next pass needs to judge outer-loop eligibility.
        check_program(out, allow_instrumentation=True)
