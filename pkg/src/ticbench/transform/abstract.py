"""Loop abstraction: over-approximating closed forms for branchy loops.

Acceleration requires straight-line bodies; this stage handles the
constant-bound counter loops it left behind, at the price of precision
instead of exactness.  A loop qualifies when its body consists of
timing increments, assignments, declarations, `if` statements, `break`
and `return`, with no calls and with the counter itself untouched.  It
is replaced by

    _k0_j = a;  _k1_j = <trip count>;
    <every variable the body assigns set to a fresh nondet value>;
    _time += _k1_j*(c1 + c2 + ...) + _k1_j*m1 + ...;
    <counter exit value>;

where the parenthesized sum collects the body's unconditional
increments and each `m` term is the costlier side of one top-level
branch.  Releasing the written variables to nondet admits every value
trajectory the original had (and more), and charging the longest
branch every iteration can only increase `_time`, so the worst case
over the abstracted program bounds the real worst case from above.
The counter stays exact: its trip count is the same numeric walk
acceleration uses.

Early exits become nondeterministic: a `break` draws the charged
iteration count `_n_j` and the counter's step count `_m_j` fresh with
`assume(_m_j <= _n_j <= _k1_j)`, covering an exit at any point in
either direction of the time axis, and a `return` draws a boolean
`_r_j` that decides after the loop whether the function leaves with a
fresh nondet result.  Charging whole iterations for a partial one is
sound because a prefix of a body path never out-costs the straight
sum plus the branch maximum.

Loops that do not qualify (non-constant bounds, calls, nested loops
that resisted abstraction themselves, assumptions, assertions) are
left syntactically intact for the checker's unwinding mechanism.
"""
from __future__ import annotations

from typing import Optional

from ..minic import ast as A
from ..minic.typecheck import check_program
from .accel import (
    LoopSummary,
    _PRINT,
    _fold_env,
    _lit,
    _recognize,
    const_trip,
    fold_const,
)


class _NotEligible(Exception):
    pass


class _Profile:
    def __init__(self):
        self.straight: list[int] = []
        self.branch: list[int] = []
        self.assigned: list[str] = []
        self.dirty: set[str] = set()
        self.breaks = False
        self.returns = False
        # True once any two alternative paths cost different amounts; the
        # max charge then over-approximates `_time` even with nothing
        # havocked.
        self.approx = False

    def cost(self) -> int:
        return sum(self.straight) + sum(self.branch)


def _body_profile(stmts: list[A.Stmt], env: dict[str, int], counter: str,
                  local: set[str]) -> _Profile:
    """Cost and effect summary of one nesting level of a loop body.

    Costs inside an `if` fold into that branch's recursive maximum,
    matching the one-term-per-top-level-branch shape.  `local` holds
    names scoped to this level or tighter; assignments to them stay
    out of the havoc set but still land in `dirty`, which callers use
    to invalidate constant tracking across the branch.
    """
    pr = _Profile()
    for st in stmts:
        if isinstance(st, A.TicStmt):
            v = _fold_env(st.amount, env)
            if v is None or not 0 <= v < (1 << 64):
                raise _NotEligible
            pr.straight.append(v)
        elif isinstance(st, A.DeclStmt):
            d = st.decl
            if isinstance(d.init, A.Expr) and not isinstance(d.vtype, A.ArrayType):
                v = _fold_env(d.init, env)
                if v is not None:
                    env[d.name] = v
            local.add(d.name)
        elif isinstance(st, A.Assign):
            t = st.target
            base = t.name if isinstance(t, A.VarRef) else t.base.name
            if base == counter:
                raise _NotEligible
            pr.dirty.add(base)
            env.pop(base, None)
            if st.op == "=" and isinstance(t, A.VarRef):
                v = _fold_env(st.value, env)
                if v is not None:
                    env[base] = v
            if base not in local and base not in pr.assigned:
                pr.assigned.append(base)
        elif isinstance(st, A.If):
            tp = _body_profile(st.then_body, dict(env), counter, set(local))
            ep = _body_profile(st.else_body, dict(env), counter, set(local))
            pr.branch.append(max(tp.cost(), ep.cost()))
            for name in tp.assigned + ep.assigned:
                if name not in local and name not in pr.assigned:
                    pr.assigned.append(name)
            pr.dirty |= tp.dirty | ep.dirty
            for name in tp.dirty | ep.dirty:
                env.pop(name, None)
            pr.breaks |= tp.breaks or ep.breaks
            pr.returns |= tp.returns or ep.returns
            pr.approx |= tp.approx or ep.approx or tp.cost() != ep.cost()
        elif isinstance(st, A.Break):
            pr.breaks = True
        elif isinstance(st, A.Return):
            pr.returns = True
        else:
            raise _NotEligible
    return pr


def _decl_of(prog: A.Program, fn: A.FuncDef, name: str) -> Optional[A.VarDecl]:
    for p in fn.params:
        if p.name == name:
            return p
    for n in A.walk(fn):
        if isinstance(n, A.DeclStmt) and n.decl.name == name:
            return n.decl
    for g in prog.globals:
        if g.name == name:
            return g
    return None


class _Abstractor:
    def __init__(self, prog: A.Program):
        self.prog = prog
        self.summaries: list[LoopSummary] = []

    def run(self) -> A.Program:
        while True:
            before = len(self.summaries)
            for fn in self.prog.functions:
                fn.body = self.body(fn.body, fn)
            if len(self.summaries) == before:
                return self.prog
            check_program(self.prog, allow_instrumentation=True)

    def body(self, stmts: list[A.Stmt], fn: A.FuncDef) -> list[A.Stmt]:
        out: list[A.Stmt] = []
        for idx, s in enumerate(stmts):
            if isinstance(s, A.If):
                s.then_body = self.body(s.then_body, fn)
                s.else_body = self.body(s.else_body, fn)
            elif isinstance(s, A.While):
                s.body = self.body(s.body, fn)
            elif isinstance(s, A.For):
                s.body = self.body(s.body, fn)
                following = stmts[idx + 1] if idx + 1 < len(stmts) else None
                rep = self.try_loop(s, following, fn)
                if rep is not None:
                    out.extend(rep)
                    continue
            out.append(s)
        return out

    def try_loop(self, loop: A.For, following: Optional[A.Stmt],
                 fn: A.FuncDef) -> Optional[list[A.Stmt]]:
        head = _recognize(loop)
        if head is None:
            return None
        walked = const_trip(head, self.prog.word_width)
        if walked is None:
            return None
        a, n, i_final = walked
        if any(isinstance(x, A.Call) for st in loop.body for x in A.walk(st)):
            return None
        try:
            pr = _body_profile(loop.body, {}, head.counter, set())
        except _NotEligible:
            return None
        j = len(self.summaries)
        seq = [0]

        def nid() -> str:
            seq[0] += 1
            return A.synth_id(loop.nid, "abstract", seq[0])

        def decl(name: str, vt: A.IType, init: A.Expr) -> A.DeclStmt:
            return A.DeclStmt(A.VarDecl(name, vt, "local", init, nid=nid()),
                              nid=nid())

        def var(name: str) -> A.VarRef:
            return A.VarRef(name, nid=nid())

        def gate(name: str, upper: str) -> list[A.Stmt]:
            return [decl(name, A.U32, A.NondetExpr(A.U32, nid=nid())),
                    A.AssumeStmt(A.Binary("<=", var(name), var(upper),
                                          nid=nid()), nid=nid())]

        t = head.ctype
        k0, k1 = f"_k0_{j}", f"_k1_{j}"
        early = pr.breaks or pr.returns
        out = [decl(k0, t, _lit(a, nid=nid())),
               decl(k1, A.U32, _lit(n, nid=nid()))]
        rec: dict[str, str] = {}
        count = k1
        if early:
            count = f"_n_{j}"
            out.extend(gate(count, k1))
            rec[count] = "nondet"
        if pr.breaks and not head.scoped:
            out.extend(gate(f"_m_{j}", count))
            rec[f"_m_{j}"] = "nondet"
        for name in pr.assigned:
            d = _decl_of(self.prog, fn, name)
            if d is None:
                return None
            rec[name] = "nondet"
            if isinstance(d.vtype, A.ArrayType):
                for k in range(d.vtype.length):
                    tgt = A.Index(var(name), A.IntLit(k, nid=nid()), nid=nid())
                    out.append(A.Assign(tgt, "=",
                                        A.NondetExpr(d.vtype.elem, nid=nid()),
                                        nid=nid()))
            else:
                out.append(A.Assign(var(name), "=",
                                    A.NondetExpr(d.vtype, nid=nid()), nid=nid()))
        amount: Optional[A.Expr] = None
        if pr.straight:
            inner: A.Expr = _lit(pr.straight[0], nid=nid())
            for c in pr.straight[1:]:
                inner = A.Binary("+", inner, _lit(c, nid=nid()), nid=nid())
            amount = A.Binary("*", var(count), inner, nid=nid())
        for m in pr.branch:
            term = A.Binary("*", var(count), _lit(m, nid=nid()), nid=nid())
            amount = term if amount is None else A.Binary("+", amount, term,
                                                          nid=nid())
        if amount is not None:
            out.append(A.TicStmt(amount, nid=nid()))
        if pr.approx:
            rec[A.TIME_VAR] = "nondet"
        if not head.scoped:
            if pr.breaks:
                steps = A.Binary("*", var(f"_m_{j}"),
                                 _lit(abs(head.delta), nid=nid()), nid=nid())
                op = "+" if head.delta > 0 else "-"
                value: A.Expr = A.Binary(op, var(k0), steps, nid=nid())
            else:
                value = _lit(i_final, nid=nid())
            out.append(A.Assign(var(head.counter), "=", value, nid=nid()))
            rec[head.counter] = _PRINT.expr(value)
        if pr.returns:
            r = f"_r_{j}"
            out.append(decl(r, A.U32, A.NondetExpr(A.U32, nid=nid())))
            out.append(A.AssumeStmt(
                A.Binary("<=", var(r), A.IntLit(1, nid=nid()), nid=nid()),
                nid=nid()))
            rec[r] = "nondet"
            body: list[A.Stmt] = []
            if fn.ret_type is None:
                body.append(A.Return(None, nid=nid()))
            else:
                rv = f"_rv_{j}"
                body.append(decl(rv, fn.ret_type,
                                 A.NondetExpr(fn.ret_type, nid=nid())))
                body.append(A.Return(var(rv), nid=nid()))
            out.append(A.If(A.Binary("==", var(r), A.IntLit(1, nid=nid()),
                                     nid=nid()),
                            body, [], nid=nid()))
        cond_cost = 0
        if isinstance(following, A.TicStmt):
            v = fold_const(following.amount)
            cond_cost = v if v is not None else 0
        self.summaries.append(LoopSummary(
            loop.nid, fn.name, head.counter, k0, k1, n, rec,
            _PRINT.expr(amount) if amount is not None else "0", cond_cost))
        return out


def abstract_loops(p: A.Program) -> tuple[A.Program, list[LoopSummary]]:
    """Over-approximate every qualifying constant-bound loop in `p`."""
    out = p.clone()
    ab = _Abstractor(out)
    return ab.run(), ab.summaries
