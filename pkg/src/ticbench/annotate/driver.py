"""Analysis driver synthesis.

The checker and the interpreter both need a closed program: every input
must come from an explicit nondeterministic site.  `build_driver` appends
a `_driver` function that

  * resets `_time` (when the program is instrumented),
  * assigns a fresh nondet value to every persistent-state cell, i.e.
    each global scalar and each array element, unless hardening is
    turned off,
  * declares one local per entry parameter, fills it from a nondet site
    (elementwise for arrays), and
  * calls the entry function, discarding its result.

Hardening makes the verdict hold for *any* prior activation history: a
global's declared initializer only describes the very first activation,
so keeping it would let the search undercount later ones.  Dropping
hardening is an explicit opt-in for single-activation questions.
"""
from __future__ import annotations

from ..diag import fail, E_DRIVER
from ..minic import ast as A
from ..minic.typecheck import check_program

DRIVER_NAME = "_driver"


def _nid(role: str, ordinal: int) -> str:
    return A.synth_id(DRIVER_NAME, role, ordinal)


class _Seq:
    def __init__(self) -> None:
        self.n = 0

    def next(self) -> int:
        self.n += 1
        return self.n - 1


def _nondet_store(name: str, vtype: A.IType, index: int | None,
                  seq: _Seq) -> A.Assign:
    k = seq.next()
    rhs = A.NondetExpr(nondet_type=vtype, nid=_nid("nondet", k))
    if index is None:
        target: A.VarRef | A.Index = A.VarRef(name, nid=_nid("target", k))
    else:
        target = A.Index(
            A.VarRef(name, nid=_nid("target-base", k)),
            A.IntLit(index, nid=_nid("target-index", k)),
            nid=_nid("target", k))
    return A.Assign(target=target, op="=", value=rhs, nid=_nid("store", k))


def harden_persistent_state(prog: A.Program, seq: _Seq | None = None) -> list[A.Stmt]:
    """Statements overwriting every global cell with a nondet value."""
    seq = seq or _Seq()
    out: list[A.Stmt] = []
    for g in prog.globals:
        if g.name == A.TIME_VAR:
            continue
        if isinstance(g.vtype, A.ArrayType):
            out.extend(_nondet_store(g.name, g.vtype.elem, k, seq)
                       for k in range(g.vtype.length))
        else:
            out.append(_nondet_store(g.name, g.vtype, None, seq))
    return out


def build_driver(prog: A.Program, entry: str, *, harden: bool = True) -> A.Program:
    """Return a copy of `prog` closed off by a `_driver` calling `entry`."""
    try:
        prog.function(entry)
    except KeyError:
        raise fail(E_DRIVER, f"entry function {entry!r} is not defined") from None
    if prog.driver:
        raise fail(E_DRIVER, f"program already has driver {prog.driver!r}")
    out = prog.clone()
    seq = _Seq()
    body: list[A.Stmt] = []
    if out.instrumented:
        k = seq.next()
        body.append(A.Assign(
            target=A.VarRef(A.TIME_VAR, nid=_nid("target", k)), op="=",
            value=A.IntLit(0, nid=_nid("zero", k)), nid=_nid("reset", k)))
    hardened: list[str] = []
    if harden:
        body.extend(harden_persistent_state(out, seq))
        hardened = [g.name for g in out.globals if g.name != A.TIME_VAR]
    args: list[A.Expr] = []
    for p in out.function(entry).params:
        local = f"_a_{p.name}"
        k = seq.next()
        if isinstance(p.vtype, A.ArrayType):
            decl = A.VarDecl(name=local, vtype=p.vtype, storage="local",
                             nid=_nid("arg-decl", k))
            body.append(A.DeclStmt(decl=decl, nid=_nid("arg", k)))
            body.extend(_nondet_store(local, p.vtype.elem, i, seq)
                        for i in range(p.vtype.length))
        else:
            decl = A.VarDecl(
                name=local, vtype=p.vtype, storage="local",
                init=A.NondetExpr(nondet_type=p.vtype, nid=_nid("arg-nondet", k)),
                nid=_nid("arg-decl", k))
            body.append(A.DeclStmt(decl=decl, nid=_nid("arg", k)))
        args.append(A.VarRef(local, nid=_nid("arg-ref", k)))
    kc = seq.next()
    body.append(A.ExprStmt(
        expr=A.Call(entry, args, nid=_nid("call-expr", kc)), nid=_nid("call", kc)))
    out.functions.append(A.FuncDef(
        name=DRIVER_NAME, ret_type=None, params=[], body=body,
        nid=_nid("fn", 0), loc=A.Loc("<driver>")))
    out.driver = DRIVER_NAME
    out.entry = entry
    out.hardened = hardened
    check_program(out, allow_instrumentation=True)
    return out
