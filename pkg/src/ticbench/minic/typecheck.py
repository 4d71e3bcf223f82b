"""Type checking and name resolution for MiniC programs.

Typing model (documented here once, shared bit-for-bit by the simulator,
the source interpreter and the checker engine):

* Integer promotion: any type narrower than the word width promotes to the
  signed word type; everything else is unchanged.
* Usual conversions: equal types stay; equal signedness takes the wider;
  mixed signedness takes the unsigned type when its rank is >= the signed
  rank, else the signed type (which then represents all unsigned values).
* Arithmetic wraps two's-complement in the result type (signed overflow is
  defined).  Shifts operate on the promoted left type with the count
  masked to width-1.  Division is total: see semantics module.
* Assignments, argument passing and returns convert implicitly by wrapping
  into the destination type.
* TIC amounts and assertion arithmetic evaluate in 64-bit unsigned space;
  `_time` is the only 64-bit object in a program.

Static locals are hoisted to file scope under mangled `_s_<fn>_<name>`
names so persistent state is uniform for hardening and export.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..diag import (
    E_CONST,
    E_RECURSION,
    E_REDEF,
    E_RESERVED,
    E_SYNTAX,
    E_TYPE,
    E_UNDEF,
    E_UNSUPPORTED,
    fail,
)
from . import ast as A


def promote(t: A.IType, width: int) -> A.IType:
    if t.bits == 64:
        return A.U64
    if t.bits < width:
        return A.I16 if width == 16 else A.I32
    return t


def usual_type(a: A.IType, b: A.IType, width: int) -> A.IType:
    pa, pb = promote(a, width), promote(b, width)
    if pa.bits == 64 or pb.bits == 64:
        return A.U64
    if pa == pb:
        return pa
    if pa.signed == pb.signed:
        return pa if pa.bits >= pb.bits else pb
    unsigned, signed = (pa, pb) if not pa.signed else (pb, pa)
    if unsigned.bits >= signed.bits:
        return unsigned
    return signed


def _trunc_div(l: int, r: int) -> int:
    q = abs(l) // abs(r)
    return q if (l < 0) == (r < 0) else -q


def fold_const(e: A.Expr) -> int | None:
    """Evaluate a literal-only expression, or None if not constant."""
    if isinstance(e, A.IntLit):
        return e.value
    if isinstance(e, A.Unary):
        v = fold_const(e.operand)
        if v is None:
            return None
        return {"-": -v, "~": ~v, "!": int(v == 0)}[e.op]
    if isinstance(e, A.Binary):
        l, r = fold_const(e.left), fold_const(e.right)
        if l is None or r is None:
            return None
        op = e.op
        if op == "+":
            return l + r
        if op == "-":
            return l - r
        if op == "*":
            return l * r
        if op == "/":
            return _trunc_div(l, r) if r else None
        if op == "%":
            return l - _trunc_div(l, r) * r if r else None
        if op == "&":
            return l & r
        if op == "|":
            return l | r
        if op == "^":
            return l ^ r
        if op == "<<":
            return l << r if 0 <= r < 64 else None
        if op == ">>":
            return l >> r if 0 <= r < 64 else None
        if op == "<":
            return int(l < r)
        if op == "<=":
            return int(l <= r)
        if op == ">":
            return int(l > r)
        if op == ">=":
            return int(l >= r)
        if op == "==":
            return int(l == r)
        if op == "!=":
            return int(l != r)
    return None


@dataclass
class _Ctx:
    prog: A.Program
    allow_instr: bool
    fn: A.FuncDef | None = None
    symbols: dict[str, A.VarDecl] = field(default_factory=dict)
    loop_depth: int = 0
    site_counts: dict[str, int] = field(default_factory=dict)

    @property
    def width(self) -> int:
        return self.prog.word_width

    @property
    def int_t(self) -> A.IType:
        return A.I16 if self.width == 16 else A.I32


def _check_name(name: str, loc, allow_instr: bool) -> None:
    if name.startswith("_") and not allow_instr:
        raise fail(E_RESERVED, f"identifiers starting with '_' are reserved: {name!r}", loc)


def _hoist_statics(prog: A.Program) -> None:
    for fn in prog.functions:
        renames: dict[str, str] = {}

        def strip(stmts: list[A.Stmt]) -> list[A.Stmt]:
            out: list[A.Stmt] = []
            for s in stmts:
                if isinstance(s, A.DeclStmt) and s.decl.storage == "static":
                    mangled = f"_s_{fn.name}_{s.decl.name}"
                    if s.decl.init is not None and not isinstance(s.decl.init, list):
                        if fold_const(s.decl.init) is None:
                            raise fail(
                                E_CONST, "static initializers must be constant", s.decl.loc
                            )
                    renames[s.decl.name] = mangled
                    s.decl.name = mangled
                    prog.globals.append(s.decl)
                    continue
                if isinstance(s, A.If):
                    s.then_body = strip(s.then_body)
                    s.else_body = strip(s.else_body)
                elif isinstance(s, A.While):
                    s.body = strip(s.body)
                elif isinstance(s, A.For):
                    s.body = strip(s.body)
                out.append(s)
            return out

        fn.body = strip(fn.body)
        if renames:
            for n in A.walk(fn):
                if isinstance(n, A.VarRef) and n.name in renames:
                    n.name = renames[n.name]


class _Checker:
    def __init__(self, prog: A.Program, allow_instr: bool):
        self.prog = prog
        self.allow_instr = allow_instr
        self.width = prog.word_width
        self.int_t = A.I16 if self.width == 16 else A.I32
        self.globals: dict[str, A.VarDecl] = {}
        self.funcs: dict[str, A.FuncDef] = {}

    def run(self) -> None:
        _hoist_statics(self.prog)
        for g in self.globals_order():
            if g.name in self.globals or g.name in self.funcs:
                raise fail(E_REDEF, f"redefinition of {g.name!r}", g.loc)
            if g.name == A.TIME_VAR:
                if not self.allow_instr:
                    raise fail(E_RESERVED, "'_time' is reserved for instrumentation", g.loc)
                if g.vtype != A.U64:
                    raise fail(E_TYPE, "'_time' must be 64-bit unsigned", g.loc)
            else:
                if not g.name.startswith("_s_"):
                    _check_name(g.name, g.loc, self.allow_instr)
                if isinstance(g.vtype, A.IType) and g.vtype.bits == 64:
                    raise fail(E_UNSUPPORTED, "64-bit variables are reserved for '_time'", g.loc)
            self.check_global_init(g)
            self.globals[g.name] = g
        for fn in self.prog.functions:
            if fn.name in self.funcs or fn.name in self.globals:
                raise fail(E_REDEF, f"redefinition of {fn.name!r}", fn.loc)
            _check_name(fn.name, fn.loc, self.allow_instr)
            self.funcs[fn.name] = fn
        for fn in self.prog.functions:
            self.check_function(fn)
        self.check_recursion()
        self.prog.instrumented = A.TIME_VAR in self.globals

    def globals_order(self) -> list[A.VarDecl]:
        return self.prog.globals

    def check_global_init(self, g: A.VarDecl) -> None:
        if isinstance(g.vtype, A.ArrayType):
            if isinstance(g.init, A.Expr):
                raise fail(E_TYPE, f"array {g.name!r} needs a brace initializer", g.loc)
            if isinstance(g.init, list):
                if len(g.init) > g.vtype.length:
                    raise fail(E_TYPE, f"too many initializers for {g.name!r}", g.loc)
                for item in g.init:
                    if fold_const(item) is None:
                        raise fail(E_CONST, "global initializers must be constant", item.loc)
                    self.type_expr(item, _Ctx(self.prog, self.allow_instr))
        else:
            if isinstance(g.init, list):
                raise fail(E_TYPE, f"scalar {g.name!r} cannot take a brace initializer", g.loc)
            if g.init is not None:
                if fold_const(g.init) is None:
                    raise fail(E_CONST, "global initializers must be constant", g.init.loc)
                self.type_expr(g.init, _Ctx(self.prog, self.allow_instr))

    # ---- functions

    def check_function(self, fn: A.FuncDef) -> None:
        ctx = _Ctx(self.prog, self.allow_instr, fn=fn)
        for p in fn.params:
            _check_name(p.name, p.loc, self.allow_instr)
            if p.name in ctx.symbols or p.name in self.globals:
                raise fail(E_REDEF, f"redefinition of {p.name!r}", p.loc)
            ctx.symbols[p.name] = p
        self.check_stmts(fn.body, ctx)
        if fn.ret_type is not None:
            if not fn.body or not isinstance(fn.body[-1], A.Return):
                raise fail(
                    E_TYPE, f"function {fn.name!r} must end with a return statement", fn.loc
                )

    def check_stmts(self, stmts: list[A.Stmt], ctx: _Ctx) -> None:
        for s in stmts:
            self.check_stmt(s, ctx)

    def check_stmt(self, s: A.Stmt, ctx: _Ctx) -> None:
        if isinstance(s, A.DeclStmt):
            d = s.decl
            _check_name(d.name, d.loc, self.allow_instr)
            if d.name in ctx.symbols or d.name in self.globals:
                raise fail(E_REDEF, f"redefinition of {d.name!r} (no shadowing)", d.loc)
            if isinstance(d.vtype, A.IType) and d.vtype.bits == 64:
                raise fail(E_UNSUPPORTED, "64-bit variables are reserved for '_time'", d.loc)
            ctx.symbols[d.name] = d
            if isinstance(d.vtype, A.ArrayType):
                if isinstance(d.init, A.Expr):
                    raise fail(E_TYPE, f"array {d.name!r} needs a brace initializer", d.loc)
                if isinstance(d.init, list):
                    if len(d.init) > d.vtype.length:
                        raise fail(E_TYPE, f"too many initializers for {d.name!r}", d.loc)
                    for item in d.init:
                        self.type_expr(item, ctx)
            elif isinstance(d.init, A.Expr):
                self.check_nondet_rhs_or_expr(d.init, d.name, ctx)
            elif isinstance(d.init, list):
                raise fail(E_TYPE, f"scalar {d.name!r} cannot take a brace initializer", d.loc)
        elif isinstance(s, A.Assign):
            tt = self.type_lvalue(s.target, ctx)
            if isinstance(s.target, A.VarRef) and s.target.name == A.TIME_VAR:
                if not (s.op == "=" and isinstance(s.value, A.IntLit) and s.value.value == 0):
                    raise fail(E_TYPE, "'_time' may only be reset to zero", s.loc)
                s.value.ctype = A.U64
                return
            name = (
                s.target.name
                if isinstance(s.target, A.VarRef)
                else self.indexed_site_name(s.target)
            )
            self.check_nondet_rhs_or_expr(s.value, name, ctx, allow_nondet=(s.op == "="))
            if tt.bits == 64:
                raise fail(E_TYPE, "64-bit assignment targets are not allowed", s.loc)
        elif isinstance(s, A.ExprStmt):
            if not isinstance(s.expr, A.Call):
                raise fail(E_SYNTAX, "expression statements must be calls", s.loc)
            self.type_expr(s.expr, ctx, as_stmt=True)
        elif isinstance(s, A.If):
            self.require_scalar(self.type_expr(s.cond, ctx), s.cond)
            self.check_stmts(s.then_body, ctx)
            self.check_stmts(s.else_body, ctx)
        elif isinstance(s, A.While):
            self.require_scalar(self.type_expr(s.cond, ctx), s.cond)
            ctx.loop_depth += 1
            self.check_stmts(s.body, ctx)
            ctx.loop_depth -= 1
        elif isinstance(s, A.For):
            if s.init is not None:
                self.check_stmt(s.init, ctx)
            self.require_scalar(self.type_expr(s.cond, ctx), s.cond)
            if s.step is not None:
                self.check_stmt(s.step, ctx)
            ctx.loop_depth += 1
            self.check_stmts(s.body, ctx)
            ctx.loop_depth -= 1
        elif isinstance(s, A.Break):
            if ctx.loop_depth == 0:
                raise fail(E_SYNTAX, "break outside of a loop", s.loc)
        elif isinstance(s, A.Return):
            fn = ctx.fn
            assert fn is not None
            if fn.ret_type is None:
                if s.value is not None:
                    raise fail(E_TYPE, f"void function {fn.name!r} returns a value", s.loc)
            else:
                if s.value is None:
                    raise fail(E_TYPE, f"function {fn.name!r} must return a value", s.loc)
                self.type_expr(s.value, ctx)
        elif isinstance(s, A.TicStmt):
            if not self.allow_instr:
                raise fail(E_RESERVED, "'_time' is reserved for instrumentation", s.loc)
            self.type_expr(s.amount, ctx, u64_ok=True)
        elif isinstance(s, (A.AssumeStmt, A.AssertStmt)):
            self.require_scalar(self.type_expr(s.cond, ctx, u64_ok=True), s.cond)
        else:
            raise fail(E_SYNTAX, f"unexpected statement {s.kind}", s.loc)

    def indexed_site_name(self, target: A.Index) -> str:
        k = fold_const(target.index)
        return f"{target.base.name}[{k}]" if k is not None else target.base.name

    def check_nondet_rhs_or_expr(
        self, e: A.Expr, target_name: str, ctx: _Ctx, allow_nondet: bool = True
    ) -> None:
        if isinstance(e, A.NondetExpr):
            if not allow_nondet:
                raise fail(E_TYPE, "nondet values cannot feed compound assignment", e.loc)
            fn_name = ctx.fn.name if ctx.fn else "<global>"
            base = f"{fn_name}.{target_name}"
            k = ctx.site_counts.get(base, 0)
            ctx.site_counts[base] = k + 1
            e.site = base if k == 0 else f"{base}#{k}"
            e.ctype = e.nondet_type
            return
        t = self.type_expr(e, ctx)
        self.require_scalar(t, e)

    # ---- expressions

    def type_lvalue(self, e: A.Expr, ctx: _Ctx) -> A.IType:
        if isinstance(e, A.VarRef):
            d = self.resolve(e, ctx)
            if isinstance(d.vtype, A.ArrayType):
                raise fail(E_TYPE, f"cannot assign to array {e.name!r}", e.loc)
            e.ctype = d.vtype
            return d.vtype
        if isinstance(e, A.Index):
            return self.type_index(e, ctx)
        raise fail(E_TYPE, "assignment target must be a variable or array element", e.loc)

    def resolve(self, e: A.VarRef, ctx: _Ctx) -> A.VarDecl:
        d = ctx.symbols.get(e.name) or self.globals.get(e.name)
        if d is None:
            raise fail(E_UNDEF, f"use of undeclared identifier {e.name!r}", e.loc)
        e.decl = d
        return d

    def type_index(self, e: A.Index, ctx: _Ctx) -> A.IType:
        d = self.resolve(e.base, ctx)
        if not isinstance(d.vtype, A.ArrayType):
            raise fail(E_TYPE, f"{e.base.name!r} is not an array", e.loc)
        self.require_scalar(self.type_expr(e.index, ctx), e.index)
        e.base.ctype = None
        e.ctype = d.vtype.elem
        return d.vtype.elem

    def require_scalar(self, t: A.IType | None, e: A.Expr) -> A.IType:
        if t is None:
            raise fail(E_TYPE, "arrays cannot be used as values here", e.loc)
        return t

    def type_expr(
        self, e: A.Expr, ctx: _Ctx, u64_ok: bool = False, as_stmt: bool = False
    ) -> A.IType | None:
        """Returns the expression type; None marks a whole-array reference."""
        if isinstance(e, A.IntLit):
            v = e.value
            for cand in (ctx.int_t, A.I32, A.U32):
                if cand.contains(v):
                    e.ctype = cand
                    break
            else:
                if u64_ok and A.U64.contains(v):
                    e.ctype = A.U64
                else:
                    raise fail(E_CONST, f"integer literal {v} out of range", e.loc)
            return e.ctype
        if isinstance(e, A.VarRef):
            if e.name == A.TIME_VAR:
                if not (self.allow_instr and u64_ok):
                    raise fail(E_RESERVED, "'_time' cannot be read by program logic", e.loc)
                e.ctype = A.U64
                return A.U64
            d = self.resolve(e, ctx)
            if isinstance(d.vtype, A.ArrayType):
                e.ctype = None
                return None
            e.ctype = d.vtype
            return d.vtype
        if isinstance(e, A.Index):
            return self.type_index(e, ctx)
        if isinstance(e, A.Unary):
            t = self.require_scalar(self.type_expr(e.operand, ctx, u64_ok), e.operand)
            if e.op == "!":
                e.ctype = ctx.int_t
            else:
                e.ctype = promote(t, self.width)
            return e.ctype
        if isinstance(e, A.Binary):
            lt = self.require_scalar(self.type_expr(e.left, ctx, u64_ok), e.left)
            rt = self.require_scalar(self.type_expr(e.right, ctx, u64_ok), e.right)
            if (lt.bits == 64 or rt.bits == 64) and not u64_ok:
                raise fail(E_TYPE, "64-bit arithmetic is reserved for instrumentation", e.loc)
            if e.op in ("<", "<=", ">", ">=", "==", "!="):
                e.ctype = ctx.int_t
            elif e.op in ("<<", ">>"):
                # Instrumentation arithmetic runs in 64-bit unsigned space,
                # so accelerated amounts like `_k1 * c` cannot wrap early.
                e.ctype = A.U64 if u64_ok else promote(lt, self.width)
            else:
                e.ctype = A.U64 if u64_ok else usual_type(lt, rt, self.width)
            return e.ctype
        if isinstance(e, A.Call):
            fn = self.funcs.get(e.name)
            if fn is None:
                raise fail(E_UNDEF, f"call to undefined function {e.name!r}", e.loc)
            if len(e.args) != len(fn.params):
                raise fail(
                    E_TYPE,
                    f"{e.name!r} expects {len(fn.params)} arguments, got {len(e.args)}",
                    e.loc,
                )
            for arg, param in zip(e.args, fn.params):
                at = self.type_expr(arg, ctx)
                if isinstance(param.vtype, A.ArrayType):
                    if at is not None or not isinstance(arg, A.VarRef):
                        raise fail(E_TYPE, f"argument for {param.name!r} must be an array", arg.loc)
                    decl = arg.decl
                    assert decl is not None and isinstance(decl.vtype, A.ArrayType)
                    if decl.vtype != param.vtype:
                        raise fail(
                            E_TYPE,
                            f"array argument {arg.name!r} is {decl.vtype}, expected {param.vtype}",
                            arg.loc,
                        )
                else:
                    self.require_scalar(at, arg)
            if fn.ret_type is None:
                if not as_stmt:
                    raise fail(E_TYPE, f"void call {e.name!r} used as a value", e.loc)
                e.ctype = ctx.int_t
                return e.ctype
            e.ctype = fn.ret_type
            return e.ctype
        if isinstance(e, A.NondetExpr):
            raise fail(
                E_TYPE, "nondet values may only appear as the whole right side of '='", e.loc
            )
        raise fail(E_SYNTAX, f"unexpected expression {e.kind}", e.loc)

    # ---- recursion

    def check_recursion(self) -> None:
        from .callgraph import call_graph

        call_graph(self.prog)  # raises E_RECURSION on cycles


def check_program(prog: A.Program, allow_instrumentation: bool = False) -> None:
    _Checker(prog, allow_instrumentation).run()
