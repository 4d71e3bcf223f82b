"""Canonical MiniC source emission.

Types are spelled with their stdint names so emitted text is
width-independent (a program parsed at width 16 re-parses identically at
any width).  `parse(pretty_print(parse(s)))` is structurally equal to
`parse(s)`; instrumented programs re-parse with allow_instrumentation.
"""
from __future__ import annotations

from . import ast as A

_PREC = {
    "*": 10, "/": 10, "%": 10,
    "+": 9, "-": 9,
    "<<": 8, ">>": 8,
    "<": 7, "<=": 7, ">": 7, ">=": 7,
    "==": 6, "!=": 6,
    "&": 5, "^": 4, "|": 3,
}


class Printer:
    """Emits canonical text; subclassed by the C exporter to re-spell intrinsics."""

    indent_unit = "    "

    def type_name(self, t: A.VarType) -> str:
        if isinstance(t, A.ArrayType):
            return self.type_name(t.elem)
        return t.name

    def nondet_name(self, t: A.IType) -> str:
        return f"nondet_{'i' if t.signed else 'u'}{t.bits}"

    # ---- expressions

    def expr(self, e: A.Expr) -> str:
        if isinstance(e, A.IntLit):
            return str(e.value)
        if isinstance(e, A.VarRef):
            return e.name
        if isinstance(e, A.Index):
            return f"{e.base.name}[{self.expr(e.index)}]"
        if isinstance(e, A.Unary):
            inner = self.expr(e.operand)
            if isinstance(e.operand, A.Binary):
                inner = f"({inner})"
            elif e.op == "-" and isinstance(e.operand, A.Unary) and e.operand.op == "-":
                inner = f"({inner})"
            return f"{e.op}{inner}"
        if isinstance(e, A.Binary):
            p = _PREC[e.op]
            lhs = self.expr(e.left)
            rhs = self.expr(e.right)
            if isinstance(e.left, A.Binary) and _PREC[e.left.op] < p:
                lhs = f"({lhs})"
            if isinstance(e.right, A.Binary) and _PREC[e.right.op] <= p:
                rhs = f"({rhs})"
            return f"{lhs} {e.op} {rhs}"
        if isinstance(e, A.Call):
            return f"{e.name}({', '.join(self.expr(a) for a in e.args)})"
        if isinstance(e, A.NondetExpr):
            return f"{self.nondet_name(e.nondet_type)}()"
        raise TypeError(f"cannot print {e!r}")

    # ---- statements

    def decl_text(self, d: A.VarDecl) -> str:
        prefix = "static " if d.storage == "static" else ""
        if isinstance(d.vtype, A.ArrayType):
            text = f"{prefix}{self.type_name(d.vtype)} {d.name}[{d.vtype.length}]"
            if isinstance(d.init, list):
                items = ", ".join(self.expr(i) for i in d.init)
                text += f" = {{{items}}}"
            return text
        text = f"{prefix}{self.type_name(d.vtype)} {d.name}"
        if isinstance(d.init, A.Expr):
            text += f" = {self.expr(d.init)}"
        return text

    def assume_text(self, cond: str) -> str:
        return f"assume({cond});"

    def assert_text(self, cond: str, label: str) -> str:
        return f"assert({cond});"

    def tic_text(self, s: A.TicStmt) -> str:
        return f"{A.TIME_VAR} += {self.expr(s.amount)};"

    def stmt(self, s: A.Stmt, depth: int, out: list[str]) -> None:
        pad = self.indent_unit * depth

        def emit(text: str) -> None:
            out.append(pad + text)

        if isinstance(s, A.DeclStmt):
            emit(self.decl_text(s.decl) + ";")
        elif isinstance(s, A.Assign):
            emit(f"{self.expr(s.target)} {s.op} {self.expr(s.value)};")
        elif isinstance(s, A.ExprStmt):
            emit(self.expr(s.expr) + ";")
        elif isinstance(s, A.TicStmt):
            emit(self.tic_text(s))
        elif isinstance(s, A.AssumeStmt):
            emit(self.assume_text(self.expr(s.cond)))
        elif isinstance(s, A.AssertStmt):
            emit(self.assert_text(self.expr(s.cond), s.label))
        elif isinstance(s, A.Break):
            emit("break;")
        elif isinstance(s, A.Return):
            emit(f"return {self.expr(s.value)};" if s.value is not None else "return;")
        elif isinstance(s, A.If):
            emit(f"if ({self.expr(s.cond)}) {{")
            for inner in s.then_body:
                self.stmt(inner, depth + 1, out)
            if s.else_body:
                emit("} else {")
                for inner in s.else_body:
                    self.stmt(inner, depth + 1, out)
            emit("}")
        elif isinstance(s, A.While):
            emit(f"while ({self.expr(s.cond)}) {{")
            for inner in s.body:
                self.stmt(inner, depth + 1, out)
            emit("}")
        elif isinstance(s, A.For):
            init = ""
            if isinstance(s.init, A.DeclStmt):
                init = self.decl_text(s.init.decl)
            elif isinstance(s.init, A.Assign):
                init = f"{self.expr(s.init.target)} {s.init.op} {self.expr(s.init.value)}"
            step = ""
            if s.step is not None:
                step = f"{self.expr(s.step.target)} {s.step.op} {self.expr(s.step.value)}"
            emit(f"for ({init}; {self.expr(s.cond)}; {step}) {{")
            for inner in s.body:
                self.stmt(inner, depth + 1, out)
            emit("}")
        else:
            raise TypeError(f"cannot print {s!r}")

    # ---- top level

    def global_decl(self, d: A.VarDecl, out: list[str]) -> None:
        if d.name == A.TIME_VAR:
            out.append(f"uint64_t {A.TIME_VAR} = 0;")
            return
        out.append(self.decl_text(d) + ";")

    def function(self, fn: A.FuncDef, out: list[str]) -> None:
        ret = "void" if fn.ret_type is None else self.type_name(fn.ret_type)
        params = []
        for p in fn.params:
            if isinstance(p.vtype, A.ArrayType):
                params.append(f"{self.type_name(p.vtype)} {p.name}[{p.vtype.length}]")
            else:
                params.append(f"{self.type_name(p.vtype)} {p.name}")
        out.append(f"{ret} {fn.name}({', '.join(params) or 'void'}) {{")
        for s in fn.body:
            self.stmt(s, 1, out)
        out.append("}")

    def program(self, prog: A.Program) -> str:
        out: list[str] = []
        for d in prog.globals:
            self.global_decl(d, out)
        if prog.globals:
            out.append("")
        for i, fn in enumerate(prog.functions):
            if i:
                out.append("")
            self.function(fn, out)
        return "\n".join(out) + "\n"


def pretty_print(prog: A.Program) -> str:
    return Printer().program(prog)
