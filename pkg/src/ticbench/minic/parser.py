"""Recursive-descent parser producing a type-checked Program.

`parse(src, file, word_width)` is the frontend entry point.  The word width
(16 or 32) resolves the `int`/`unsigned` spellings; all other type spellings
are width-independent.  With allow_instrumentation=True the parser also
accepts the instrumentation dialect: `_time` (u64 counter), TIC statements,
assume/assert, nondet_* intrinsics and underscore-prefixed identifiers, so
instrumented programs round-trip through text.
"""
from __future__ import annotations

from ..diag import E_SYNTAX, E_UNSUPPORTED, Loc, fail
from . import ast as A
from .lexer import Token, tokenize
from .typecheck import check_program

_ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "<<=", ">>=", "&=", "|=", "^="}

_BIN_PREC = {
    "*": 10, "/": 10, "%": 10,
    "+": 9, "-": 9,
    "<<": 8, ">>": 8,
    "<": 7, "<=": 7, ">": 7, ">=": 7,
    "==": 6, "!=": 6,
    "&": 5, "^": 4, "|": 3,
}

_NONDET_NAMES = {
    "nondet_i8": A.I8, "nondet_u8": A.U8,
    "nondet_i16": A.I16, "nondet_u16": A.U16,
    "nondet_i32": A.I32, "nondet_u32": A.U32,
}

_STDINT_NAMES = {
    "int8_t": A.I8, "uint8_t": A.U8,
    "int16_t": A.I16, "uint16_t": A.U16,
    "int32_t": A.I32, "uint32_t": A.U32,
}


class _Parser:
    def __init__(self, toks: list[Token], file: str, width: int, allow_instr: bool):
        self.toks = toks
        self.pos = 0
        self.file = file
        self.width = width
        self.allow_instr = allow_instr
        self.int_t = A.I16 if width == 16 else A.I32
        self.uint_t = A.U16 if width == 16 else A.U32

    # ---- cursor helpers

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def expect(self, kind: str, what: str = "") -> Token:
        t = self.peek()
        if t.kind != kind:
            raise fail(E_SYNTAX, f"expected {what or kind!r}, found {t.text or t.kind!r}", t.loc)
        return self.next()

    def error(self, msg: str, tok: Token | None = None):
        t = tok or self.peek()
        raise fail(E_SYNTAX, msg, t.loc)

    def span_from(self, start: Token) -> tuple[int, int]:
        prev = self.toks[max(self.pos - 1, 0)]
        return (start.offset, prev.offset + len(prev.text))

    # ---- types

    def at_type(self) -> bool:
        t = self.peek()
        if t.kind == "kw" and t.text in (
            "int", "unsigned", "signed", "char", "short", "long", "void", "static", "const"
        ):
            return True
        if t.kind == "ident" and t.text in _STDINT_NAMES:
            return True
        if t.kind == "ident" and t.text == "uint":
            return True
        if self.allow_instr and t.kind == "ident" and t.text == "uint64_t":
            return True
        return False

    def parse_type(self) -> tuple[A.IType | None, str, str]:
        """Returns (type or None for void, storage, spelling)."""
        storage = "local"
        while self.at("kw", "static") or self.at("kw", "const"):
            if self.peek().text == "static":
                storage = "static"
            self.next()
        t = self.peek()
        words: list[str] = []
        while self.peek().kind == "kw" and self.peek().text in (
            "int", "unsigned", "signed", "char", "short", "long", "void"
        ):
            words.append(self.next().text)
        if not words:
            if self.peek().kind == "ident":
                name = self.peek().text
                if name in _STDINT_NAMES:
                    self.next()
                    return _STDINT_NAMES[name], storage, name
                if name == "uint":
                    self.next()
                    return self.uint_t, storage, name
                if name == "uint64_t" and self.allow_instr:
                    self.next()
                    return A.U64, storage, name
            self.error("expected a type", t)
        spelling = " ".join(words)
        mapping = {
            "void": None,
            "char": A.I8, "signed char": A.I8, "unsigned char": A.U8,
            "short": A.I16, "signed short": A.I16, "short int": A.I16,
            "unsigned short": A.U16, "unsigned short int": A.U16,
            "int": self.int_t, "signed": self.int_t, "signed int": self.int_t,
            "unsigned": self.uint_t, "unsigned int": self.uint_t,
            "long": A.I32, "long int": A.I32, "signed long": A.I32,
            "unsigned long": A.U32, "unsigned long int": A.U32,
        }
        if spelling in ("unsigned long long", "long long unsigned", "unsigned long long int"):
            if self.allow_instr:
                return A.U64, storage, spelling
            raise fail(E_UNSUPPORTED, "64-bit types are reserved for the timing counter", t.loc)
        if spelling not in mapping:
            raise fail(E_UNSUPPORTED, f"unsupported type spelling {spelling!r}", t.loc)
        return mapping[spelling], storage, spelling

    # ---- expressions

    def parse_expr(self, min_prec: int = 0) -> A.Expr:
        lhs = self.parse_unary()
        while True:
            t = self.peek()
            if t.kind in ("&&", "||"):
                self.error(
                    f"short-circuit {t.kind!r} is not in the language; rewrite as nested if", t
                )
            if t.kind == "?":
                self.error("conditional expressions are not in the language; use if/else", t)
            prec = _BIN_PREC.get(t.kind)
            if prec is None or prec < min_prec:
                return lhs
            self.next()
            rhs = self.parse_expr(prec + 1)
            node = A.Binary(op=t.kind, left=lhs, right=rhs)
            node.span = (lhs.span[0], rhs.span[1])
            node.loc = t.loc
            lhs = node

    def parse_unary(self) -> A.Expr:
        t = self.peek()
        if t.kind in ("-", "~", "!"):
            self.next()
            operand = self.parse_unary()
            node = A.Unary(op=t.kind, operand=operand)
            node.span = (t.offset, operand.span[1])
            node.loc = t.loc
            return node
        if t.kind == "+":
            self.next()
            return self.parse_unary()
        return self.parse_postfix()

    def parse_postfix(self) -> A.Expr:
        t = self.peek()
        if t.kind == "int":
            self.next()
            node = A.IntLit(value=t.value)
            node.span = (t.offset, t.offset + len(t.text))
            node.loc = t.loc
            return node
        if t.kind == "(":
            self.next()
            e = self.parse_expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            self.next()
            if self.at("("):
                self.next()
                args: list[A.Expr] = []
                if not self.at(")"):
                    args.append(self.parse_expr())
                    while self.at(","):
                        self.next()
                        args.append(self.parse_expr())
                self.expect(")")
                if t.text in _NONDET_NAMES:
                    if args:
                        self.error("nondet intrinsics take no arguments", t)
                    node: A.Expr = A.NondetExpr(nondet_type=_NONDET_NAMES[t.text])
                else:
                    node = A.Call(name=t.text, args=args)
                node.span = self.span_from(t)
                node.loc = t.loc
                return node
            base = A.VarRef(name=t.text)
            base.span = (t.offset, t.offset + len(t.text))
            base.loc = t.loc
            if self.at("["):
                self.next()
                idx = self.parse_expr()
                self.expect("]")
                node = A.Index(base=base, index=idx)
                node.span = self.span_from(t)
                node.loc = t.loc
                return node
            return base
        self.error(f"expected an expression, found {t.text or t.kind!r}")
        raise AssertionError

    # ---- statements

    def parse_block(self) -> list[A.Stmt]:
        self.expect("{")
        stmts: list[A.Stmt] = []
        while not self.at("}"):
            if self.at("eof"):
                self.error("unexpected end of input inside a block")
            stmts.extend(self.parse_stmt())
        self.expect("}")
        return stmts

    def parse_body_or_stmt(self) -> list[A.Stmt]:
        if self.at("{"):
            return self.parse_block()
        return self.parse_stmt()

    def parse_stmt(self) -> list[A.Stmt]:
        t = self.peek()
        if self.at_type():
            return self.parse_decl_stmt()
        if t.kind == "kw" and t.text == "if":
            return [self.parse_if()]
        if t.kind == "kw" and t.text == "while":
            return [self.parse_while()]
        if t.kind == "kw" and t.text == "for":
            return [self.parse_for()]
        if t.kind == "kw" and t.text == "break":
            self.next()
            self.expect(";")
            node = A.Break()
            node.span, node.loc = self.span_from(t), t.loc
            return [node]
        if t.kind == "kw" and t.text == "return":
            self.next()
            value = None if self.at(";") else self.parse_expr()
            self.expect(";")
            node = A.Return(value=value)
            node.span, node.loc = self.span_from(t), t.loc
            return [node]
        if t.kind == "{":
            self.error("bare blocks are not in the language; declare at function scope")
        if t.kind == "ident" and t.text in ("assume", "assert") and self.peek(1).kind == "(":
            self.next()
            self.next()
            cond = self.parse_expr()
            self.expect(")")
            self.expect(";")
            node = A.AssumeStmt(cond=cond) if t.text == "assume" else A.AssertStmt(cond=cond)
            node.span, node.loc = self.span_from(t), t.loc
            return [node]
        return [self.parse_simple_stmt()]

    def parse_simple_stmt(self) -> A.Stmt:
        t = self.peek()
        e = self.parse_postfix() if self.peek().kind == "ident" else self.parse_expr()
        if self.peek().kind in _ASSIGN_OPS:
            if not isinstance(e, (A.VarRef, A.Index)):
                self.error("assignment target must be a variable or array element", t)
            op = self.next().kind
            value = self.parse_expr()
            self.expect(";")
            if isinstance(e, A.VarRef) and e.name == A.TIME_VAR:
                if op == "=":
                    # Drivers reset the counter; anything else is a TIC.
                    node: A.Stmt = A.Assign(target=e, op="=", value=value)
                elif op != "+=":
                    self.error("the timing counter only supports '+=' and '= 0'", t)
                else:
                    node = A.TicStmt(amount=value)
            else:
                node = A.Assign(target=e, op=op, value=value)
            node.span, node.loc = self.span_from(t), t.loc
            return node
        if self.peek().kind in ("++", "--"):
            if not isinstance(e, (A.VarRef, A.Index)):
                self.error("increment target must be a variable or array element", t)
            op = "+=" if self.next().kind == "++" else "-="
            self.expect(";")
            one = A.IntLit(value=1)
            one.span, one.loc = (t.offset, t.offset), t.loc
            node = A.Assign(target=e, op=op, value=one)
            node.span, node.loc = self.span_from(t), t.loc
            return node
        if isinstance(e, A.Call):
            self.expect(";")
            node = A.ExprStmt(expr=e)
            node.span, node.loc = self.span_from(t), t.loc
            return node
        self.error("expression statements must be calls or assignments", t)
        raise AssertionError

    def parse_decl_core(self, vtype: A.IType | None, storage: str, spelling: str) -> A.VarDecl:
        name_tok = self.expect("ident", "a variable name")
        if vtype is None:
            self.error("variables cannot have void type", name_tok)
        decl_type: A.VarType = vtype
        if self.at("["):
            self.next()
            size_tok = self.peek()
            size_expr = self.parse_expr()
            self.expect("]")
            if not isinstance(size_expr, A.IntLit) or size_expr.value <= 0:
                raise fail(E_SYNTAX, "array length must be a positive integer literal", size_tok.loc)
            decl_type = A.ArrayType(vtype, size_expr.value)
        init: A.Expr | list[A.Expr] | None = None
        if self.at("="):
            self.next()
            if self.at("{"):
                self.next()
                items = [self.parse_expr()]
                while self.at(","):
                    self.next()
                    if self.at("}"):
                        break
                    items.append(self.parse_expr())
                self.expect("}")
                init = items
            else:
                init = self.parse_expr()
        decl = A.VarDecl(name=name_tok.text, vtype=decl_type, storage=storage, init=init)
        decl.span, decl.loc = self.span_from(name_tok), name_tok.loc
        decl.spelling = spelling
        return decl

    def parse_decl_stmt(self) -> list[A.Stmt]:
        start = self.peek()
        vtype, storage, spelling = self.parse_type()
        out: list[A.Stmt] = []
        while True:
            decl = self.parse_decl_core(vtype, storage, spelling)
            s = A.DeclStmt(decl=decl)
            s.span, s.loc = (start.offset, decl.span[1]), start.loc
            out.append(s)
            if self.at(","):
                self.next()
                continue
            break
        self.expect(";")
        return out

    def parse_if(self) -> A.If:
        t = self.next()
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then_body = self.parse_body_or_stmt()
        else_body: list[A.Stmt] = []
        if self.at("kw", "else"):
            self.next()
            if self.at("kw", "if"):
                else_body = [self.parse_if()]
            else:
                else_body = self.parse_body_or_stmt()
        node = A.If(cond=cond, then_body=then_body, else_body=else_body)
        node.span, node.loc = self.span_from(t), t.loc
        return node

    def parse_while(self) -> A.While:
        t = self.next()
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        body = self.parse_body_or_stmt()
        node = A.While(cond=cond, body=body)
        node.span, node.loc = self.span_from(t), t.loc
        return node

    def parse_for(self) -> A.For:
        t = self.next()
        self.expect("(")
        init: A.Stmt | None = None
        if not self.at(";"):
            if self.at_type():
                decls = self.parse_decl_stmt()  # consumes ';'
                if len(decls) != 1:
                    self.error("for-init declares exactly one variable", t)
                init = decls[0]
            else:
                init = self.parse_simple_stmt()  # consumes ';'
        else:
            self.next()
        if self.at(";"):
            self.error("for loops require a condition", t)
        cond = self.parse_expr()
        self.expect(";")
        step: A.Assign | None = None
        if not self.at(")"):
            step_tok = self.peek()
            e = self.parse_postfix()
            if self.peek().kind in _ASSIGN_OPS:
                op = self.next().kind
                value = self.parse_expr()
                step = A.Assign(target=e, op=op, value=value)  # type: ignore[arg-type]
            elif self.peek().kind in ("++", "--"):
                op = "+=" if self.next().kind == "++" else "-="
                one = A.IntLit(value=1)
                one.span, one.loc = (step_tok.offset, step_tok.offset), step_tok.loc
                step = A.Assign(target=e, op=op, value=one)  # type: ignore[arg-type]
            else:
                self.error("for-step must be an assignment or increment", step_tok)
            assert step is not None
            step.span, step.loc = self.span_from(step_tok), step_tok.loc
        self.expect(")")
        body = self.parse_body_or_stmt()
        node = A.For(init=init, cond=cond, step=step, body=body)
        node.span, node.loc = self.span_from(t), t.loc
        return node

    # ---- top level

    def parse_program(self) -> A.Program:
        globals_: list[A.VarDecl] = []
        functions: list[A.FuncDef] = []
        while not self.at("eof"):
            start = self.peek()
            vtype, storage, spelling = self.parse_type()
            name_tok = self.expect("ident", "a name")
            if self.at("("):
                self.next()
                params: list[A.VarDecl] = []
                if self.at("kw", "void") and self.peek(1).kind == ")":
                    self.next()
                elif not self.at(")"):
                    params.append(self.parse_param())
                    while self.at(","):
                        self.next()
                        params.append(self.parse_param())
                self.expect(")")
                body = self.parse_block()
                fn = A.FuncDef(name=name_tok.text, ret_type=vtype, params=params, body=body)
                fn.span, fn.loc = self.span_from(start), start.loc
                functions.append(fn)
            else:
                # Re-parse as a (possibly multi-) global declaration.
                self.pos -= 1  # back to the name token
                storage = "global" if storage == "local" else storage
                while True:
                    decl = self.parse_decl_core(vtype, storage, spelling)
                    if decl.storage == "local":
                        decl.storage = "global"
                    globals_.append(decl)
                    if self.at(","):
                        self.next()
                        continue
                    break
                self.expect(";")
        prog = A.Program(file=self.file, globals=globals_, functions=functions)
        prog.span = (0, self.toks[-1].offset)
        prog.loc = Loc(self.file, 1, 1)
        prog.word_width = self.width
        return prog

    def parse_param(self) -> A.VarDecl:
        start = self.peek()
        vtype, storage, spelling = self.parse_type()
        if storage == "static":
            self.error("parameters cannot be static", start)
        decl = self.parse_decl_core(vtype, "param", spelling)
        if decl.init is not None:
            self.error("parameters cannot have initializers", start)
        return decl


def parse(
    src: str,
    file: str = "<unknown>",
    word_width: int = 32,
    allow_instrumentation: bool = False,
) -> A.Program:
    """Parse and type-check MiniC source into a Program.

    Raises DiagnosticError (E_SYNTAX / E_TYPE / E_RECURSION / ...) on any
    malformed input.  Identical input bytes yield identical node ids.
    """
    if word_width not in (16, 32):
        raise fail(E_UNSUPPORTED, f"word width must be 16 or 32, got {word_width}")
    toks = tokenize(src, file)
    p = _Parser(toks, file, word_width, allow_instrumentation)
    prog = p.parse_program()
    A.assign_ids(prog, file)
    check_program(prog, allow_instrumentation=allow_instrumentation)
    return prog
