"""Syntax-directed MiniC-to-DVP compiler.

Invariants the generated code maintains:

  * every register and memory slot holds the canonical value of its source
    type (negative for signed, 0..2^N-1 for unsigned); arithmetic that can
    leave the range is followed by an explicit TRUNC, conversions emit
    TRUNC only when the source range does not embed in the destination;
  * conditions compile to fused compare-and-branch (branch taken == source
    condition false for if/while/for, so the fallthrough edge is the hot
    straight-line path);
  * `/` and `%` become two argument stores plus a CALL to the width
    -specialized division helper; quotient is return latch 0, remainder 1;
  * every instruction carries the node id of the source construct it
    implements (loop conditions and steps carry their own sub-node ids),
    which is what the coverage map is built from.

No register allocation pressure exists: expression temporaries use a fresh
virtual register per statement.
"""
from __future__ import annotations

from ..diag import E_FRAME, E_UNSUPPORTED, Loc, fail
from ..minic import ast as A
from ..minic.typecheck import fold_const, promote, usual_type
from ..semantics import wrap
from ..target import TargetConfig
from .helpers import make_helpers
from .isa import Instr, MachineFunction, MachineProgram

_REL_TRUE = {"<": ("BLT", False), ">": ("BLT", True), "<=": ("BGE", True),
             ">=": ("BGE", False), "==": ("BEQ", False), "!=": ("BNE", False)}
_REL_FALSE = {"<": ("BGE", False), ">": ("BGE", True), "<=": ("BLT", True),
              ">=": ("BLT", False), "==": ("BNE", False), "!=": ("BEQ", False)}
_UNSIGNED_REL = {"BLT": "BLTU", "BGE": "BGEU"}


def _range_subset(src: A.IType, dst: A.IType) -> bool:
    return src.min >= dst.min and src.max <= dst.max


class _FnCompiler:
    def __init__(self, cc: "_Compiler", fn: A.FuncDef):
        self.cc = cc
        self.fn = fn
        self.width = cc.width
        self.code: list[Instr] = []
        self.slots: dict[str, tuple[int, int]] = {}
        self.frame_size = 0
        self.nparams = 0
        self.reg = 0
        self.max_reg = 0
        self.labels: dict[int, int] = {}  # label id -> instruction index
        self.next_label = 0
        self.break_stack: list[int] = []
        self.node = ""
        self.loc: Loc | None = None

    # ---- small emitters

    def emit(self, op: str, *args) -> int:
        self.code.append(Instr(op, args, node=self.node, loc=self.loc))
        return len(self.code) - 1

    def alloc(self) -> int:
        r = self.reg
        self.reg += 1
        self.max_reg = max(self.max_reg, self.reg)
        return r

    def label(self) -> int:
        self.next_label += 1
        return self.next_label - 1

    def place(self, lab: int) -> None:
        self.labels[lab] = len(self.code)

    def falls_through(self) -> bool:
        """True unless the last instruction unconditionally left this point."""
        if not self.code or self.code[-1].op not in ("RET", "JMP"):
            return True
        return any(pos == len(self.code) for pos in self.labels.values())

    def at(self, n: A.Node):
        """Attribute subsequently emitted instructions to source node n."""
        self.node, self.loc = n.nid, n.loc
        return self

    # ---- frame layout

    def layout(self) -> None:
        off = 0
        for p in self.fn.params:
            count = 1  # array parameters are a single reference slot
            self.slots[p.name] = (off, count)
            off += count
        self.nparams = off
        for s in self._decls(self.fn.body):
            d = s.decl
            count = d.vtype.length if isinstance(d.vtype, A.ArrayType) else 1
            self.slots[d.name] = (off, count)
            off += count
        self.frame_size = off
        if off > self.cc.config.frame_limit:
            raise fail(
                E_FRAME,
                f"frame of {self.fn.name!r} needs {off} slots "
                f"(limit {self.cc.config.frame_limit})",
                self.fn.loc,
            )

    def _decls(self, stmts: list[A.Stmt]):
        for s in stmts:
            if isinstance(s, A.DeclStmt):
                yield s
            elif isinstance(s, A.If):
                yield from self._decls(s.then_body)
                yield from self._decls(s.else_body)
            elif isinstance(s, A.While):
                yield from self._decls(s.body)
            elif isinstance(s, A.For):
                if isinstance(s.init, A.DeclStmt):
                    yield s.init
                yield from self._decls(s.body)

    # ---- value helpers

    def ensure(self, r: int, src: A.IType, dst: A.IType) -> int:
        if src == dst or _range_subset(src, dst):
            return r
        rd = self.alloc()
        self.emit("TRUNC", rd, r, dst.bits, int(dst.signed))
        return rd

    def expr(self, e: A.Expr) -> tuple[int, A.IType]:
        if isinstance(e, A.IntLit):
            t = e.ctype
            rd = self.alloc()
            self.emit("LDI", rd, wrap(e.value, t))
            return rd, t
        if isinstance(e, A.VarRef):
            d = e.decl
            assert d is not None and isinstance(d.vtype, A.IType)
            rd = self.alloc()
            if d.storage == "local" or d.storage == "param":
                self.emit("LDL", rd, self.slots[e.name][0])
            else:
                self.emit("LDG", rd, self.cc.global_layout[e.name][0])
            return rd, d.vtype
        if isinstance(e, A.Index):
            rb, ri, length, elem_t = self.element_addr(e)
            rd = self.alloc()
            self.emit("LDX", rd, rb, ri, length)
            return rd, elem_t
        if isinstance(e, A.Unary):
            return self.unary(e)
        if isinstance(e, A.Binary):
            return self.binary(e)
        if isinstance(e, A.Call):
            return self.call(e)
        raise fail(E_UNSUPPORTED,
                   f"cannot compile instrumentation construct {e.kind}", e.loc)

    def element_addr(self, e: A.Index) -> tuple[int, int, int, A.IType]:
        d = e.base.decl
        assert d is not None and isinstance(d.vtype, A.ArrayType)
        rb = self.alloc()
        if d.storage in ("global", "static"):
            self.emit("LDI", rb, self.cc.global_layout[e.base.name][0])
        elif d.storage == "param":
            self.emit("LDL", rb, self.slots[e.base.name][0])
        else:
            self.emit("LEA", rb, self.slots[e.base.name][0])
        ri, _ = self.expr(e.index)
        return rb, ri, d.vtype.length, d.vtype.elem

    def unary(self, e: A.Unary) -> tuple[int, A.IType]:
        r, t = self.expr(e.operand)
        if e.op == "+":
            return self.ensure(r, t, e.ctype), e.ctype
        if e.op == "!":
            rz = self.alloc()
            self.emit("LDI", rz, 0)
            rd = self.alloc()
            self.emit("SEQ", rd, r, rz)
            return rd, e.ctype
        ut = e.ctype
        r = self.ensure(r, t, ut)
        rz = self.alloc()
        if e.op == "-":
            self.emit("LDI", rz, 0)
            rd = self.alloc()
            self.emit("SUB", rd, rz, r)
        else:  # ~
            self.emit("LDI", rz, -1 if ut.signed else ut.max)
            rd = self.alloc()
            self.emit("XOR", rd, r, rz)
        rt = self.alloc()
        self.emit("TRUNC", rt, rd, ut.bits, int(ut.signed))
        return rt, ut

    def binary(self, e: A.Binary) -> tuple[int, A.IType]:
        op = e.op
        if op in ("/", "%"):
            return self.divide(e)
        if op in ("<", "<=", ">", ">=", "==", "!="):
            lr, lt = self.expr(e.left)
            rr, rt = self.expr(e.right)
            ut = usual_type(lt, rt, self.width)
            lr, rr = self.ensure(lr, lt, ut), self.ensure(rr, rt, ut)
            rd = self.alloc()
            if op == "==" or op == "!=":
                self.emit("SEQ", rd, lr, rr)
                if op == "!=":
                    ro = self.alloc()
                    self.emit("LDI", ro, 1)
                    rx = self.alloc()
                    self.emit("XOR", rx, rd, ro)
                    rd = rx
            else:
                cmp_op = "SLTU" if not ut.signed else "SLT"
                a, b, invert = {
                    "<": (lr, rr, False), ">": (rr, lr, False),
                    "<=": (rr, lr, True), ">=": (lr, rr, True),
                }[op]
                self.emit(cmp_op, rd, a, b)
                if invert:
                    ro = self.alloc()
                    self.emit("LDI", ro, 1)
                    rx = self.alloc()
                    self.emit("XOR", rx, rd, ro)
                    rd = rx
            return rd, e.ctype
        if op in ("<<", ">>"):
            lr, lt = self.expr(e.left)
            ut = e.ctype
            lr = self.ensure(lr, lt, ut)
            cval = fold_const(e.right)
            rc = self.alloc()
            if cval is not None:
                self.emit("LDI", rc, cval & (ut.bits - 1))
            else:
                rr, _ = self.expr(e.right)
                rm = self.alloc()
                self.emit("LDI", rm, ut.bits - 1)
                self.emit("AND", rc, rr, rm)
            rd = self.alloc()
            if op == "<<":
                self.emit("SHL", rd, lr, rc)
                rt2 = self.alloc()
                self.emit("TRUNC", rt2, rd, ut.bits, int(ut.signed))
                return rt2, ut
            self.emit("SAR" if ut.signed else "SHR", rd, lr, rc)
            return rd, ut
        # + - * & | ^
        lr, lt = self.expr(e.left)
        rr, rt = self.expr(e.right)
        ut = e.ctype
        lr, rr = self.ensure(lr, lt, ut), self.ensure(rr, rt, ut)
        mach = {"+": "ADD", "-": "SUB", "*": "MUL", "&": "AND", "|": "OR", "^": "XOR"}[op]
        rd = self.alloc()
        self.emit(mach, rd, lr, rr)
        if op in ("+", "-", "*"):
            rt2 = self.alloc()
            self.emit("TRUNC", rt2, rd, ut.bits, int(ut.signed))
            return rt2, ut
        return rd, ut

    def divide(self, e: A.Binary) -> tuple[int, A.IType]:
        lr, lt = self.expr(e.left)
        rr, rt = self.expr(e.right)
        ut = usual_type(lt, rt, self.width)
        lr, rr = self.ensure(lr, lt, ut), self.ensure(rr, rt, ut)
        helper = "__sdivmod" if ut.signed else "__udivmod"
        self.cc.used_helpers.add(helper)
        self.emit("STL", self.frame_size + 0, lr)
        self.emit("STL", self.frame_size + 1, rr)
        self.emit("CALL", helper)
        rd = self.alloc()
        self.emit("GETRV", rd, 0 if e.op == "/" else 1)
        return rd, ut

    def call(self, e: A.Call, as_stmt: bool = False) -> tuple[int, A.IType]:
        callee = self.cc.prog.function(e.name)
        # Evaluate everything into registers first: outgoing-argument slots
        # live in the callee frame, which nested calls would overwrite.
        arg_regs: list[int] = []
        for arg, param in zip(e.args, callee.params):
            if isinstance(param.vtype, A.ArrayType):
                assert isinstance(arg, A.VarRef) and arg.decl is not None
                d = arg.decl
                rb = self.alloc()
                if d.storage in ("global", "static"):
                    self.emit("LDI", rb, self.cc.global_layout[arg.name][0])
                elif d.storage == "param":
                    self.emit("LDL", rb, self.slots[arg.name][0])
                else:
                    self.emit("LEA", rb, self.slots[arg.name][0])
                arg_regs.append(rb)
            else:
                r, t = self.expr(arg)
                arg_regs.append(self.ensure(r, t, param.vtype))
        for i, r in enumerate(arg_regs):
            self.emit("STL", self.frame_size + i, r)
        self.emit("CALL", e.name)
        if callee.ret_type is None:
            return -1, e.ctype
        rd = self.alloc()
        self.emit("GETRV", rd, 0)
        return rd, callee.ret_type

    # ---- conditions

    def cond(self, e: A.Expr, target: int, jump_if: bool) -> None:
        if isinstance(e, A.Unary) and e.op == "!":
            self.cond(e.operand, target, not jump_if)
            return
        if isinstance(e, A.Binary) and e.op in _REL_TRUE:
            lr, lt = self.expr(e.left)
            rr, rt = self.expr(e.right)
            ut = usual_type(lt, rt, self.width)
            lr, rr = self.ensure(lr, lt, ut), self.ensure(rr, rt, ut)
            mach, swapped = (_REL_TRUE if jump_if else _REL_FALSE)[e.op]
            if not ut.signed:
                mach = _UNSIGNED_REL.get(mach, mach)
            a, b = (rr, lr) if swapped else (lr, rr)
            self.emit(mach, a, b, ("L", target))
            return
        r, _ = self.expr(e)
        rz = self.alloc()
        self.emit("LDI", rz, 0)
        self.emit("BNE" if jump_if else "BEQ", r, rz, ("L", target))

    # ---- statements

    def store(self, target: A.VarRef | A.Index, r: int, t: A.IType) -> None:
        if isinstance(target, A.VarRef):
            d = target.decl
            assert d is not None and isinstance(d.vtype, A.IType)
            r = self.ensure(r, t, d.vtype)
            if d.storage in ("global", "static"):
                self.emit("STG", self.cc.global_layout[target.name][0], r)
            else:
                self.emit("STL", self.slots[target.name][0], r)
        else:
            rb, ri, length, elem_t = self.element_addr(target)
            r = self.ensure(r, t, elem_t)
            self.emit("STX", rb, ri, r, length)

    def stmt(self, s: A.Stmt) -> None:
        self.reg = 0
        self.at(s)
        if isinstance(s, A.DeclStmt):
            d = s.decl
            if isinstance(d.vtype, A.ArrayType):
                if isinstance(d.init, list):
                    base = self.slots[d.name][0]
                    for k, item in enumerate(d.init):
                        r, t = self.expr(item)
                        r = self.ensure(r, t, d.vtype.elem)
                        self.emit("STL", base + k, r)
            elif isinstance(d.init, A.Expr):
                r, t = self.expr(d.init)
                r = self.ensure(r, t, d.vtype)
                self.emit("STL", self.slots[d.name][0], r)
        elif isinstance(s, A.Assign):
            self.assign(s)
        elif isinstance(s, A.ExprStmt):
            assert isinstance(s.expr, A.Call)
            self.call(s.expr, as_stmt=True)
        elif isinstance(s, A.If):
            self.if_stmt(s)
        elif isinstance(s, A.While):
            head, exit_ = self.label(), self.label()
            self.place(head)
            self.reg = 0
            self.at(s.cond)
            self.cond(s.cond, exit_, jump_if=False)
            self.break_stack.append(exit_)
            for b in s.body:
                self.stmt(b)
            self.break_stack.pop()
            if self.falls_through():
                self.at(s)
                self.emit("JMP", ("L", head))
            self.place(exit_)
        elif isinstance(s, A.For):
            if s.init is not None:
                self.stmt(s.init)
            head, exit_ = self.label(), self.label()
            self.place(head)
            self.reg = 0
            self.at(s.cond)
            self.cond(s.cond, exit_, jump_if=False)
            self.break_stack.append(exit_)
            for b in s.body:
                self.stmt(b)
            if s.step is not None:
                self.stmt(s.step)
            self.break_stack.pop()
            if self.falls_through():
                self.at(s)
                self.emit("JMP", ("L", head))
            self.place(exit_)
        elif isinstance(s, A.Break):
            self.emit("JMP", ("L", self.break_stack[-1]))
        elif isinstance(s, A.Return):
            if s.value is None:
                self.emit("RET")
            else:
                r, t = self.expr(s.value)
                assert self.fn.ret_type is not None
                r = self.ensure(r, t, self.fn.ret_type)
                self.emit("RET", r)
        elif isinstance(s, (A.AssumeStmt, A.AssertStmt)):
            pass  # analysis-facing specifications; no machine code, no cost
        else:
            raise fail(E_UNSUPPORTED,
                       f"cannot compile instrumentation construct {s.kind}", s.loc)

    def assign(self, s: A.Assign) -> None:
        if s.op == "=":
            r, t = self.expr(s.value)
            self.store(s.target, r, t)
            return
        op = s.op[:-1]
        # Evaluate the target once (base and index for elements).
        if isinstance(s.target, A.VarRef):
            old, old_t = self.expr(s.target)
            rb = ri = length = None
        else:
            rb, ri, length, old_t = self.element_addr(s.target)
            old = self.alloc()
            self.emit("LDX", old, rb, ri, length)
        if op in ("/", "%"):
            rr, rt = self.expr(s.value)
            ut = usual_type(old_t, rt, self.width)
            a, b = self.ensure(old, old_t, ut), self.ensure(rr, rt, ut)
            helper = "__sdivmod" if ut.signed else "__udivmod"
            self.cc.used_helpers.add(helper)
            self.emit("STL", self.frame_size + 0, a)
            self.emit("STL", self.frame_size + 1, b)
            self.emit("CALL", helper)
            res = self.alloc()
            self.emit("GETRV", res, 0 if op == "/" else 1)
            rv, vt = res, ut
        elif op in ("<<", ">>"):
            ut = promote(old_t, self.width)
            a = self.ensure(old, old_t, ut)
            cval = fold_const(s.value)
            rc = self.alloc()
            if cval is not None:
                self.emit("LDI", rc, cval & (ut.bits - 1))
            else:
                rr, _ = self.expr(s.value)
                rm = self.alloc()
                self.emit("LDI", rm, ut.bits - 1)
                self.emit("AND", rc, rr, rm)
            rd = self.alloc()
            if op == "<<":
                self.emit("SHL", rd, a, rc)
                rt2 = self.alloc()
                self.emit("TRUNC", rt2, rd, ut.bits, int(ut.signed))
                rv, vt = rt2, ut
            else:
                self.emit("SAR" if ut.signed else "SHR", rd, a, rc)
                rv, vt = rd, ut
        else:
            rr, rt = self.expr(s.value)
            ut = usual_type(old_t, rt, self.width)
            a, b = self.ensure(old, old_t, ut), self.ensure(rr, rt, ut)
            mach = {"+": "ADD", "-": "SUB", "*": "MUL",
                    "&": "AND", "|": "OR", "^": "XOR"}[op]
            rd = self.alloc()
            self.emit(mach, rd, a, b)
            if op in ("+", "-", "*"):
                rt2 = self.alloc()
                self.emit("TRUNC", rt2, rd, ut.bits, int(ut.signed))
                rv, vt = rt2, ut
            else:
                rv, vt = rd, ut
        if isinstance(s.target, A.VarRef):
            self.store(s.target, rv, vt)
        else:
            elem_t = s.target.ctype
            assert elem_t is not None and rb is not None and ri is not None
            rv = self.ensure(rv, vt, elem_t)
            self.emit("STX", rb, ri, rv, length)

    def if_stmt(self, s: A.If) -> None:
        join = self.label()
        self.reg = 0
        self.at(s.cond)
        if s.else_body:
            els = self.label()
            self.cond(s.cond, els, jump_if=False)
            for b in s.then_body:
                self.stmt(b)
            if self.falls_through():
                self.at(s)
                self.emit("JMP", ("L", join))
            self.place(els)
            for b in s.else_body:
                self.stmt(b)
        else:
            self.cond(s.cond, join, jump_if=False)
            for b in s.then_body:
                self.stmt(b)
        self.place(join)

    # ---- driver

    def run(self) -> MachineFunction:
        self.layout()
        for s in self.fn.body:
            self.stmt(s)
        if not self.code or self.code[-1].op != "RET":
            self.node, self.loc = self.fn.nid, self.fn.loc
            self.emit("RET")
        # Resolve labels to instruction indices.
        resolved: list[Instr] = []
        for ins in self.code:
            args = tuple(
                self.labels[a[1]] if isinstance(a, tuple) and a[0] == "L" else a
                for a in ins.args
            )
            resolved.append(Instr(ins.op, args, node=ins.node, loc=ins.loc))
        return MachineFunction(
            name=self.fn.name, nparams=self.nparams, frame_size=self.frame_size,
            code=resolved, slots=self.slots, nregs=max(self.max_reg, 1),
        )


class _Compiler:
    def __init__(self, prog: A.Program, config: TargetConfig):
        self.prog = prog
        self.config = config
        self.width = config.word_width
        self.global_layout: dict[str, tuple[int, int]] = {}
        self.used_helpers: set[str] = set()

    def run(self) -> MachineProgram:
        addr = 0
        init: list[int] = []
        for g in self.prog.globals:
            if g.name == A.TIME_VAR:
                raise fail(E_UNSUPPORTED,
                           "cannot compile instrumentation construct '_time'", g.loc)
            if isinstance(g.vtype, A.ArrayType):
                vals = [0] * g.vtype.length
                if isinstance(g.init, list):
                    for k, item in enumerate(g.init):
                        v = fold_const(item)
                        assert v is not None
                        vals[k] = wrap(v, g.vtype.elem)
                self.global_layout[g.name] = (addr, g.vtype.length)
                init.extend(vals)
                addr += g.vtype.length
            else:
                v = 0
                if isinstance(g.init, A.Expr):
                    c = fold_const(g.init)
                    assert c is not None
                    v = wrap(c, g.vtype)
                self.global_layout[g.name] = (addr, 1)
                init.append(v)
                addr += 1
        functions: dict[str, MachineFunction] = {}
        for fn in self.prog.functions:
            functions[fn.name] = _FnCompiler(self, fn).run()
        if self.used_helpers:
            for name, mf in make_helpers(self.width).items():
                if name in self.used_helpers or name == "__udivmod":
                    functions[name] = mf
        return MachineProgram(
            config=self.config, functions=functions,
            global_layout=self.global_layout, global_size=addr,
            global_init=init, source_file=self.prog.file,
        )


def compile_program(prog: A.Program, config: TargetConfig | None = None) -> MachineProgram:
    """Compile a plain (uninstrumented) MiniC program for the DVP."""
    if config is None:
        config = TargetConfig()
    if prog.word_width != config.word_width:
        config = TargetConfig(
            word_width=prog.word_width, table=config.table,
            frame_limit=config.frame_limit, stack_slots=config.stack_slots,
            instruction_budget=config.instruction_budget,
        )
    return _Compiler(prog, config).run()
