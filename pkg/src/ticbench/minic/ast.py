"""Typed AST for MiniC.

MiniC is a strict C subset: integer scalars and fixed-length arrays over
{i8,u8,i16,u16,i32,u32}, functions, structured control (if/else, while, for,
break, return), arithmetic including %, shifts and bitwise ops.  No pointers,
no floats, no recursion, no goto/switch, no short-circuit operators.  The
`int`/`unsigned` spellings resolve to a configurable word width (16 or 32).

Instrumentation constructs (`_time += e`, `assume(e)`, `assert(e)`,
`x = nondet_T()`) are first-class statement/expression nodes so that
instrumented programs remain printable and re-parseable MiniC text.
The timing counter `_time` is a 64-bit unsigned global and is the only
place u64 appears.

Node identity: every node carries a stable id derived from
(file, span, kind), so identical input bytes yield identical ids and
debug maps survive re-parsing.  Structural equality ignores ids, spans
and resolved-type annotations (dataclass fields with compare=False).
"""
from __future__ import annotations

import copy
import hashlib
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from ..diag import Loc

TIME_VAR = "_time"


# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class IType:
    """An integer value type: bit width and signedness."""

    bits: int
    signed: bool

    @property
    def name(self) -> str:
        return f"{'int' if self.signed else 'uint'}{self.bits}_t"

    @property
    def min(self) -> int:
        return -(1 << (self.bits - 1)) if self.signed else 0

    @property
    def max(self) -> int:
        return (1 << (self.bits - 1)) - 1 if self.signed else (1 << self.bits) - 1

    def contains(self, v: int) -> bool:
        return self.min <= v <= self.max

    def __str__(self) -> str:
        return self.name


I8 = IType(8, True)
U8 = IType(8, False)
I16 = IType(16, True)
U16 = IType(16, False)
I32 = IType(32, True)
U32 = IType(32, False)
U64 = IType(64, False)

SCALAR_TYPES = (I8, U8, I16, U16, I32, U32)


@dataclass(frozen=True)
class ArrayType:
    elem: IType
    length: int

    def __str__(self) -> str:
        return f"{self.elem}[{self.length}]"


VarType = Union[IType, ArrayType]


# ---------------------------------------------------------------- base node


def _hash_id(*parts: object) -> str:
    h = hashlib.sha1("|".join(str(p) for p in parts).encode()).hexdigest()
    return h[:12]


@dataclass
class Node:
    # Identity / position metadata, excluded from structural equality.
    nid: str = field(default="", compare=False, repr=False, kw_only=True)
    loc: Loc = field(default_factory=Loc, compare=False, repr=False, kw_only=True)
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False, kw_only=True)

    @property
    def kind(self) -> str:
        return type(self).__name__


# ---------------------------------------------------------------- expressions


@dataclass
class Expr(Node):
    # Resolved type, set by the type checker.
    ctype: Optional[IType] = field(default=None, compare=False, repr=False, kw_only=True)


@dataclass
class IntLit(Expr):
    value: int = 0


@dataclass
class VarRef(Expr):
    name: str = ""
    decl: Optional["VarDecl"] = field(default=None, compare=False, repr=False, kw_only=True)


@dataclass
class Index(Expr):
    base: VarRef = None  # type: ignore[assignment]
    index: Expr = None  # type: ignore[assignment]


@dataclass
class Unary(Expr):
    op: str = ""  # -, ~, !
    operand: Expr = None  # type: ignore[assignment]


@dataclass
class Binary(Expr):
    op: str = ""  # + - * / % << >> & | ^ < <= > >= == !=
    left: Expr = None  # type: ignore[assignment]
    right: Expr = None  # type: ignore[assignment]


@dataclass
class Call(Expr):
    name: str = ""
    args: list[Expr] = field(default_factory=list)


@dataclass
class NondetExpr(Expr):
    """A nondeterministic input of a given type.

    Only legal as the entire right side of an assignment.  `site` is the
    stable injection-site id ("func.var", "func.var[3]"), derived from the
    assignment target during type checking so it survives re-parsing.
    """

    nondet_type: IType = U32
    site: str = field(default="", compare=False)


# ---------------------------------------------------------------- declarations


@dataclass
class VarDecl(Node):
    name: str = ""
    vtype: VarType = I32
    storage: str = "local"  # local | param | global | static
    init: Optional[Union[Expr, list[Expr]]] = None
    # Spelled type tokens as written, for diagnostics only.
    spelling: str = field(default="", compare=False, repr=False, kw_only=True)


# ---------------------------------------------------------------- statements


@dataclass
class Stmt(Node):
    pass


@dataclass
class DeclStmt(Stmt):
    decl: VarDecl = None  # type: ignore[assignment]


@dataclass
class Assign(Stmt):
    target: Union[VarRef, Index] = None  # type: ignore[assignment]
    op: str = "="  # =, +=, -=, *=, /=, %=, <<=, >>=, &=, |=, ^=
    value: Expr = None  # type: ignore[assignment]


@dataclass
class ExprStmt(Stmt):
    expr: Expr = None  # type: ignore[assignment]


@dataclass
class If(Stmt):
    cond: Expr = None  # type: ignore[assignment]
    then_body: list[Stmt] = field(default_factory=list)
    else_body: list[Stmt] = field(default_factory=list)


@dataclass
class While(Stmt):
    cond: Expr = None  # type: ignore[assignment]
    body: list[Stmt] = field(default_factory=list)


@dataclass
class For(Stmt):
    init: Optional[Stmt] = None  # DeclStmt or Assign
    cond: Expr = None  # type: ignore[assignment]
    step: Optional[Assign] = None
    body: list[Stmt] = field(default_factory=list)


@dataclass
class Break(Stmt):
    pass


@dataclass
class Return(Stmt):
    value: Optional[Expr] = None


@dataclass
class TicStmt(Stmt):
    """`_time += amount;` — a timing increment.

    `entry` names the BackMap entry this TIC materializes (empty for
    hand-written text).  `amount` is a constant after instrumentation and
    may become `_k1 * c` after acceleration.
    """

    amount: Expr = None  # type: ignore[assignment]
    entry: str = field(default="", compare=False)


@dataclass
class AssumeStmt(Stmt):
    cond: Expr = None  # type: ignore[assignment]


@dataclass
class AssertStmt(Stmt):
    cond: Expr = None  # type: ignore[assignment]
    label: str = field(default="", compare=False)


# ---------------------------------------------------------------- functions / program


@dataclass
class FuncDef(Node):
    name: str = ""
    ret_type: Optional[IType] = None  # None == void
    params: list[VarDecl] = field(default_factory=list)
    body: list[Stmt] = field(default_factory=list)


@dataclass
class Program(Node):
    """A type-checked MiniC translation unit.

    Invariants (established by the type checker):
      * every expression has a resolved type from {i8..u32} (u64 only inside
        TIC/assert arithmetic over `_time`);
      * the call graph is acyclic (no recursion);
      * static locals are hoisted to file scope under mangled names;
      * node ids are stable hashes of (file, span, kind).
    """

    file: str = "<unknown>"
    globals: list[VarDecl] = field(default_factory=list)
    functions: list[FuncDef] = field(default_factory=list)
    word_width: int = field(default=32, compare=False)
    # Set once instrumentation exists:
    instrumented: bool = field(default=False, compare=False)
    driver: str = field(default="", compare=False)  # driver function name, "" if none
    entry: str = field(default="", compare=False)  # analysis entry function
    hardened: list[str] = field(default_factory=list, compare=False)

    def function(self, name: str) -> FuncDef:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def global_decl(self, name: str) -> VarDecl:
        for g in self.globals:
            if g.name == name:
                return g
        raise KeyError(name)

    def clone(self) -> "Program":
        return copy.deepcopy(self)


# ---------------------------------------------------------------- traversal


def child_nodes(n: Node) -> Iterator[Node]:
    if isinstance(n, Program):
        yield from n.globals
        yield from n.functions
    elif isinstance(n, FuncDef):
        yield from n.params
        yield from n.body
    elif isinstance(n, VarDecl):
        if isinstance(n.init, Expr):
            yield n.init
        elif isinstance(n.init, list):
            yield from n.init
    elif isinstance(n, DeclStmt):
        yield n.decl
    elif isinstance(n, Assign):
        yield n.target
        yield n.value
    elif isinstance(n, ExprStmt):
        yield n.expr
    elif isinstance(n, If):
        yield n.cond
        yield from n.then_body
        yield from n.else_body
    elif isinstance(n, While):
        yield n.cond
        yield from n.body
    elif isinstance(n, For):
        if n.init is not None:
            yield n.init
        yield n.cond
        if n.step is not None:
            yield n.step
        yield from n.body
    elif isinstance(n, Return):
        if n.value is not None:
            yield n.value
    elif isinstance(n, (TicStmt,)):
        yield n.amount
    elif isinstance(n, (AssumeStmt, AssertStmt)):
        yield n.cond
    elif isinstance(n, Index):
        yield n.base
        yield n.index
    elif isinstance(n, Unary):
        yield n.operand
    elif isinstance(n, Binary):
        yield n.left
        yield n.right
    elif isinstance(n, Call):
        yield from n.args


def walk(n: Node) -> Iterator[Node]:
    yield n
    for c in child_nodes(n):
        yield from walk(c)


def assign_ids(root: Node, file: str) -> None:
    """Assign stable node ids from (file, span, kind).

    Nodes sharing an exact span (e.g. a DeclStmt and its VarDecl) are
    disambiguated by kind; duplicates of the same kind at the same span get
    an ordinal suffix so ids stay unique and deterministic.
    """
    seen: dict[str, int] = {}
    for n in walk(root):
        base = _hash_id(file, n.span[0], n.span[1], n.kind)
        k = seen.get(base, 0)
        seen[base] = k + 1
        n.nid = base if k == 0 else f"{base}.{k}"


def synth_id(anchor: str, role: str, ordinal: int = 0) -> str:
    """Deterministic id for a synthesized node, derived from an anchor node id.

    Callers supply the ordinal (per anchor+role) so ids depend only on the
    transform being applied, not process history.
    """
    return "s" + _hash_id(anchor, role, ordinal)[:11]


def parent_map(root: Node) -> dict[int, Node]:
    """Map id(node) -> parent node (identity keyed; rebuild after transforms)."""
    parents: dict[int, Node] = {}
    for n in walk(root):
        for c in child_nodes(n):
            parents[id(c)] = n
    return parents


def index_nodes(root: Node) -> dict[str, Node]:
    return {n.nid: n for n in walk(root)}
