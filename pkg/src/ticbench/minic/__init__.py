"""MiniC language frontend: lexer, parser, type checker, pretty printer, call graph."""
from .ast import (  # noqa: F401
    ArrayType,
    AssertStmt,
    Assign,
    AssumeStmt,
    Binary,
    Break,
    Call,
    DeclStmt,
    Expr,
    For,
    FuncDef,
    IType,
    If,
    Index,
    IntLit,
    NondetExpr,
    Node,
    Program,
    Return,
    Stmt,
    TicStmt,
    TIME_VAR,
    Unary,
    VarDecl,
    VarRef,
    While,
    I8,
    I16,
    I32,
    U8,
    U16,
    U32,
    U64,
)
from .parser import parse  # noqa: F401
from .pretty import pretty_print  # noqa: F401
from .callgraph import call_graph  # noqa: F401
