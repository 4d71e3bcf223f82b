"""Export driver-closed programs as a self-contained checkable C unit.

The emitted text compiles as C (stdint spellings, `assert.h` assertions,
`__VERIFIER_*` input intrinsics) and, with the prelude and trailing
`main` removed and the intrinsics mapped back to their plain names,
re-parses into the same program, so external tools and the built-in
engine reason about identical semantics.
"""
from __future__ import annotations

from typing import Iterable, Optional, Union

from ..minic import ast as A
from ..minic.pretty import Printer
from ..minic.typecheck import check_program
from .types import Assertion, AssertionBatch

Batch = Union[AssertionBatch, Iterable[Assertion], None]


class CPrinter(Printer):
    """Re-spells the input and assumption intrinsics for verifier consumption."""

    def nondet_name(self, t: A.IType) -> str:
        return f"__VERIFIER_nondet_{'i' if t.signed else 'u'}{t.bits}"

    def assume_text(self, cond: str) -> str:
        return f"__VERIFIER_assume({cond});"

    def assert_text(self, cond: str, label: str) -> str:
        note = f" /* {label} */" if label else ""
        return f"assert({cond});{note}"


def insert_batch(prog: A.Program, batch: Batch) -> A.Program:
    """A copy of the program with one `_time` assertion per batch entry
    appended to the end of the driver body, in batch order."""
    out = prog.clone()
    drv = out.function(out.driver) if out.driver else None
    if drv is None:
        raise ValueError("batch insertion needs a driver-closed program")
    for k, a in enumerate(batch or ()):
        tv = A.VarRef(name=A.TIME_VAR)
        lit = A.IntLit(value=a.bound)
        cond = A.Binary(op=a.comparator, left=tv, right=lit)
        node = A.AssertStmt(cond=cond, label=a.aid)
        for i, n in enumerate((node, cond, tv, lit)):
            n.nid = A.synth_id(drv.nid, f"batch{k}", i)
        drv.body.append(node)
    check_program(out, allow_instrumentation=True)
    return out


def _nondet_types(prog: A.Program) -> list[A.IType]:
    seen: dict[str, A.IType] = {}
    for n in A.walk(prog):
        if isinstance(n, A.NondetExpr):
            seen.setdefault(n.nondet_type.name, n.nondet_type)
    return [seen[k] for k in sorted(seen)]


def export_checkable(prog: A.Program, batch: Batch = None) -> str:
    """Compilable C for the program plus the batch assertions.

    An empty (or absent) batch exports the program with no assertions;
    bit-widths stay pinned through the stdint type spellings regardless
    of the width the program was parsed at.
    """
    closed = insert_batch(prog, batch)
    printer = CPrinter()
    lines = ["#include <assert.h>", "#include <stdint.h>", ""]
    lines.append("extern void __VERIFIER_assume(int cond);")
    for t in _nondet_types(closed):
        lines.append(f"extern {t.name} {printer.nondet_name(t)}(void);")
    lines.append("")
    body = printer.program(closed)
    main = f"int main(void) {{\n    {closed.driver}();\n    return 0;\n}}\n"
    return "\n".join(lines) + body + "\n" + main
