"""Instruction set of the deterministic virtual processor.

Registers are per-frame virtual registers holding Python integers; values
are kept canonical for their source type by the compiler (explicit TRUNC
re-wraps after arithmetic that can leave the range).  Memory is a flat
array of word slots: globals first, then stack frames.  A call writes its
arguments into the callee's first slots (caller frame base + caller frame
size + i), so a callee finds parameter i in its own slot i.

Operand shapes (args tuple):

  LDI rd, imm            load immediate
  MOV rd, rs
  LDL rd, slot           load local slot (frame-relative)
  STL slot, rs           store local
  LDG rd, addr           load global (absolute)
  STG addr, rs
  LDX rd, rb, ri, len    rd = mem[r[rb]+r[ri]], bounds-checked 0 <= r[ri] < len
  STX rb, ri, rs, len
  LEA rd, slot           rd = frame base + slot
  ADD/SUB/MUL/AND/OR/XOR/SHL/SHR/SAR/SLT/SLTU/SEQ rd, rs1, rs2
  TRUNC rd, rs, bits, signed   wrap to an integer type
  BEQ/BNE/BLT/BLTU/BGE/BGEU rs1, rs2, target
  JMP target
  CALL fname
  RET [r1 [, r2]]        up to two return registers, latched for GETRV
  GETRV rd, idx
  HALT
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..diag import Loc
from ..target import TargetConfig


@dataclass(slots=True)
class Instr:
    op: str
    args: tuple
    node: str = ""  # source node id this instruction implements
    loc: Loc | None = None

    def render(self) -> str:
        def arg(i: int, a) -> str:
            if self.op == "CALL":
                return str(a)
            if self.op in ("BEQ", "BNE", "BLT", "BLTU", "BGE", "BGEU") and i == 2:
                return f"@{a}"
            if self.op == "JMP":
                return f"@{a}"
            if self.op in ("LDI",) and i == 1:
                return str(a)
            if self.op in ("LDL", "LEA") and i == 1:
                return f"[{a}]"
            if self.op == "STL" and i == 0:
                return f"[{a}]"
            if self.op in ("LDG",) and i == 1:
                return f"g[{a}]"
            if self.op == "STG" and i == 0:
                return f"g[{a}]"
            if self.op == "TRUNC" and i >= 2:
                return str(a)
            if self.op in ("LDX", "STX") and i == 3:
                return f"len={a}"
            if self.op == "GETRV" and i == 1:
                return str(a)
            return f"r{a}"

        parts = ", ".join(arg(i, a) for i, a in enumerate(self.args))
        return f"{self.op} {parts}".rstrip()


@dataclass
class MachineFunction:
    name: str
    nparams: int
    frame_size: int
    code: list[Instr]
    # name -> (slot offset, slot count); arrays span `count` slots,
    # array parameters are a single reference slot.
    slots: dict[str, tuple[int, int]]
    is_helper: bool = False
    nregs: int = 32
    # loop head instruction index -> static iteration bound; required for
    # every helper loop, consulted by structural bound computation.
    loop_bounds: dict[int, int] = field(default_factory=dict)

    def slot_name(self, off: int) -> str:
        for name, (base, count) in self.slots.items():
            if base <= off < base + count:
                return name if count == 1 else f"{name}[{off - base}]"
        return f"slot{off}"


@dataclass
class MachineProgram:
    config: TargetConfig
    functions: dict[str, MachineFunction]
    # name -> (address, slot count)
    global_layout: dict[str, tuple[int, int]]
    global_size: int
    global_init: list[int]
    source_file: str = "<mem>"

    @property
    def word_width(self) -> int:
        return self.config.word_width

    def function(self, name: str) -> MachineFunction:
        return self.functions[name]


def dump_program(m: MachineProgram) -> str:
    """Readable listing: one instruction per line with source line:col."""
    out: list[str] = []
    for name, (addr, count) in m.global_layout.items():
        init = m.global_init[addr:addr + count]
        out.append(f"global {name} @ {addr} x{count} = {init}")
    for fn in m.functions.values():
        kind = "helper" if fn.is_helper else "fn"
        out.append(f"{kind} {fn.name} (params={fn.nparams}, frame={fn.frame_size})")
        for i, ins in enumerate(fn.code):
            pos = f"{ins.loc.line}:{ins.loc.col}" if ins.loc else "-"
            out.append(f"  {i:4d}: {ins.render():40s} ; {pos}")
    return "\n".join(out) + "\n"
