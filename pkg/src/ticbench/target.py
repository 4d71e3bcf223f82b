"""Target configuration and the timing table.

The deterministic virtual processor (DVP) executes every instruction in a
fixed, data-independent number of cycles.  The cost model sketches a deep
in-order pipeline:

  * single-cycle ALU, 2-cycle data-memory loads, 1-cycle stores;
  * an iterative multiplier (29 cycles);
  * control transfers flush the pipeline: conditional branches cost 18
    cycles either way (BNE resolves early at 9), unconditional jumps 16,
    calls 18; returns hit a return-address stack and cost 2;
  * no divide unit: `/` and `%` lower to helper routines.

Tables are JSON-replaceable: {"opcodes": {...}, "branches": {op:
{"taken": n, "nottaken": n}}, "call": n, "ret": n}.  Conditional-branch
costs live on CFG edges, never in block costs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .diag import E_UNSUPPORTED, fail

ALU_OPS = ("ADD", "SUB", "MUL", "AND", "OR", "XOR", "SHL", "SHR", "SAR",
           "SLT", "SLTU", "SEQ", "TRUNC")
MEM_OPS = ("LDI", "MOV", "LDL", "STL", "LDG", "STG", "LDX", "STX", "LEA", "GETRV")
BRANCH_OPS = ("BEQ", "BNE", "BLT", "BLTU", "BGE", "BGEU")
OTHER_OPS = ("JMP", "HALT")

_DEFAULT = {
    "opcodes": {
        "LDI": 1, "MOV": 1, "LDL": 2, "STL": 1, "LDG": 2, "STG": 2,
        "LDX": 3, "STX": 3, "LEA": 1, "GETRV": 1,
        "ADD": 1, "SUB": 1, "MUL": 29, "AND": 1, "OR": 1, "XOR": 1,
        "SHL": 1, "SHR": 1, "SAR": 1, "SLT": 1, "SLTU": 1, "SEQ": 1,
        "TRUNC": 1,
        "JMP": 16, "HALT": 0,
    },
    "branches": {
        "BEQ": {"taken": 18, "nottaken": 18},
        "BNE": {"taken": 9, "nottaken": 9},
        "BLT": {"taken": 18, "nottaken": 18},
        "BLTU": {"taken": 18, "nottaken": 18},
        "BGE": {"taken": 18, "nottaken": 18},
        "BGEU": {"taken": 18, "nottaken": 18},
    },
    "call": 18,
    "ret": 2,
}


@dataclass(frozen=True)
class TimingTable:
    opcodes: dict[str, int]
    branches: dict[str, tuple[int, int]]  # op -> (taken, nottaken)
    call: int
    ret: int

    def cost(self, op: str) -> int:
        return self.opcodes[op]

    def branch_cost(self, op: str) -> tuple[int, int]:
        return self.branches[op]

    @staticmethod
    def default() -> "TimingTable":
        return TimingTable.from_dict(_DEFAULT)

    @staticmethod
    def from_dict(d: dict) -> "TimingTable":
        try:
            opcodes = {k: int(v) for k, v in d["opcodes"].items()}
            branches = {
                k: (int(v["taken"]), int(v["nottaken"])) for k, v in d["branches"].items()
            }
            call, ret = int(d["call"]), int(d["ret"])
        except (KeyError, TypeError, ValueError) as exc:
            raise fail(E_UNSUPPORTED, f"malformed timing table: {exc}") from exc
        for group, need in ((opcodes, ALU_OPS + MEM_OPS + OTHER_OPS), (branches, BRANCH_OPS)):
            for op in need:
                if op not in group:
                    raise fail(E_UNSUPPORTED, f"timing table is missing opcode {op!r}")
            for op in group:
                if op not in need:
                    raise fail(E_UNSUPPORTED, f"timing table names unknown opcode {op!r}")
        for op, v in opcodes.items():
            if v < 0:
                raise fail(E_UNSUPPORTED, f"negative cycle cost for {op!r}")
        for op, (t, n) in branches.items():
            if t < 0 or n < 0:
                raise fail(E_UNSUPPORTED, f"negative cycle cost for {op!r}")
        if call < 0 or ret < 0:
            raise fail(E_UNSUPPORTED, "negative call/ret cost")
        return TimingTable(opcodes, branches, call, ret)

    def to_dict(self) -> dict:
        return {
            "opcodes": dict(self.opcodes),
            "branches": {k: {"taken": t, "nottaken": n} for k, (t, n) in self.branches.items()},
            "call": self.call,
            "ret": self.ret,
        }

    @staticmethod
    def load(path: str) -> "TimingTable":
        with open(path, "r", encoding="utf-8") as fh:
            return TimingTable.from_dict(json.load(fh))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass(frozen=True)
class TargetConfig:
    """Word width plus machine limits; the timing table rides along."""

    word_width: int = 32
    table: TimingTable = field(default_factory=TimingTable.default)
    frame_limit: int = 4096  # slots per function frame
    stack_slots: int = 1 << 16
    instruction_budget: int = 10**9

    def __post_init__(self) -> None:
        if self.word_width not in (16, 32):
            raise fail(E_UNSUPPORTED, f"word width must be 16 or 32, got {self.word_width}")
