"""Cycle-accurate DVP simulator.

Timing follows the table exactly: straight-line instructions charge their
opcode cost, conditional branches charge taken/not-taken edge cost, JMP,
CALL and RET charge their transfer cost.  A run counts from the entry
function's first instruction through its final RET (there is no bootstrap
call), so a run's cycles equal the sum of visited block costs plus
traversed edge costs of the timed CFG.

Reads of never-written locals consult an optional injector (site id
"func.var" or "func.arr[k]", occurrence counter per run) and default to
zero, mirroring how the source interpreter treats uninitialized reads.
Array cells are attributed to the declaring frame, so reads through a
passed reference report the owner's site.  Injected values are stored
verbatim; memory is untyped here, so an injector meant to be shared with
the interpreter should produce values canonical for the site's type.

Top-level array arguments may be given as Python sequences; they are
materialized in scratch words below the entry frame and passed by base
address, exactly as a caller would.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from ..diag import E_BUDGET, E_MEMFAULT, fail
from ..target import BRANCH_OPS
from .cfg import TimedCfg
from .isa import MachineProgram

Injector = Callable[[str, int], int]


@dataclass
class SimResult:
    values: tuple
    cycles: int
    steps: int
    visits: dict[str, int] = field(default_factory=dict)
    edge_visits: dict[tuple[str, str, str], int] = field(default_factory=dict)


def _decode(m: MachineProgram):
    cache = getattr(m, "_decoded", None)
    if cache is not None:
        return cache
    table = m.config.table
    decoded = {}
    for name, fn in m.functions.items():
        ops, args, costs, locs = [], [], [], []
        for ins in fn.code:
            ops.append(ins.op)
            args.append(ins.args)
            if ins.op in BRANCH_OPS:
                costs.append(table.branch_cost(ins.op))
            elif ins.op == "JMP":
                costs.append(table.cost("JMP"))
            elif ins.op == "CALL":
                costs.append(table.call)
            elif ins.op == "RET":
                costs.append(table.ret)
            else:
                costs.append(table.cost(ins.op))
            locs.append(ins.loc)
        decoded[name] = (ops, args, costs, locs, fn)
    m._decoded = decoded  # type: ignore[attr-defined]
    return decoded


def simulate(
    m: MachineProgram,
    entry: str,
    inputs: list[int] | tuple[int, ...] = (),
    *,
    globals_override: dict[str, int | list[int]] | None = None,
    injector: Optional[Injector] = None,
    budget: int | None = None,
    cfg: TimedCfg | None = None,
) -> SimResult:
    """Run `entry(*inputs)` to completion and return values plus exact cycles."""
    decoded = _decode(m)
    if entry not in decoded:
        raise KeyError(entry)
    table = m.config.table
    budget = budget if budget is not None else m.config.instruction_budget

    mem = list(m.global_init) + [0] * m.config.stack_slots
    memlen = len(mem)
    if globals_override:
        for gname, val in globals_override.items():
            addr, count = m.global_layout[gname]
            if isinstance(val, (list, tuple)):
                for k, v in enumerate(val):
                    mem[addr + k] = v
            else:
                mem[addr] = val

    trace = cfg is not None
    visits: dict[str, int] = {}
    edge_visits: dict[tuple[str, str, str], int] = {}
    instr_block: dict[tuple[str, int], str] = {}
    fn_starts: dict[str, dict[int, str]] = {}
    if trace:
        fn_starts = cfg.starts
        for b in cfg.blocks.values():
            for i in range(b.start, b.end):
                instr_block[(b.func, i)] = b.id

    ops, argl, costs, locs, fobj = decoded[entry]
    if len(inputs) != fobj.nparams:
        raise ValueError(f"{entry} takes {fobj.nparams} arguments, got {len(inputs)}")
    fname = entry
    # Arrays are passed by address; materialize top-level array inputs in
    # scratch words between the globals and the entry frame.
    marshalled: list[int] = []
    scratch = m.global_size
    for v in inputs:
        if isinstance(v, (list, tuple)):
            marshalled.append(scratch)
            for k, cell in enumerate(v):
                mem[scratch + k] = cell
            scratch += len(v)
        else:
            marshalled.append(v)
    fp = scratch
    if fp + fobj.frame_size > memlen:
        raise fail(E_MEMFAULT, f"stack overflow entering {entry!r}")
    for i, v in enumerate(marshalled):
        mem[fp + i] = v

    # Definedness map over memory words.  Globals and explicit inputs are
    # defined; a frame push resets its slots so reusing stack addresses
    # after a return behaves like fresh uninitialized locals.  `site_of`
    # attributes array cells to their owning frame's declaration, so a
    # callee reading a caller's array through a reference reports the
    # owner's site.
    wmem = bytearray(memlen)
    for i in range(fp):
        wmem[i] = 1
    site_of: dict[int, str] = {}

    def open_frame(f_name, f_obj, f_fp) -> None:
        for i in range(f_fp, f_fp + f_obj.frame_size):
            wmem[i] = 0
        for name, (base, count) in f_obj.slots.items():
            if count > 1:
                for k in range(count):
                    site_of[f_fp + base + k] = f"{f_name}.{name}[{k}]"

    open_frame(entry, fobj, fp)
    for i in range(len(inputs)):
        wmem[fp + i] = 1
    regs = [0] * fobj.nregs
    stack: list = []  # (fname, pc, fp, regs, ops, argl, costs, locs, fobj)
    latch: tuple = ()
    uninit_counts: dict[str, int] = {}

    def inject(addr: int, site: str) -> None:
        k = uninit_counts.get(site, 0)
        uninit_counts[site] = k + 1
        mem[addr] = injector(site, k) if injector else 0
        wmem[addr] = 1

    pc = 0
    cycles = 0
    steps = 0
    while True:
        if steps >= budget:
            raise fail(E_BUDGET, f"instruction budget of {budget} exhausted in {fname!r}")
        steps += 1
        if trace:
            bid = fn_starts[fname].get(pc)
            if bid is not None:
                visits[bid] = visits.get(bid, 0) + 1
        op = ops[pc]
        a = argl[pc]
        c = costs[pc]
        if op == "LDL":
            slot = a[1]
            if not wmem[fp + slot]:
                inject(fp + slot, f"{fname}.{fobj.slot_name(slot)}")
            regs[a[0]] = mem[fp + slot]
            cycles += c
            pc += 1
        elif op == "STL":
            slot = a[0]
            if fp + slot >= memlen:
                raise fail(E_MEMFAULT, _where("store", fname, pc, locs))
            mem[fp + slot] = regs[a[1]]
            wmem[fp + slot] = 1
            cycles += c
            pc += 1
        elif op == "LDI":
            regs[a[0]] = a[1]
            cycles += c
            pc += 1
        elif op == "ADD":
            regs[a[0]] = regs[a[1]] + regs[a[2]]
            cycles += c
            pc += 1
        elif op == "SUB":
            regs[a[0]] = regs[a[1]] - regs[a[2]]
            cycles += c
            pc += 1
        elif op == "TRUNC":
            v = regs[a[1]] & ((1 << a[2]) - 1)
            if a[3] and v >= (1 << (a[2] - 1)):
                v -= 1 << a[2]
            regs[a[0]] = v
            cycles += c
            pc += 1
        elif op in ("BEQ", "BNE", "BLT", "BLTU", "BGE", "BGEU"):
            x, y = regs[a[0]], regs[a[1]]
            if op == "BEQ":
                hit = x == y
            elif op == "BNE":
                hit = x != y
            elif op in ("BLT", "BLTU"):
                hit = x < y
            else:
                hit = x >= y
            taken, nottaken = c
            if trace:
                src = instr_block[(fname, pc)]
                dst = fn_starts[fname][a[2]] if hit else fn_starts[fname].get(pc + 1, "")
                kind = "taken" if hit else "fallthrough"
                edge_visits[(src, dst, kind)] = edge_visits.get((src, dst, kind), 0) + 1
            if hit:
                cycles += taken
                pc = a[2]
            else:
                cycles += nottaken
                pc += 1
        elif op == "MUL":
            regs[a[0]] = regs[a[1]] * regs[a[2]]
            cycles += c
            pc += 1
        elif op == "AND":
            regs[a[0]] = regs[a[1]] & regs[a[2]]
            cycles += c
            pc += 1
        elif op == "OR":
            regs[a[0]] = regs[a[1]] | regs[a[2]]
            cycles += c
            pc += 1
        elif op == "XOR":
            regs[a[0]] = regs[a[1]] ^ regs[a[2]]
            cycles += c
            pc += 1
        elif op == "SHL":
            regs[a[0]] = regs[a[1]] << (regs[a[2]] & 63)
            cycles += c
            pc += 1
        elif op in ("SHR", "SAR"):
            regs[a[0]] = regs[a[1]] >> (regs[a[2]] & 63)
            cycles += c
            pc += 1
        elif op == "SLT" or op == "SLTU":
            regs[a[0]] = 1 if regs[a[1]] < regs[a[2]] else 0
            cycles += c
            pc += 1
        elif op == "SEQ":
            regs[a[0]] = 1 if regs[a[1]] == regs[a[2]] else 0
            cycles += c
            pc += 1
        elif op == "LDX":
            idx = regs[a[2]]
            if not 0 <= idx < a[3]:
                raise fail(E_MEMFAULT, _where(f"array read out of bounds (index {idx})",
                                              fname, pc, locs))
            addr = regs[a[1]] + idx
            if not wmem[addr]:
                inject(addr, site_of.get(addr, f"{fname}.mem[{addr}]"))
            regs[a[0]] = mem[addr]
            cycles += c
            pc += 1
        elif op == "STX":
            idx = regs[a[1]]
            if not 0 <= idx < a[3]:
                raise fail(E_MEMFAULT, _where(f"array write out of bounds (index {idx})",
                                              fname, pc, locs))
            addr = regs[a[0]] + idx
            mem[addr] = regs[a[2]]
            wmem[addr] = 1
            cycles += c
            pc += 1
        elif op == "LDG":
            regs[a[0]] = mem[a[1]]
            cycles += c
            pc += 1
        elif op == "STG":
            mem[a[0]] = regs[a[1]]
            cycles += c
            pc += 1
        elif op == "LEA":
            regs[a[0]] = fp + a[1]
            cycles += c
            pc += 1
        elif op == "MOV":
            regs[a[0]] = regs[a[1]]
            cycles += c
            pc += 1
        elif op == "JMP":
            if trace:
                src = instr_block[(fname, pc)]
                dst = fn_starts[fname][a[0]]
                edge_visits[(src, dst, "jump")] = edge_visits.get((src, dst, "jump"), 0) + 1
            cycles += c
            pc = a[0]
        elif op == "CALL":
            callee = a[0]
            cops, cargs, ccosts, clocs, cfn = decoded[callee]
            new_fp = fp + fobj.frame_size
            if new_fp + cfn.frame_size > memlen:
                raise fail(E_MEMFAULT, _where(f"stack overflow calling {callee!r}",
                                              fname, pc, locs))
            if trace:
                src = instr_block[(fname, pc)]
                dst = f"{callee}@0"
                edge_visits[(src, dst, "call")] = edge_visits.get((src, dst, "call"), 0) + 1
            cycles += c
            stack.append((fname, pc + 1, fp, regs, ops, argl, costs, locs, fobj))
            fname, pc, fp = callee, 0, new_fp
            ops, argl, costs, locs, fobj = cops, cargs, ccosts, clocs, cfn
            regs = [0] * cfn.nregs
            open_frame(callee, cfn, new_fp)
            for i in range(cfn.nparams):
                wmem[new_fp + i] = 1
        elif op == "RET":
            latch = tuple(regs[r] for r in a)
            cycles += c
            if not stack:
                return SimResult(latch, cycles, steps, visits, edge_visits)
            if trace:
                src = instr_block[(fname, pc)]
            (fname, pc, fp, regs, ops, argl, costs, locs, fobj) = stack.pop()
            if trace:
                dst = instr_block.get((fname, pc), "")
                edge_visits[(src, dst, "ret")] = edge_visits.get((src, dst, "ret"), 0) + 1
        elif op == "GETRV":
            regs[a[0]] = latch[a[1]]
            cycles += c
            pc += 1
        else:
            raise AssertionError(f"unknown opcode {op}")


def _where(what: str, fname: str, pc: int, locs) -> str:
    loc = locs[pc]
    pos = f" at line {loc.line}" if loc else ""
    return f"{what} in {fname!r} (instruction {pc}){pos}"
