"""Deterministic virtual processor: compiler, timed CFG, simulator."""
from .isa import Instr, MachineFunction, MachineProgram, dump_program
from .compile import compile_program
from .cfg import TimedCfg, build_cfg, longest_path, structural_wcet
from .sim import SimResult, simulate

__all__ = [
    "Instr", "MachineFunction", "MachineProgram", "dump_program",
    "compile_program", "TimedCfg", "build_cfg", "longest_path",
    "structural_wcet", "SimResult", "simulate",
]
