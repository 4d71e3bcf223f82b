"""Software division helpers.

The DVP has no divide unit, so `/` and `%` lower to calls:

  __udivmod(a, b) -> (a / b, a % b)   unsigned, bit-serial restoring division
  __sdivmod(a, b) -> (a / b, a % b)   signed, truncating toward zero

Both return two values (quotient latch 0, remainder latch 1).  Division by
zero is total: unsigned yields (2^W - 1, a); signed yields (-1, a).
Signed overflow (min / -1) wraps.  The unsigned loop body is branch-free;
its single backedge runs exactly W times (W = word width), recorded in
`loop_bounds` so the structural bound never needs to guess.
"""
from __future__ import annotations

from ..diag import Loc
from .isa import Instr, MachineFunction

_LOC = Loc("<helper>", 0, 0)


def _ins(op: str, *args) -> Instr:
    return Instr(op, args, node="", loc=_LOC)


def make_udivmod(width: int) -> MachineFunction:
    # registers: 0=a 1=b 2=one 3=k 4=q 5=r 6=minus1 7=t 8=lt 9=mask 10=sub 11=ge
    code = [
        _ins("LDL", 0, 0),
        _ins("LDL", 1, 1),
        _ins("LDI", 2, 1),
        _ins("LDI", 3, width - 1),
        _ins("LDI", 4, 0),
        _ins("LDI", 5, 0),
        _ins("LDI", 6, -1),
        # loop over bits, most significant first
        _ins("SHL", 5, 5, 2),     # r <<= 1
        _ins("SHR", 7, 0, 3),     # t = a >> k
        _ins("AND", 7, 7, 2),     # t &= 1
        _ins("OR", 5, 5, 7),      # r |= t
        _ins("SLTU", 8, 5, 1),    # lt = r < b
        _ins("SUB", 9, 8, 2),     # mask = lt - 1  (all ones iff r >= b)
        _ins("AND", 10, 1, 9),    # sub = b & mask
        _ins("SUB", 5, 5, 10),    # r -= sub
        _ins("SHL", 4, 4, 2),     # q <<= 1
        _ins("SUB", 11, 2, 8),    # ge = 1 - lt
        _ins("OR", 4, 4, 11),     # q |= ge
        _ins("SUB", 3, 3, 2),     # k -= 1
        _ins("BNE", 3, 6, 7),     # while k != -1
        _ins("RET", 4, 5),
    ]
    return MachineFunction(
        name="__udivmod", nparams=2, frame_size=2, code=code,
        slots={"a": (0, 1), "b": (1, 1)}, is_helper=True, nregs=12,
        loop_bounds={7: width},
    )


def make_sdivmod(width: int) -> MachineFunction:
    # registers: 0=a 1=b 2=zero 3=sa 4=sb 5=ma 6=t 7=A 8=mb 9=B
    #            10=q 11=r 12=qs 13=mq
    code = [
        _ins("LDL", 0, 0),
        _ins("LDL", 1, 1),
        _ins("LDI", 2, 0),
        _ins("BNE", 1, 2, 6),     # b != 0: the usual path
        _ins("LDI", 6, -1),
        _ins("RET", 6, 0),        # (q, r) = (-1, a)
        _ins("SLT", 3, 0, 2),     # sa = a < 0
        _ins("SLT", 4, 1, 2),     # sb = b < 0
        _ins("SUB", 5, 2, 3),     # ma = -sa
        _ins("XOR", 6, 0, 5),
        _ins("SUB", 7, 6, 5),     # A = |a|  ((a ^ ma) - ma)
        _ins("SUB", 8, 2, 4),     # mb = -sb
        _ins("XOR", 6, 1, 8),
        _ins("SUB", 9, 6, 8),     # B = |b|
        _ins("STL", 2, 7),        # outgoing arg 0 (slot frame_size + 0)
        _ins("STL", 3, 9),        # outgoing arg 1
        _ins("CALL", "__udivmod"),
        _ins("GETRV", 10, 0),
        _ins("GETRV", 11, 1),
        _ins("XOR", 12, 3, 4),    # quotient sign = sa ^ sb
        _ins("SUB", 13, 2, 12),   # mq = -qs
        _ins("XOR", 10, 10, 13),
        _ins("SUB", 10, 10, 13),  # q = (q ^ mq) - mq
        _ins("TRUNC", 10, 10, width, 1),
        _ins("XOR", 11, 11, 5),
        _ins("SUB", 11, 11, 5),   # r = (r ^ ma) - ma  (sign of the dividend)
        _ins("TRUNC", 11, 11, width, 1),
        _ins("RET", 10, 11),
    ]
    return MachineFunction(
        name="__sdivmod", nparams=2, frame_size=2, code=code,
        slots={"a": (0, 1), "b": (1, 1)}, is_helper=True, nregs=14,
    )


def make_helpers(width: int) -> dict[str, MachineFunction]:
    return {"__udivmod": make_udivmod(width), "__sdivmod": make_sdivmod(width)}
