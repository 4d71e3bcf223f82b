"""Bit-exact integer operation semantics shared by every executor.

The simulator, the source-level interpreter and the checker engine all
route arithmetic through these functions, so a value computed three ways
is the same value.  Values are canonical Python ints within their type's
range (signed types two's-complement).

Pinned behavior:
  * wrap_* : reduce modulo 2^bits into the type's canonical range
    (signed overflow wraps; this is defined behavior in MiniC).
  * shifts : count masked to bits-1 of the promoted left type.
  * udiv/urem : division by zero yields q = 2^bits - 1, r = dividend.
  * sdiv/srem : truncate toward zero; division by zero yields q = -1,
    r = dividend; INT_MIN / -1 wraps to INT_MIN with remainder 0.
"""
from __future__ import annotations

from .minic.ast import IType


def wrap(v: int, t: IType) -> int:
    m = v & ((1 << t.bits) - 1)
    if t.signed and m >= (1 << (t.bits - 1)):
        m -= 1 << t.bits
    return m


def to_unsigned(v: int, bits: int) -> int:
    return v & ((1 << bits) - 1)


def udivmod(a: int, b: int, bits: int) -> tuple[int, int]:
    """Unsigned division of canonical unsigned values; total (b == 0 defined)."""
    if b == 0:
        return (1 << bits) - 1, a
    return a // b, a % b


def sdivmod(a: int, b: int, bits: int) -> tuple[int, int]:
    """Signed truncating division of canonical signed values; total."""
    if b == 0:
        return -1, a
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    r = a - q * b
    # Wrap the INT_MIN / -1 case into range.
    lim = 1 << (bits - 1)
    if q >= lim:
        q -= 2 * lim
    return q, r


def binop(op: str, a: int, b: int, t: IType) -> int:
    """Apply a binary arithmetic/bitwise op on values already converted to t."""
    if op == "+":
        return wrap(a + b, t)
    if op == "-":
        return wrap(a - b, t)
    if op == "*":
        return wrap(a * b, t)
    if op == "/":
        if t.signed:
            return wrap(sdivmod(a, b, t.bits)[0], t)
        return udivmod(a, b, t.bits)[0]
    if op == "%":
        if t.signed:
            return wrap(sdivmod(a, b, t.bits)[1], t)
        return udivmod(a, b, t.bits)[1]
    if op == "&":
        return wrap(to_unsigned(a, t.bits) & to_unsigned(b, t.bits), t)
    if op == "|":
        return wrap(to_unsigned(a, t.bits) | to_unsigned(b, t.bits), t)
    if op == "^":
        return wrap(to_unsigned(a, t.bits) ^ to_unsigned(b, t.bits), t)
    raise ValueError(op)


def shift(op: str, a: int, count: int, t: IType) -> int:
    """Shift of a (canonical in t) by count (any int); count masks to bits-1."""
    c = count & (t.bits - 1)
    if op == "<<":
        return wrap(a << c, t)
    # Python >> on the canonical value is arithmetic for signed (negative)
    # ints and logical for unsigned (non-negative) ones, which is exactly
    # the sign-dependent behavior required.
    return a >> c


def compare(op: str, a: int, b: int) -> int:
    """Compare canonical values already converted to a common type."""
    if op == "<":
        return int(a < b)
    if op == "<=":
        return int(a <= b)
    if op == ">":
        return int(a > b)
    if op == ">=":
        return int(a >= b)
    if op == "==":
        return int(a == b)
    if op == "!=":
        return int(a != b)
    raise ValueError(op)


def unop(op: str, a: int, t: IType) -> int:
    if op == "-":
        return wrap(-a, t)
    if op == "~":
        return wrap(~a, t)
    if op == "!":
        return int(a == 0)
    raise ValueError(op)
