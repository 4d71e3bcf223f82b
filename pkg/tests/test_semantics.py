"""Integer semantics shared by all executors, checked against plain
Python big-integer arithmetic."""
from hypothesis import given, strategies as st

from ticbench.minic.ast import IType, I8, I16, I32, U8, U16, U32
from ticbench.semantics import (
    binop, compare, sdivmod, shift, to_unsigned, udivmod, unop, wrap,
)

TYPES = [I8, I16, I32, U8, U16, U32]


def type_and_values(draw, n=2):
    t = draw(st.sampled_from(TYPES))
    vals = [draw(st.integers(t.min, t.max)) for _ in range(n)]
    return (t, *vals)


@st.composite
def tv2(draw):
    return type_and_values(draw, 2)


@st.composite
def tv1(draw):
    return type_and_values(draw, 1)


@given(st.sampled_from(TYPES), st.integers(-2 ** 70, 2 ** 70))
def test_wrap_is_canonical_and_congruent(t, v):
    w = wrap(v, t)
    assert t.min <= w <= t.max
    assert (w - v) % (1 << t.bits) == 0
    assert wrap(w, t) == w


@given(tv1())
def test_to_unsigned_round_trip(tv):
    t, a = tv
    u = to_unsigned(a, t.bits)
    assert 0 <= u < (1 << t.bits)
    assert wrap(u, t) == a


@given(tv2(), st.sampled_from(["+", "-", "*"]))
def test_ring_ops_are_modular(tv, op):
    t, a, b = tv
    ref = {"+": a + b, "-": a - b, "*": a * b}[op]
    assert binop(op, a, b, t) == wrap(ref, t)


@given(tv2(), st.sampled_from(["&", "|", "^"]))
def test_bitwise_ops_match_unsigned_view(tv, op):
    t, a, b = tv
    ua, ub = to_unsigned(a, t.bits), to_unsigned(b, t.bits)
    ref = {"&": ua & ub, "|": ua | ub, "^": ua ^ ub}[op]
    assert binop(op, a, b, t) == wrap(ref, t)


@given(tv1(), st.integers(-300, 300))
def test_shift_count_masks_to_width(tv, count):
    t, a = tv
    c = count & (t.bits - 1)
    assert shift("<<", a, count, t) == wrap(a << c, t)
    assert shift(">>", a, count, t) == a >> c  # arithmetic iff canonical < 0


@given(tv1())
def test_logical_right_shift_for_unsigned(tv):
    t, a = tv
    if not t.signed:
        assert shift(">>", a, t.bits - 1, t) in (0, 1)


@given(tv2(), st.sampled_from(["<", "<=", ">", ">=", "==", "!="]))
def test_compare_on_canonical_values(tv, op):
    t, a, b = tv
    import operator
    fn = {"<": operator.lt, "<=": operator.le, ">": operator.gt,
          ">=": operator.ge, "==": operator.eq, "!=": operator.ne}[op]
    assert compare(op, a, b) == int(fn(a, b))


@given(tv1())
def test_unops(tv):
    t, a = tv
    assert unop("-", a, t) == wrap(-a, t)
    assert unop("~", a, t) == wrap(~a, t)
    assert unop("!", a, t) == int(a == 0)


# ------------------------------------------------------------- division

@given(st.integers(8, 32), st.data())
def test_udivmod_euclidean(bits, data):
    lim = (1 << bits) - 1
    a = data.draw(st.integers(0, lim))
    b = data.draw(st.integers(1, lim))
    q, r = udivmod(a, b, bits)
    assert a == q * b + r
    assert 0 <= r < b


@given(st.integers(0, 2 ** 32 - 1), st.integers(8, 32))
def test_udivmod_by_zero_is_total(a, bits):
    a &= (1 << bits) - 1
    assert udivmod(a, 0, bits) == ((1 << bits) - 1, a)


@given(st.data())
def test_sdivmod_truncates_toward_zero(data):
    t = data.draw(st.sampled_from([I8, I16, I32]))
    a = data.draw(st.integers(t.min, t.max))
    b = data.draw(st.integers(t.min, t.max).filter(lambda v: v != 0))
    if a == t.min and b == -1:
        return  # covered by the pinned-edges test
    q, r = sdivmod(a, b, t.bits)
    assert a == q * b + r
    assert abs(r) < abs(b)
    assert r == 0 or (r < 0) == (a < 0)
    ref_q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        ref_q = -ref_q
    assert q == ref_q


def test_sdivmod_pinned_edges():
    for bits in (8, 16, 32):
        m = -(1 << (bits - 1))
        assert sdivmod(m, -1, bits) == (m, 0)  # INT_MIN / -1 wraps
        assert sdivmod(7, 0, bits) == (-1, 7)
        assert sdivmod(-7, 0, bits) == (-1, -7)
        assert sdivmod(0, 0, bits) == (-1, 0)


def test_udivmod_exhaustive_width_4():
    for a in range(16):
        for b in range(16):
            q, r = udivmod(a, b, 4)
            if b == 0:
                assert (q, r) == (15, a)
            else:
                assert (q, r) == (a // b, a % b)


def test_sdivmod_exhaustive_width_4():
    for a in range(-8, 8):
        for b in range(-8, 8):
            q, r = sdivmod(a, b, 4)
            if b == 0:
                assert (q, r) == (-1, a)
            elif a == -8 and b == -1:
                assert (q, r) == (-8, 0)
            else:
                ref_q = abs(a) // abs(b)
                if (a < 0) != (b < 0):
                    ref_q = -ref_q
                assert q == ref_q
                assert a == q * b + r


@given(tv2(), st.sampled_from(["/", "%"]))
def test_binop_division_routes_by_sign(tv, op):
    t, a, b = tv
    got = binop(op, a, b, t)
    if t.signed:
        q, r = sdivmod(a, b, t.bits)
    else:
        q, r = udivmod(a, b, t.bits)
    assert got == wrap(q if op == "/" else r, t)


def test_wrap_rejects_nothing_in_domain():
    for t in TYPES:
        assert wrap(t.min, t) == t.min
        assert wrap(t.max, t) == t.max
        assert wrap(t.max + 1, t) == t.min
        assert wrap(t.min - 1, t) == t.max
