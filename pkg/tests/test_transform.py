"""Slicing, acceleration and abstraction: dependence-graph structure,
exactness of the first two stages against interpreter runs, and the
one-sided `_time` guarantee of the third."""
import random

import pytest

from ticbench.minic import ast as A
from ticbench.minic import parse, pretty_print
from ticbench.dvp import build_cfg, compile_program
from ticbench.annotate import build_driver, instrument
from ticbench.interp import Interp, map_injector
from ticbench.semantics import wrap
from ticbench.transform import (
    build_pdg, slice_time, accelerate, abstract_loops,
)

from conftest import CORPUS_ENTRIES, corpus_build


def build(src: str, entry: str, width: int = 32):
    prog = parse(src, "t.mc", word_width=width)
    m = compile_program(prog)
    cfg = build_cfg(m)
    inst, _ = instrument(prog, m, cfg)
    return build_driver(inst, entry)


def loops_in(p) -> int:
    return sum(1 for fn in p.functions for n in A.walk(fn)
               if isinstance(n, (A.For, A.While)))


def seeded_injector(seed, pins=None, masks=None):
    """Deterministic per-site draws, with site pinning and bit masking."""
    def inject(site, k):
        if pins and site in pins:
            return pins[site]
        v = random.Random(f"{seed}/{site}/{k}").getrandbits(32)
        if masks and site in masks:
            v &= masks[site]
        return v
    return inject


PRIME_MASK = {"_driver._a_n": (1 << 20) - 1}  # keep trial division short


# --------------------------------------------------------- dependence graph

def test_loop_step_dependences():
    prog = parse("""
        void f(void) {
            int s;
            int i;
            s = 0;
            for (i = 0; i < 35; i++) {
                s = s + 1;
            }
        }
    """, "t.mc")
    g = build_pdg(prog)
    loop = next(n for n in A.walk(prog.function("f")) if isinstance(n, A.For))
    step = loop.step
    assert step.nid in g.control[loop.nid]
    assert step.nid in g.data[step.nid]
    assert step.nid in g.data[loop.init.nid]


def test_single_assignment_graph_is_one_isolated_node():
    prog = parse("int x;\nvoid f(void) { x = 1; }", "t.mc")
    g = build_pdg(prog)
    assert len(g.nodes) == 1
    assert sum(len(v) for v in g.data.values()) == 0
    assert sum(len(v) for v in g.control.values()) == 0


def test_array_write_reaches_every_later_element_read():
    src = """
        void f(unsigned char x, unsigned char y) {
            int a[4];
            int i;
            for (i = 0; i < 4; i++) {
                a[i] = 0;
            }
            a[x & 3] = y;
            for (i = 0; i < 4; i++) {
                if (a[i] > 3) {
                    int hot = 0;
                }
            }
        }
    """
    drv = build(src, "f")
    g = build_pdg(drv)
    fn = drv.function("f")
    write = next(n for n in A.walk(fn)
                 if isinstance(n, A.Assign) and isinstance(n.target, A.Index)
                 and isinstance(n.value, A.VarRef))
    read = next(n for n in A.walk(fn)
                if isinstance(n, A.If) and isinstance(n.cond, A.Binary))
    assert read.nid in g.data[write.nid]
    # and the conservative edge keeps timing equal after slicing on the
    # whole 4-bit input square
    sliced = slice_time(drv, g)
    for x in range(16):
        for y in range(16):
            pins = {"_driver._a_x": x, "_driver._a_y": y}
            t0 = Interp(drv).run(injector=map_injector(pins)).time
            t1 = Interp(sliced).run(injector=map_injector(pins)).time
            assert t0 == t1


# ------------------------------------------------------------------ slicing

@pytest.fixture(scope="module")
def fir_sliced():
    *_, drv = corpus_build("fir.mc", 32)
    return drv, slice_time(drv, build_pdg(drv))


def test_slice_requires_instrumentation():
    prog = parse("void f(void) { int x; x = 1; }", "t.mc")
    with pytest.raises(Exception):
        slice_time(prog, build_pdg(prog))


def test_fir_slice_keeps_loop_control_drops_value_flow(fir_sliced):
    _, sliced = fir_sliced
    task = sliced.function("task")
    kinds = [s.kind for s in task.body]
    assert kinds == ["TicStmt", "DeclStmt", "For", "TicStmt", "TicStmt",
                     "TicStmt", "TicStmt"]
    loop = task.body[2]
    assert [s.kind for s in loop.body] == ["TicStmt", "TicStmt"]
    # the accumulator, scaling division and output write are all gone
    assert not any(isinstance(n, A.Call) for n in A.walk(task))


def test_fir_slice_zeroes_unread_arguments_and_prunes_hardening(fir_sliced):
    _, sliced = fir_sliced
    driver = sliced.function(sliced.driver)
    call = next(n for n in A.walk(driver) if isinstance(n, A.Call))
    assert all(isinstance(a, A.IntLit) and a.value == 0 for a in call.args)
    assert sliced.hardened == []
    assert not any(isinstance(n, A.NondetExpr) for fn in sliced.functions
                   for n in A.walk(fn))


def test_fir_slice_time_is_input_free(fir_sliced):
    drv, sliced = fir_sliced
    assert Interp(sliced).run().time == 2826
    assert Interp(drv).run(injector=seeded_injector(3)).time == 2826


def test_slice_is_identity_when_everything_feeds_control():
    drv = build("void f(int x) { x = x + 2; while (x > 0) { x = x - 1; } }",
                "f")
    sliced = slice_time(drv, build_pdg(drv))
    assert pretty_print(sliced) == pretty_print(drv)


def test_slice_keeps_assumptions():
    drv = build("void f(int x) { assume(x > 0); int y = x + 1; }", "f")
    sliced = slice_time(drv, build_pdg(drv))
    body = sliced.function("f").body
    assert any(isinstance(s, A.AssumeStmt) for s in body)
    assert not any(isinstance(s, A.DeclStmt) and s.decl.name == "y"
                   for s in body)


def test_slice_time_equal_exhaustively_on_byte_input():
    *_, drv = corpus_build("cnt.mc", 32)
    sliced = slice_time(drv, build_pdg(drv))
    for seed in range(256):
        pins = {"_driver._a_seed": seed}
        t0 = Interp(drv).run(injector=map_injector(pins)).time
        t1 = Interp(sliced).run(injector=map_injector(pins)).time
        assert t0 == t1


@pytest.mark.parametrize("name", sorted(CORPUS_ENTRIES))
def test_slice_time_equal_on_sampled_inputs(name):
    for width, seeds in ((32, (0, 1, 2)), (16, (0,))):
        *_, drv = corpus_build(name, width)
        sliced = slice_time(drv, build_pdg(drv))
        masks = PRIME_MASK if name == "prime.mc" else None
        for seed in seeds:
            t0 = Interp(drv).run(injector=seeded_injector(seed, masks=masks)).time
            t1 = Interp(sliced).run(injector=seeded_injector(seed, masks=masks)).time
            assert t0 == t1


# ------------------------------------------------------------- acceleration

def test_fir_loop_becomes_split_closed_form(fir_sliced):
    _, sliced = fir_sliced
    accel, summaries = accelerate(sliced)
    assert loops_in(accel) == 0
    (s,) = summaries
    assert s.trip == 35
    assert s.time_formula == "_k1_0 * 21 + _k1_0 * 36"
    assert s.cond_cost == 21
    assert s.exact
    assert Interp(accel).run().time == 2826


def test_unsliced_fir_is_not_accelerated():
    *_, drv = corpus_build("fir.mc", 32)
    accel, summaries = accelerate(drv)
    assert summaries == []
    assert loops_in(accel) == 1


def test_branch_in_body_blocks_acceleration():
    drv = build("""
        int f(int x) {
            int s = 0;
            int i;
            for (i = 0; i < 10; i++) {
                if (x > 5) { s += 3; } else { s += 1; }
            }
            return s;
        }
    """, "f")
    accel, summaries = accelerate(drv)
    assert summaries == []
    assert loops_in(accel) == 1


def test_constant_loop_recurrence_and_time():
    drv = build("""
        int h(int s0) {
            int s = s0;
            int i;
            for (i = 0; i < 8; i++) { s += 2; }
            return s;
        }
    """, "h")
    accel, summaries = accelerate(drv)
    (s,) = summaries
    assert s.trip == 8
    assert s.recurrences == {"s": "s + 16", "i": "8"}
    assert s.exact
    for s0 in (0, 7, -4, 2**31 - 1):
        pins = {"_driver._a_s0": s0}
        t0 = Interp(drv).run(injector=map_injector(pins)).time
        t1 = Interp(accel).run(injector=map_injector(pins)).time
        assert t0 == t1
        assert Interp(accel).run(entry="h", args=(s0,)).ret == wrap(s0 + 16, A.I32)


def test_nested_constant_loops_collapse():
    drv = build("""
        int nest(void) {
            int s = 0;
            int i;
            int j;
            for (i = 0; i < 7; i++) {
                for (j = 0; j < 8; j++) { s += 1; }
            }
            return s;
        }
    """, "nest")
    accel, summaries = accelerate(drv)
    assert len(summaries) == 2 and loops_in(accel) == 0
    assert Interp(drv).run().time == Interp(accel).run().time
    assert Interp(accel).run(entry="nest").ret == 56


def test_symbolic_trip_count_matches_interpreter():
    drv = build("""
        int sum3(int n) {
            int s = 0;
            int i;
            for (i = 0; i < n; i++) { s += 3; }
            return s;
        }
    """, "sum3")
    accel, summaries = accelerate(drv)
    (s,) = summaries
    assert s.trip is None and loops_in(accel) == 0
    for n in (-5, 0, 1, 7, 255):
        pins = {"_driver._a_n": n}
        r0 = Interp(drv).run(injector=map_injector(pins))
        r1 = Interp(accel).run(injector=map_injector(pins))
        assert (r0.time, r0.ret) == (r1.time, r1.ret)


def test_symbolic_trip_count_extrapolates_to_intmax():
    drv = build("""
        int sum3(int n) {
            int s = 0;
            int i;
            for (i = 0; i < n; i++) { s += 3; }
            return s;
        }
    """, "sum3")
    accel, _ = accelerate(drv)
    # the unaccelerated time is affine in n; two cheap runs predict the
    # 2^31-iteration one the closed form must reproduce
    t1 = Interp(drv).run(injector=map_injector({"_driver._a_n": 1})).time
    t2 = Interp(drv).run(injector=map_injector({"_driver._a_n": 2})).time
    n = 2**31 - 1
    r = Interp(accel).run(injector=map_injector({"_driver._a_n": n}))
    assert r.time == t1 + (n - 1) * (t2 - t1)
    assert Interp(accel).run(entry="sum3", args=(n,)).ret == wrap(3 * n, A.I32)


def test_descending_unsigned_counter_on_16_bit_target():
    drv = build("""
        unsigned short stepdown(unsigned short n) {
            unsigned short s = 0;
            unsigned short i;
            for (i = n; i > 0; i--) { s += 1; }
            return s;
        }
    """, "stepdown", width=16)
    accel, summaries = accelerate(drv)
    assert len(summaries) == 1 and loops_in(accel) == 0
    for n in (0, 1, 5, 65535):
        pins = {"_driver._a_n": n}
        t0 = Interp(drv).run(injector=map_injector(pins)).time
        t1 = Interp(accel).run(injector=map_injector(pins)).time
        assert t0 == t1
        assert Interp(accel).run(entry="stepdown", args=(n,)).ret == n


@pytest.mark.parametrize("name", sorted(CORPUS_ENTRIES))
def test_slice_accelerate_time_equal_on_sampled_inputs(name):
    *_, drv = corpus_build(name, 32)
    sliced = slice_time(drv, build_pdg(drv))
    accel, _ = accelerate(sliced)
    masks = PRIME_MASK if name == "prime.mc" else None
    for seed in range(3):
        t0 = Interp(drv).run(injector=seeded_injector(seed, masks=masks)).time
        t1 = Interp(accel).run(injector=seeded_injector(seed, masks=masks)).time
        assert t0 == t1


# -------------------------------------------------------------- abstraction

def test_accelerated_program_is_left_unchanged(fir_sliced):
    _, sliced = fir_sliced
    accel, _ = accelerate(sliced)
    abstracted, summaries = abstract_loops(accel)
    assert summaries == []
    assert pretty_print(abstracted) == pretty_print(accel)


def test_branchy_loop_charges_straight_sum_plus_max_branch():
    drv = build("""
        int f(int x) {
            int s = 0;
            int i;
            for (i = 0; i < 10; i++) {
                if (x > 5) { s += 3; } else { s += 1; }
            }
            return s;
        }
    """, "f")
    abstracted, summaries = abstract_loops(drv)
    (s,) = summaries
    assert s.trip == 10
    assert s.time_formula == "_k1_0 * (21 + 21 + 22) + _k1_0 * 22"
    assert s.recurrences["s"] == "nondet"
    assert not s.exact
    assert loops_in(abstracted) == 0


def test_abstracted_worst_case_covers_exhaustive_byte_domain():
    drv = build("""
        int f(char x) {
            int s = 0;
            int i;
            for (i = 0; i < 10; i++) {
                if (x > 5) { s += 3; } else { s += 1; }
            }
            return s;
        }
    """, "f")
    worst = max(Interp(drv).run(injector=map_injector(
        {"_driver._a_x": x})).time for x in range(-128, 128))
    abstracted, _ = abstract_loops(drv)
    got = Interp(abstracted).run(injector=seeded_injector(0)).time
    assert got >= worst


def test_abstracted_worst_case_covers_cnt_exhaustively():
    *_, drv = corpus_build("cnt.mc", 32)
    sliced = slice_time(drv, build_pdg(drv))
    accel, _ = accelerate(sliced)
    abstracted, summaries = abstract_loops(accel)
    assert loops_in(abstracted) == 0 and len(summaries) == 2
    assert all(not s.exact for s in summaries)
    worst = max(Interp(drv).run(injector=map_injector(
        {"_driver._a_seed": v})).time for v in range(256))
    got = Interp(abstracted).run(injector=seeded_injector(1)).time
    assert got >= worst


def test_break_exit_admits_shorter_and_longer_runs():
    drv = build("""
        int seek(int key) {
            int i;
            int hit = 0;
            for (i = 0; i < 12; i++) {
                if (i == key) { hit = 1; break; }
            }
            return hit;
        }
    """, "seek")
    exact = [Interp(drv).run(injector=map_injector({"_driver._a_key": k})).time
             for k in range(-2, 15)]
    abstracted, summaries = abstract_loops(drv)
    (s,) = summaries
    assert s.recurrences["_n_0"] == "nondet"
    assert s.recurrences["i"] == "_k0_0 + _m_0 * 1"
    times, rejected = set(), 0
    for n in range(14):
        for m in range(14):
            r = Interp(abstracted).run(injector=map_injector(
                {"_driver._a_key": 3, "seek._n_0": n, "seek._m_0": m,
                 "seek.hit": 1}))
            if r.assume_violated:
                rejected += 1
            else:
                times.add(r.time)
    assert rejected > 0  # gates beyond the trip count are infeasible
    assert min(times) <= min(exact)
    assert max(times) >= max(exact)


def test_return_exit_is_gated_by_nondet_boolean():
    drv = build("""
        int find(int key) {
            int i;
            for (i = 0; i < 8; i++) {
                if (i == key) { return i * 2; }
            }
            return 0 - 1;
        }
    """, "find")
    exact = [Interp(drv).run(injector=map_injector({"_driver._a_key": k})).time
             for k in range(-2, 10)]
    abstracted, summaries = abstract_loops(drv)
    (s,) = summaries
    assert s.recurrences["_r_0"] == "nondet"
    times = set()
    for n in range(10):
        for gate in (0, 1):
            r = Interp(abstracted).run(injector=map_injector(
                {"_driver._a_key": 3, "find._n_0": n, "find._r_0": gate,
                 "find._rv_0": 6}))
            if not r.assume_violated:
                times.add(r.time)
    assert min(times) <= min(exact)
    assert max(times) >= max(exact)


def test_outer_loop_over_symbolic_inner_stays_for_unwinding():
    drv = build("""
        int f(int n) {
            int s = 0;
            int i;
            int j;
            for (i = 0; i < 4; i++) {
                for (j = 0; j < n; j++) { s += 2; }
            }
            return s;
        }
    """, "f")
    accel, asum = accelerate(drv)
    assert len(asum) == 1 and asum[0].trip is None
    abstracted, bsum = abstract_loops(accel)
    # the outer per-iteration cost depends on n through the inner trip
    # count; charging any constant would be wrong, so nothing happens
    assert bsum == []
    for n in (0, 1, 3, 7, -1, 100):
        pins = {"_driver._a_n": n}
        t0 = Interp(drv).run(injector=map_injector(pins)).time
        t1 = Interp(abstracted).run(injector=map_injector(pins)).time
        assert t0 == t1


def test_nested_branchy_loops_collapse_to_worst_case():
    drv = build("""
        int g(int x) {
            int s = 0;
            int i;
            int j;
            for (i = 0; i < 4; i++) {
                for (j = 0; j < 5; j++) {
                    if (x > j) { s += 2; } else { s -= 1; }
                }
            }
            return s;
        }
    """, "g")
    worst = max(Interp(drv).run(injector=map_injector(
        {"_driver._a_x": x})).time for x in (-5, 0, 2, 5, 9))
    abstracted, summaries = abstract_loops(drv)
    assert len(summaries) == 2 and loops_in(abstracted) == 0
    got = Interp(abstracted).run(injector=seeded_injector(2)).time
    assert got == 2033 and got >= worst


@pytest.mark.parametrize("name", ["cnt.mc", "crc.mc", "adpcm.mc"])
def test_abstraction_never_lowers_the_sampled_maximum(name):
    *_, drv = corpus_build(name, 32)
    sliced = slice_time(drv, build_pdg(drv))
    accel, _ = accelerate(sliced)
    abstracted, summaries = abstract_loops(accel)
    assert summaries
    pins = {}
    for s in summaries:
        for nm in s.recurrences:
            if nm.startswith(("_n_", "_m_")):
                pins[f"{s.fn}.{nm}"] = s.trip
            elif nm.startswith("_r_"):
                pins[f"{s.fn}.{nm}"] = 0
    for seed in range(4):
        t0 = Interp(accel).run(injector=seeded_injector(seed)).time
        r1 = Interp(abstracted).run(injector=seeded_injector(seed, pins=pins))
        assert not r1.assume_violated
        assert r1.time >= t0
