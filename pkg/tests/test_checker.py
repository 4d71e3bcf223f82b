"""Bound-claim checking: the built-in exploration oracle, exported C
units, and external tool adapters.

The oracle's contract is decided empirically here: on programs whose
nondet inputs are small enough to enumerate, Verified/Falsified answers
must coincide with exhaustive interpretation over every input vector,
and every Falsified answer must carry a counterexample whose interpreter
replay reproduces the witnessed `_time` exactly."""
import functools
import shutil
import subprocess
import sys
import time

import pytest
from hypothesis import given, strategies as st

from ticbench.annotate import build_driver
from ticbench.checker import (
    Assertion, AssertionBatch, BuiltinChecker, CheckBudget, ExternalChecker,
    FALSIFIED, GE, LE, Portfolio, UNKNOWN, UnwindSpec, VERIFIED,
    check, explore, export_checkable, insert_batch, portfolio_checker,
)
from ticbench.diag import DiagnosticError
from ticbench.interp import Interp, map_injector
from ticbench.minic import parse, pretty_print
from ticbench.transform import abstract_loops, accelerate, build_pdg, slice_time

from conftest import corpus_build


def closed(src: str, entry: str, width: int = 32):
    """Driver-closed program from source that carries its own `_time`."""
    prog = parse(src, "t.mc", word_width=width, allow_instrumentation=True)
    return build_driver(prog, entry)


def le(*bounds) -> AssertionBatch:
    return AssertionBatch.of(bounds, LE)


def ge(*bounds) -> AssertionBatch:
    return AssertionBatch.of(bounds, GE)


def statuses(v, batch):
    return [v.outcome(a.aid).status for a in batch]


def engine_bounds(drv, u=None, **kw):
    """(max upper, min lower) over completed paths, demanding completeness."""
    ex = explore(drv, u, **kw)
    done = [p for p in ex.paths if p.kind == "done"]
    assert done and not ex.truncated and not ex.insufficient and not ex.errors
    return max(p.hi for p in done), min(p.lo for p in done), ex


def replay_time(drv, ce) -> int:
    res = Interp(drv).run(injector=map_injector(ce.injector_map()))
    assert not res.assume_violated and res.assert_failed is None
    return res.time


CONST = """
uint64_t _time = 0;
void f(void) {
    _time += 42;
}
"""

TWO_PATH = """
uint64_t _time = 0;
void f(unsigned char x) {
    if (x > 100) {
        _time += 25;
    } else {
        _time += 10;
    }
}
"""

SPIN = """
uint64_t _time = 0;
void spin(unsigned char n) {
    unsigned char i = 0;
    while (i < n) {
        _time += 3;
        i = i + 1;
    }
}
"""

WIDE = """
uint64_t _time = 0;
void f(unsigned int x) {
    if (x < 100) {
        _time += 50;
    } else {
        _time += 5;
    }
}
"""

GATE = """
uint64_t _time = 0;
void f(unsigned int n) {
    assume(n <= 1000);
    _time += 44;
    _time += n * 21;
}
"""

EIGHT = """
uint64_t _time = 0;
void f(unsigned char x) {
    if (x & 1) {
        _time += 7;
    }
    if (x > 200) {
        _time += 9;
    }
    _time += 1;
}
"""


@functools.lru_cache(maxsize=None)
def eight_checker() -> BuiltinChecker:
    return BuiltinChecker(closed(EIGHT, "f"))


# ------------------------------------------------------------ batch shape

def test_batch_bounds_must_strictly_increase():
    AssertionBatch((Assertion("a", LE, 1), Assertion("b", LE, 2)))
    with pytest.raises(DiagnosticError):
        AssertionBatch(())
    with pytest.raises(DiagnosticError):
        AssertionBatch((Assertion("a", LE, 2), Assertion("b", LE, 2)))
    with pytest.raises(DiagnosticError):
        AssertionBatch((Assertion("a", "<", 2),))


def test_batch_of_dedupes_and_sorts():
    b = AssertionBatch.of([7, 3, 7], LE)
    assert [a.bound for a in b] == [3, 7]
    assert [a.aid for a in b] == ["t0", "t1"]


def test_unwind_spec_rejects_nonpositive_depths():
    with pytest.raises(DiagnosticError):
        UnwindSpec(depths={"f:0": 0})
    with pytest.raises(DiagnosticError):
        UnwindSpec(default_depth=-1)
    assert UnwindSpec(depths={"f:0": 3}).depth_for("f:0") == 3
    assert UnwindSpec(default_depth=5).depth_for("anything") == 5


# -------------------------------------------------------- straight verdicts

def test_constant_program_splits_batch_at_its_exact_time():
    drv = closed(CONST, "f")
    batch = le(41, 42, 43)
    v = check(drv, batch)
    assert statuses(v, batch) == [FALSIFIED, VERIFIED, VERIFIED]
    ce = v.outcome("t0").counterexample
    assert ce is not None and ce.witness_time == 42
    assert replay_time(drv, ce) == 42


def test_two_path_program_matches_exhaustive_byte_sweep():
    drv = closed(TWO_PATH, "f")
    times = {Interp(drv).run(injector=map_injector(
        {"_driver._a_x": x})).time for x in range(256)}
    assert times == {10, 25}
    batch = le(9, 10, 20, 25, 30)
    v = check(drv, batch)
    assert statuses(v, batch) == [FALSIFIED] * 3 + [VERIFIED] * 2
    ce = v.outcome("t2").counterexample
    assert ce.witness_time == 25
    sites = [s for s, _, _ in ce.assignments]
    assert sites == ["_driver._a_x"]
    assert replay_time(drv, ce) == 25


def test_lower_bound_claims_mirror_the_upper_ones():
    drv = closed(TWO_PATH, "f")
    batch = ge(5, 10, 11)
    v = check(drv, batch)
    assert statuses(v, batch) == [VERIFIED, VERIFIED, FALSIFIED]
    ce = v.outcome("t2").counterexample
    assert ce.witness_time == 10 and replay_time(drv, ce) == 10


@given(st.lists(st.integers(0, 40), min_size=1, max_size=5, unique=True))
def test_eight_bit_batches_are_conclusive_and_correct(bounds):
    batch = le(*bounds)
    v = eight_checker().check(batch)
    for a in batch:
        o = v.outcome(a.aid)
        # exhaustive truth for EIGHT: times are {1, 8, 10, 17}
        want = VERIFIED if a.bound >= 17 else FALSIFIED
        assert o.status == want
        if o.status == FALSIFIED:
            assert o.counterexample.witness_time > a.bound


@given(st.lists(st.integers(0, 30), min_size=2, max_size=6, unique=True))
def test_verdicts_are_monotone_over_increasing_bounds(bounds):
    drv = closed(TWO_PATH, "f")
    batch = le(*bounds)
    v = BuiltinChecker(drv).check(batch)
    seen_verified = False
    for a in batch:
        s = v.outcome(a.aid).status
        if seen_verified:
            assert s == VERIFIED
        seen_verified = seen_verified or s == VERIFIED


def test_falsified_without_witness_still_propagates_downward():
    from ticbench.checker import Outcome, Verdict
    batch = le(5, 6, 7)
    v = Verdict(outcomes={
        "t0": Outcome(UNKNOWN, reason="undecided-path"),
        "t1": Outcome(FALSIFIED),
        "t2": Outcome(VERIFIED),
    })
    n = v.normalized(batch)
    assert n.outcome("t0").status == FALSIFIED
    assert n.outcome("t0").counterexample is None


def test_verdict_dump_is_json_ready():
    import json
    drv = closed(TWO_PATH, "f")
    batch = le(20, 30)
    recs = check(drv, batch).dump(batch)
    json.dumps(recs)
    assert [r["status"] for r in recs] == [FALSIFIED, VERIFIED]
    assert recs[0]["witness_time"] == 25
    assert recs[0]["bound"] == 20 and recs[1]["comparator"] == LE


# ------------------------------------------------------------ wide domains

def test_wide_branch_is_decided_without_enumeration():
    drv = closed(WIDE, "f")
    batch = le(4, 5, 49, 50)
    ck = BuiltinChecker(drv)
    v = ck.check(batch)
    assert statuses(v, batch) == [FALSIFIED, FALSIFIED, FALSIFIED, VERIFIED]
    ex = ck.exploration()
    assert ex.stats["done"] == 2
    assert ex.stats["spills"] >= 1  # 2^32 inputs never enumerated
    ce = v.outcome("t2").counterexample
    assert ce.witness_time == 50 and replay_time(drv, ce) == 50


def test_assumed_range_clips_the_symbolic_domain_exactly():
    drv = closed(GATE, "f")
    batch = le(21043, 21044)
    v = check(drv, batch)
    assert statuses(v, batch) == [FALSIFIED, VERIFIED]
    ce = v.outcome("t0").counterexample
    assert ce.witness_time == 21044 and replay_time(drv, ce) == 21044
    lo = ge(44, 45)
    v2 = check(drv, lo)
    assert statuses(v2, lo) == [VERIFIED, FALSIFIED]


# ---------------------------------------------------------------- unwinding

def test_data_bounded_loop_demands_an_unwind_depth():
    drv = closed(SPIN, "spin")
    with pytest.raises(DiagnosticError) as ei:
        check(drv, le(100))
    assert ei.value.code == "E_UNWIND_NEEDED"
    assert "spin:0" in str(ei.value)


def test_sufficient_depth_by_loop_alias_is_exact():
    drv = closed(SPIN, "spin")
    u = UnwindSpec(depths={"spin:0": 255})
    batch = le(764, 765)
    v = check(drv, batch, u)
    assert statuses(v, batch) == [FALSIFIED, VERIFIED]
    assert v.outcome("t0").counterexample.witness_time == 765


def test_insufficient_depth_never_verifies_a_smaller_bound():
    drv = closed(SPIN, "spin")
    u = UnwindSpec(default_depth=2)
    batch = le(5, 6, 100000)
    v = check(drv, batch, u)
    # paths completed within depth reach 6; deeper ones were cut short
    assert statuses(v, batch) == [FALSIFIED, UNKNOWN, UNKNOWN]
    assert v.outcome("t0").counterexample.witness_time == 6
    assert any(code == "E_UNWIND_INSUFFICIENT" for code, _ in v.errors)


def test_exhaustion_check_off_treats_depth_as_an_assumption():
    drv = closed(SPIN, "spin")
    u = UnwindSpec(default_depth=2, assert_exhaustion=False)
    batch = le(5, 6)
    v = check(drv, batch, u)
    assert statuses(v, batch) == [FALSIFIED, VERIFIED]


# ------------------------------------------------------- exhaustive oracle

def exhaustive_times(name: str, width: int, cells: str):
    _, _, _, _, _, drv = corpus_build(name, width)
    it = Interp(drv)
    ts = []
    for v in range(65536):
        inj = map_injector({f"_driver.{cells}[0]": v & 0xFF,
                            f"_driver.{cells}[1]": v >> 8})
        ts.append(it.run(injector=inj).time)
    return max(ts), min(ts)


def test_bs_small_agrees_with_exhaustive_interpretation():
    *_, drv = corpus_build("bs_small.mc", 32)
    hi, lo, _ = engine_bounds(drv, UnwindSpec(default_depth=4))
    assert (hi, lo) == (239, 101)
    assert (hi, lo) == exhaustive_times("bs_small.mc", 32, "tab")
    batch = le(238, 239)
    v = check(drv, batch, UnwindSpec(default_depth=4))
    assert statuses(v, batch) == [FALSIFIED, VERIFIED]
    assert replay_time(drv, v.outcome("t0").counterexample) == 239


def test_insertsort_small_agrees_with_exhaustive_interpretation():
    *_, drv = corpus_build("insertsort_small.mc", 32)
    hi, lo, _ = engine_bounds(drv, UnwindSpec(default_depth=2))
    assert (hi, lo) == (195, 174)
    assert (hi, lo) == exhaustive_times("insertsort_small.mc", 32, "pair")


def test_small_benchmarks_stay_exact_at_narrow_width():
    for name, depth in (("bs_small.mc", 4), ("insertsort_small.mc", 2)):
        *_, drv = corpus_build(name, 16)
        hi, lo, ex = engine_bounds(drv, UnwindSpec(default_depth=depth))
        assert all(p.exact for p in ex.paths if p.kind == "done")
        it = Interp(drv)
        worst = best = None
        for v in range(0, 65536, 257):  # includes 0 and 65535
            cells = name.split("_")[0] == "bs" and "tab" or "pair"
            inj = map_injector({f"_driver.{cells}[0]": v & 0xFF,
                                f"_driver.{cells}[1]": v >> 8})
            t = it.run(injector=inj).time
            worst = t if worst is None else max(worst, t)
            best = t if best is None else min(best, t)
        assert lo <= best and worst <= hi


# ------------------------------------------------------------- benchmarks

def test_fir_collapses_to_a_single_exact_path():
    *_, drv = corpus_build("fir.mc", 32)
    ex = explore(drv)
    done = [p for p in ex.paths if p.kind == "done"]
    assert len(done) == 1 and done[0].exact
    assert done[0].time == 2826
    batch = le(2825, 2826)
    v = check(drv, batch)
    assert statuses(v, batch) == [FALSIFIED, VERIFIED]


def test_crc_branch_correlation_prunes_the_path_explosion():
    *_, drv = corpus_build("crc.mc", 32)
    ck = BuiltinChecker(drv)
    ex = ck.exploration()
    # 16 correlated branch pairs leave 2^8 feasible paths, not 2^16
    assert ex.stats["done"] == 256
    hi = max(p.hi for p in ex.paths if p.kind == "done")
    lo = min(p.lo for p in ex.paths if p.kind == "done")
    assert (hi, lo) == (1150, 1102)
    batch = le(1149, 1150)
    v = ck.check(batch)
    assert statuses(v, batch) == [FALSIFIED, VERIFIED]
    assert replay_time(drv, v.outcome("t0").counterexample) == 1150


def test_crc_exact_bound_beats_loop_abstraction():
    *_, drv = corpus_build("crc.mc", 32)
    sliced = slice_time(drv, build_pdg(drv))
    accel, _ = accelerate(sliced)
    abstracted, summaries = abstract_loops(accel)
    assert summaries, "crc should need abstraction"
    hi_abs, _, _ = engine_bounds(abstracted)
    assert hi_abs > 1150  # abstraction over-approximates branchy loops


def test_abstraction_costs_nothing_on_branch_free_loops():
    src = """
        int f(int x) {
            int s = 0;
            int i;
            for (i = 0; i < 10; i++) {
                s += x;
            }
            return s;
        }
    """
    prog = parse(src, "t.mc", word_width=32)
    from ticbench.dvp import build_cfg, compile_program
    from ticbench.annotate import instrument
    m = compile_program(prog)
    inst, _ = instrument(prog, m, build_cfg(m))
    drv = build_driver(inst, "f")
    abstracted, _ = abstract_loops(drv)
    assert engine_bounds(drv)[:2] == engine_bounds(abstracted)[:2]


def test_prime_is_exact_at_narrow_width_with_provable_depth():
    *_, drv = corpus_build("prime.mc", 16)
    u = UnwindSpec(default_depth=255)
    ck = BuiltinChecker(drv, u)
    ex = ck.exploration()
    assert not ex.insufficient  # 255 trial divisions cover all 16-bit inputs
    hi = max(p.hi for p in ex.paths if p.kind == "done")
    batch = le(hi - 1, hi)
    v = ck.check(batch)
    assert statuses(v, batch) == [FALSIFIED, VERIFIED]
    assert replay_time(drv, v.outcome("t0").counterexample) == hi


def test_binary_search_witnesses_close_the_interval_gap():
    *_, drv = corpus_build("bs.mc", 32)
    u = UnwindSpec(default_depth=8)
    hi, lo, ex = engine_bounds(drv, u)
    assert (hi, lo) == (531, 102)
    batch = le(530, 531)
    v = check(drv, batch, u)
    assert statuses(v, batch) == [FALSIFIED, VERIFIED]
    assert replay_time(drv, v.outcome("t0").counterexample) == 531
    low = ge(102, 103)
    v2 = check(drv, low, u)
    assert statuses(v2, low) == [VERIFIED, FALSIFIED]
    assert replay_time(drv, v2.outcome("t1").counterexample) == 102


# ------------------------------------------------------------------ budget

def test_wall_clock_budget_yields_timeout_not_a_wrong_answer():
    *_, drv = corpus_build("crc.mc", 32)
    t0 = time.monotonic()
    v = check(drv, le(5000), budget=CheckBudget(seconds=0.05))
    elapsed = time.monotonic() - t0
    o = v.outcome("t0")
    assert o.status == UNKNOWN and o.reason == "timeout"
    assert elapsed < 2.0  # the deadline is honored promptly


def test_path_limit_yields_memory_not_a_wrong_answer():
    *_, drv = corpus_build("crc.mc", 32)
    v = check(drv, le(5000), budget=CheckBudget(max_paths=10))
    o = v.outcome("t0")
    assert o.status == UNKNOWN and o.reason == "memory"


def test_exploration_is_cached_across_batches():
    drv = closed(TWO_PATH, "f")
    ck = BuiltinChecker(drv)
    assert ck.exploration() is ck.exploration()
    a = ck.check(le(20))
    b = ck.check(le(30))
    assert a.outcome("t0").status == FALSIFIED
    assert b.outcome("t0").status == VERIFIED


# ------------------------------------------------------------------ export

def test_exported_unit_is_self_contained():
    *_, drv = corpus_build("fir.mc", 32)
    text = export_checkable(drv, le(2825, 2826))
    assert "#include <assert.h>" in text and "#include <stdint.h>" in text
    assert "extern void __VERIFIER_assume(int cond);" in text
    assert "__VERIFIER_nondet_" in text
    assert "int main(void)" in text
    assert "assert(_time <= 2825)" in text and "assert(_time <= 2826)" in text


def test_export_without_batch_emits_no_asserts():
    *_, drv = corpus_build("fir.mc", 32)
    text = export_checkable(drv, None)
    assert "assert(" not in text
    assert "int main(void)" in text


def test_exported_unit_round_trips_through_the_parser():
    *_, drv = corpus_build("crc.mc", 32)
    batch = le(1149, 1150)
    text = export_checkable(drv, batch)
    body = text[:text.index("int main(void)")]
    body = "\n".join(
        ln for ln in body.splitlines()
        if not ln.startswith(("#include", "extern ")))
    body = body.replace("__VERIFIER_nondet_", "nondet_")
    body = body.replace("__VERIFIER_assume(", "assume(")
    back = parse(body, "export.c", word_width=32, allow_instrumentation=True)
    assert pretty_print(back) == pretty_print(insert_batch(drv, batch))


def test_insert_batch_leaves_the_original_untouched():
    *_, drv = corpus_build("fir.mc", 32)
    before = pretty_print(drv)
    out = insert_batch(drv, le(1, 2))
    assert pretty_print(drv) == before
    assert pretty_print(out) != before


@pytest.mark.skipif(shutil.which("gcc") is None, reason="no C compiler")
def test_exported_unit_passes_c_syntax_check(tmp_path):
    *_, drv = corpus_build("fir.mc", 32)
    path = tmp_path / "unit.c"
    path.write_text(export_checkable(drv, le(2826)))
    r = subprocess.run(["gcc", "-fsyntax-only", str(path)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr


# ---------------------------------------------------------- external tools

def stub_cmd(tmp_path, body: str) -> str:
    tool = tmp_path / "tool.py"
    tool.write_text(body)
    return f"{sys.executable} {tool} {{file}}"


def test_external_failure_with_bindings_becomes_a_replayed_witness(tmp_path):
    drv = closed(TWO_PATH, "f")
    cmd = stub_cmd(tmp_path, (
        "print('FAILURE')\n"
        "print('_a_x=200')\n"
        "print('_time=25')\n"))
    v = ExternalChecker(cmd, drv).check(le(20))
    o = v.outcome("t0")
    assert o.status == FALSIFIED
    assert o.counterexample.witness_time == 25
    assert o.counterexample.assignments == (("_driver._a_x", 0, 200),)
    assert replay_time(drv, o.counterexample) == 25


def test_external_success_token_verifies(tmp_path):
    drv = closed(TWO_PATH, "f")
    v = ExternalChecker(stub_cmd(tmp_path, "print('SUCCESS')\n"),
                        drv).check(le(30))
    assert v.outcome("t0").status == VERIFIED


def test_external_results_map_in_batch_order(tmp_path):
    drv = closed(TWO_PATH, "f")
    cmd = stub_cmd(tmp_path, (
        "print('FAILURE')\n"
        "print('FAILURE')\n"
        "print('SUCCESS')\n"
        "print('_a_x=200')\n"
        "print('_time=25')\n"))
    batch = le(9, 20, 30)
    v = ExternalChecker(cmd, drv).check(batch)
    assert statuses(v, batch) == [FALSIFIED, FALSIFIED, VERIFIED]
    for aid in ("t0", "t1"):
        assert v.outcome(aid).counterexample.witness_time == 25


def test_external_nonreproducing_witness_is_dropped(tmp_path):
    drv = closed(TWO_PATH, "f")
    cmd = stub_cmd(tmp_path, (
        "print('FAILURE')\n"
        "print('_a_x=3')\n"     # replays to 10, not the claimed 25
        "print('_time=25')\n"))
    v = ExternalChecker(cmd, drv).check(le(20))
    o = v.outcome("t0")
    assert o.status == FALSIFIED and o.counterexample is None


def test_external_silence_and_crashes_stay_unknown(tmp_path):
    drv = closed(TWO_PATH, "f")
    for body in ("pass\n", "import sys\nsys.exit(3)\n"):
        v = ExternalChecker(stub_cmd(tmp_path, body), drv).check(le(20))
        assert v.outcome("t0").status == UNKNOWN
        assert v.errors


def test_external_wall_timeout_is_reported(tmp_path):
    drv = closed(TWO_PATH, "f")
    cmd = stub_cmd(tmp_path, "import time\ntime.sleep(60)\n")
    v = ExternalChecker(cmd, drv,
                        budget=CheckBudget(seconds=0.2)).check(le(20))
    o = v.outcome("t0")
    assert o.status == UNKNOWN and o.reason == "timeout"


def test_portfolio_prefers_the_first_conclusive_worker(tmp_path):
    drv = closed(TWO_PATH, "f")
    # the stub wrongly claims SUCCESS; the built-in engine answers first
    lying = ExternalChecker(stub_cmd(tmp_path, "print('SUCCESS')\n"), drv)
    batch = le(20)
    v = Portfolio([BuiltinChecker(drv), lying]).check(batch)
    assert v.outcome("t0").status == FALSIFIED
    v2 = Portfolio([lying, BuiltinChecker(drv)]).check(batch)
    assert v2.outcome("t0").status == VERIFIED


def test_portfolio_fills_gaps_left_by_unknowns(tmp_path):
    drv = closed(TWO_PATH, "f")
    silent = ExternalChecker(stub_cmd(tmp_path, "pass\n"), drv)
    batch = le(20, 30)
    v = Portfolio([silent, BuiltinChecker(drv)]).check(batch)
    assert statuses(v, batch) == [FALSIFIED, VERIFIED]


def test_portfolio_helper_places_the_engine_first(tmp_path):
    drv = closed(TWO_PATH, "f")
    p = portfolio_checker(drv, [stub_cmd(tmp_path, "print('SUCCESS')\n")])
    assert isinstance(p.workers[0], BuiltinChecker)
    assert p.check(le(20)).outcome("t0").status == FALSIFIED
