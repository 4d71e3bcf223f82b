"""Benchmark corpus: every program parses, instruments fully, and honors
the timing oracle contract at both word widths.

The contract is checked run by run, not in aggregate: for any input, the
instrumented interpreter's `_time` exceeds the simulator's cycle count by
exactly the sum, over executed `break` statements, of the enclosing
loop's after-loop exit charge.  Programs without breaks are therefore
cycle-exact.  (Helper summaries stay exact here because no corpus run
reaches a division cheap path: divisors come from loop counters or from
nondet draws that never hit zero under the fixed seeds.)
"""
import random

import pytest

from conftest import CORPUS_ENTRIES, corpus_build, corpus_source, sim_call_from_log
from ticbench.annotate import verify_coverage
from ticbench.dvp import simulate
from ticbench.interp import Interp
from ticbench.minic import ast as A
from ticbench.minic import parse, pretty_print

WIDTHS = (16, 32)

# programs whose entry can execute a break statement
BREAKY = {"bs.mc", "bs_small.mc", "insertsort.mc", "insertsort_small.mc"}

# nondet sites whose draws must stay small to keep replay affordable
# (wide draws send prime's trial-division walk past the step budget)
CLAMP_BITS = {"prime.mc": {"_driver._a_n": 20}}


def both_widths(names=tuple(CORPUS_ENTRIES)):
    return pytest.mark.parametrize(
        "name,width", [(n, w) for n in names for w in WIDTHS],
        ids=[f"{n[:-3]}-w{w}" for n in names for w in WIDTHS])


def break_loops(prog):
    """Map each break statement's nid to the nid of its enclosing loop."""
    out = {}

    def stmts(body, stack):
        for s in body:
            if isinstance(s, A.Break):
                out[s.nid] = stack[-1]
            elif isinstance(s, A.If):
                stmts(s.then_body, stack)
                stmts(s.else_body, stack)
            elif isinstance(s, (A.While, A.For)):
                stmts(s.body, stack + [s.nid])

    for fn in prog.functions:
        stmts(fn.body, [])
    return out


def site_injector(seed, clamps):
    """Deterministic per-site draws, independent of draw order."""

    def inject(site, k):
        bits = clamps.get(site, 32)
        return random.Random(f"{seed}/{site}/{k}").getrandbits(bits)

    return inject


@pytest.mark.parametrize("name", CORPUS_ENTRIES, ids=lambda n: n[:-3])
def test_pretty_print_round_trip(name):
    src = corpus_source(name)
    once = pretty_print(parse(src, name))
    again = pretty_print(parse(once, name))
    assert once == again


@both_widths()
def test_instrumentation_covers_all_costs(name, width):
    _, _, _, inst, bm, _ = corpus_build(name, width)
    assert verify_coverage(inst, bm) == []


@both_widths()
def test_oracle_contract(name, width):
    prog, m, cfg, inst, bm, drv = corpus_build(name, width)
    entry = CORPUS_ENTRIES[name]
    exit_of = {e.detail["loop"]: e.cycles
               for e in bm.entries.values() if e.kind == "exit"}
    loop_of = break_loops(drv)
    assert bool(loop_of) == (name in BREAKY)

    clamps = CLAMP_BITS.get(name, {})
    rng = random.Random(f"{name}/{width}/5")
    injectors = [site_injector(rng.getrandbits(64), clamps) for _ in range(50)]
    # directed inputs: an all-ones memory makes equal-element sorts break
    # out early (without zeroing fir's divisor, which would add summary
    # slack), and an all-77 memory makes both searches hit their key
    injectors += [lambda s, k: 1, lambda s, k: 77]

    it = Interp(drv)
    breaks_seen = 0
    for inj in injectors:
        r = it.run(injector=inj, trace=True)
        assert r.ret is None and not r.assume_violated and not r.assert_failed
        argv, go = sim_call_from_log(drv, entry, r.nondet_log)
        s = simulate(m, entry, argv, globals_override=go)
        executed = [ev[2] for ev in r.events
                    if ev[0] == "stmt" and ev[2] in loop_of]
        breaks_seen += len(executed)
        assert r.time - s.cycles == sum(exit_of[loop_of[b]] for b in executed)
    if name in BREAKY:
        assert breaks_seen > 0


def count_trials(result, bm):
    """Trial-division iterations = firings of the divisor loop's body TIC."""
    body_entry = next(e.id for e in bm.entries.values()
                      if e.kind == "exit").replace("x:", "b:")
    return sum(1 for ev in result.events
               if ev[0] == "tic" and ev[1] == body_entry)


def prime_build(width):
    prog, m, cfg, inst, bm, _ = corpus_build("prime.mc", width)
    only = {e.detail["loop"] for e in bm.entries.values() if e.kind == "exit"}
    assert len(only) == 1, "primality test has a single loop"
    return inst, bm


def test_trial_division_walks_past_loop_bound_when_square_wraps():
    # 4294836241 = 65521 * 65537; i*i (32-bit) wraps before reaching it,
    # so the loop leaves the i <= sqrt(n) regime and runs until the
    # wrapped square happens to exceed n again.
    inst, bm = prime_build(32)
    r = Interp(inst).run(entry="prime", args=(4294836241,), trace=True)
    assert r.ret == 1
    assert count_trials(r, bm) == 103620
    assert r.time == 86522835


def test_trial_division_stays_bounded_at_narrow_width():
    # with 16-bit ints the square never wraps, so i stops at 255 and the
    # loop runs at most 127 times even for the largest prime
    inst, bm = prime_build(16)
    r = Interp(inst).run(entry="prime", args=(65521,), trace=True)
    assert r.ret == 1
    assert count_trials(r, bm) == 127
    assert r.time == 63635

    it = Interp(inst)
    rng = random.Random(9)
    sample = [65535, 65534, 65025, 32768, 32767, 3, 4, 9, 1]
    sample += [rng.getrandbits(16) for _ in range(120)]
    worst = max(count_trials(it.run(entry="prime", args=(n,), trace=True), bm)
                for n in sample)
    assert worst <= 127


def test_decoder_exercises_every_stage():
    _, _, _, _, _, drv = corpus_build("adpcm.mc", 32)
    r = Interp(drv).run(injector=site_injector(42, {}), trace=True)
    entered = {ev[1] for ev in r.events if ev[0] == "enter"}
    assert entered == {"_driver", "decode", "filtez", "filtep", "upzero",
                       "uppol2", "uppol1", "logscl", "logsch", "scalel"}
