"""Machine backend: compiler, timed CFG, structural bound, simulator.

The calibration identities for the feed-forward filter example are the
backbone here: block costs {44, 21, 36, 24, 5}, division-helper summary
737, whole-task 2826 cycles, cheap divide-by-zero path 2106, and the
agreement of simulation, structural bound, and the per-block audit.
"""
import random

import pytest

from ticbench.diag import DiagnosticError
from ticbench.minic import ast as A
from ticbench.minic import parse
from ticbench.semantics import sdivmod, udivmod
from ticbench.dvp import (
    build_cfg, compile_program, dump_program, longest_path, simulate,
    structural_wcet,
)
from ticbench.dvp.cfg import helper_summary
from ticbench.dvp.helpers import make_helpers
from ticbench.dvp.isa import MachineProgram
from ticbench.target import TargetConfig, TimingTable

from conftest import corpus_source, parse_corpus


@pytest.fixture(scope="module")
def fir():
    prog = parse_corpus("fir.mc")
    m = compile_program(prog)
    return prog, m, build_cfg(m)


def _for_cond_nid(prog, fn="task"):
    for n in A.walk(prog.function(fn)):
        if isinstance(n, A.For):
            return n.cond.nid
    raise AssertionError("no for loop found")


# ------------------------------------------------------------- calibration

def test_fir_block_costs_are_calibrated(fir):
    prog, m, cfg = fir
    table = m.config.table
    folded = {}
    for b in cfg.function_blocks("task"):
        extra = {"fall": 0, "jump": table.cost("JMP"), "call": table.call,
                 "ret": table.ret}.get(b.term)
        if b.term == "branch":
            taken, nottaken = table.branch_cost(b.term_op)
            assert taken == nottaken == 18
            extra = nottaken
        folded[b.id] = b.cycles + extra
    assert folded == {"task@0": 44, "task@12": 21, "task@15": 36,
                      "task@31": 24, "task@36": 5}


def test_helper_summaries_are_frozen(fir):
    _, m, cfg = fir
    assert helper_summary(m, "__sdivmod", cfg) == 737
    assert helper_summary(m, "__udivmod", cfg) == 683


def test_structural_matches_simulation_on_single_path(fir):
    prog, m, cfg = fir
    bounds = {_for_cond_nid(prog): 36}  # 35 iterations + exiting entry
    w = structural_wcet(m, "task", bounds=bounds, cfg=cfg)
    assert w == 2826
    assert simulate(m, "task", (5, 3)).cycles == 2826
    # Same bound keyed by the head block id.
    assert structural_wcet(m, "task", bounds={"task@12": 36}, cfg=cfg) == 2826


def test_fir_identity_decomposition(fir):
    assert 2826 == 44 + 36 * 21 + 35 * 36 + 24 + 737 + 5


def test_divide_by_zero_takes_the_cheap_helper_path(fir):
    _, m, _ = fir
    assert simulate(m, "task", (5, 0)).cycles == 2106
    assert 2106 == 2826 - 737 + (5 + 9 + 1 + 2)  # swap summary for short path


def test_simulation_is_input_independent_save_for_divisor_zero(fir):
    _, m, _ = fir
    rng = random.Random(1)
    for _ in range(25):
        a = rng.randrange(-2 ** 31, 2 ** 31)
        scl = rng.randrange(-2 ** 31, 2 ** 31)
        want = 2106 if scl == 0 else 2826
        assert simulate(m, "task", (a, scl)).cycles == want


def test_audit_identity_blocks_plus_edges(fir):
    """cycles == sum(visits x block cost) + sum(edge traversals x edge cost)
    + the final return."""
    _, m, cfg = fir
    res = simulate(m, "task", (5, 3), cfg=cfg)
    total = sum(cfg.blocks[b].cycles * n for b, n in res.visits.items())
    ecost = {(e.src, e.dst, e.kind): e.cycles for e in cfg.edges}
    total += sum(ecost[k] * n for k, n in res.edge_visits.items())
    total += m.config.table.ret
    assert total == res.cycles == 2826


def test_compile_is_deterministic():
    src = corpus_source("fir.mc")
    d1 = dump_program(compile_program(parse(src, "fir.mc")))
    d2 = dump_program(compile_program(parse(src, "fir.mc")))
    assert d1 == d2


# ------------------------------------------------------------- helpers

def _helpers_program(width: int, config_width: int = 32) -> MachineProgram:
    cfgc = TargetConfig(word_width=config_width)
    return MachineProgram(config=cfgc, functions=make_helpers(width),
                          global_layout={}, global_size=0, global_init=[])


def test_division_helpers_exhaustive_at_width_4():
    m = _helpers_program(4)
    for a in range(16):
        for b in range(16):
            got = simulate(m, "__udivmod", (a, b)).values
            assert got == udivmod(a, b, 4), (a, b, got)
    for a in range(-8, 8):
        for b in range(-8, 8):
            got = simulate(m, "__sdivmod", (a, b)).values
            assert got == sdivmod(a, b, 4), (a, b, got)


@pytest.mark.parametrize("width", [16, 32])
def test_division_helpers_sampled(width):
    m = _helpers_program(width)
    rng = random.Random(width)
    lim = 1 << width
    half = lim >> 1
    ucases = [(0, 0), (1, 0), (lim - 1, 1), (lim - 1, lim - 1), (0, 1)]
    ucases += [(rng.randrange(lim), rng.randrange(lim)) for _ in range(120)]
    for a, b in ucases:
        assert simulate(m, "__udivmod", (a, b)).values == udivmod(a, b, width)
    scases = [(-half, -1), (-half, 1), (-1, -1), (7, 0), (-7, 0), (0, 0)]
    scases += [(rng.randrange(-half, half), rng.randrange(-half, half))
               for _ in range(120)]
    for a, b in scases:
        assert simulate(m, "__sdivmod", (a, b)).values == sdivmod(a, b, width)


def test_unsigned_helper_time_is_constant():
    m = _helpers_program(32)
    rng = random.Random(5)
    cases = [(0, 0), (2 ** 32 - 1, 1), (1, 2 ** 32 - 1)]
    cases += [(rng.randrange(2 ** 32), rng.randrange(2 ** 32))
              for _ in range(50)]
    times = {simulate(m, "__udivmod", c).cycles for c in cases}
    assert times == {683}


def test_signed_helper_time_two_paths_only():
    m = _helpers_program(32)
    rng = random.Random(6)
    nz = {simulate(m, "__sdivmod",
                   (rng.randrange(-2 ** 31, 2 ** 31),
                    rng.randrange(1, 2 ** 31) * rng.choice((1, -1)))).cycles
          for _ in range(50)}
    assert nz == {737}
    z = {simulate(m, "__sdivmod", (a, 0)).cycles for a in (-9, 0, 4)}
    assert z == {17}  # 5 prologue + 9 fallthrough + 1 LDI + 2 ret


def test_helper_summary_bounds_every_run():
    m = _helpers_program(32)
    cfg = build_cfg(m)
    u = helper_summary(m, "__udivmod", cfg)
    s = helper_summary(m, "__sdivmod", cfg)
    rng = random.Random(9)
    for _ in range(1000):
        a, b = rng.randrange(2 ** 32), rng.randrange(2 ** 32)
        assert simulate(m, "__udivmod", (a, b)).cycles <= u
    for _ in range(1000):
        a = rng.randrange(-2 ** 31, 2 ** 31)
        b = rng.randrange(-2 ** 31, 2 ** 31)
        assert simulate(m, "__sdivmod", (a, b)).cycles <= s


# ------------------------------------------------------------- CFG shape

def test_blocks_are_maximal_on_corpus(fir):
    """No block falls through to a block with a single predecessor; such a
    pair would have been merged."""
    _, m, cfg = fir
    preds = {}
    for e in cfg.edges:
        if e.kind not in ("call", "ret"):
            preds.setdefault(e.dst, set()).add(e.src)
    for e in cfg.edges:
        if e.kind == "fall":
            assert len(preds[e.dst]) > 1, (e.src, e.dst)


def test_block_node_coverage_is_total(fir):
    _, m, cfg = fir
    tagged = {i.node for f in m.functions.values() for i in f.code if i.node}
    in_blocks = {nid for b in cfg.blocks.values() for nid in b.node_ids}
    assert tagged == in_blocks


# ------------------------------------------------------------- diagnostics

def compile_src(src: str, **kw):
    return compile_program(parse(src, "t.mc"), **kw)


def test_missing_loop_bound_is_reported():
    m = compile_src("void f(int n) { int i; for (i = 0; i < n; i++) { } }")
    with pytest.raises(DiagnosticError) as ei:
        structural_wcet(m, "f", bounds={})
    assert ei.value.code == "E_BOUND"
    assert "line" in str(ei.value) or ei.value.diagnostics[0].loc.line


def test_frame_limit_is_enforced():
    with pytest.raises(DiagnosticError) as ei:
        compile_src("void f(void) { int big[5000]; big[0] = 1; }")
    assert ei.value.code == "E_FRAME"


def test_memfault_on_bad_index():
    m = compile_src("int t[4]; void f(int i) { t[i] = 1; }")
    assert simulate(m, "f", (3,)).cycles > 0
    with pytest.raises(DiagnosticError) as ei:
        simulate(m, "f", (4,))
    assert ei.value.code == "E_MEMFAULT"
    with pytest.raises(DiagnosticError):
        simulate(m, "f", (-1,))


def test_budget_stops_runaway_loops():
    m = compile_src("void f(void) { while (1) { } }")
    with pytest.raises(DiagnosticError) as ei:
        simulate(m, "f", (), budget=10_000)
    assert ei.value.code == "E_BUDGET"


def test_uninitialized_local_reads_consult_injector():
    m = compile_src("int f(void) { int x; return x; }")
    assert simulate(m, "f", ()).values == (0,)
    got = simulate(m, "f", (), injector=lambda site, k: 41 if site == "f.x" else 0)
    assert got.values == (41,)


def test_timing_table_round_trip(tmp_path):
    t = TimingTable.default()
    p = tmp_path / "table.json"
    t.save(p)
    assert TimingTable.load(p) == t
    assert t.cost("MUL") == 29
    assert t.branch_cost("BNE") == (9, 9)
    assert t.branch_cost("BLT") == (18, 18)
    assert (t.call, t.ret) == (18, 2)


def test_timing_table_rejects_unknown_opcodes():
    d = TimingTable.default().to_dict()
    d["opcodes"]["FMA"] = 1
    with pytest.raises(DiagnosticError) as ei:
        TimingTable.from_dict(d)
    assert ei.value.code == "E_UNSUPPORTED"
