import functools
import pathlib

import pytest

from ticbench.minic import parse

CORPUS = pathlib.Path(__file__).resolve().parents[1] / "src" / "ticbench" / "corpus"

# entry point of each shipped benchmark
CORPUS_ENTRIES = {
    "fir.mc": "task",
    "cnt.mc": "cnt",
    "bs.mc": "bs",
    "insertsort.mc": "insertsort",
    "crc.mc": "crc",
    "prime.mc": "prime",
    "jfdctint.mc": "jfdct",
    "adpcm.mc": "decode",
    "bs_small.mc": "bs_small",
    "insertsort_small.mc": "insertsort_small",
}


def corpus_source(name: str) -> str:
    return (CORPUS / name).read_text()


def parse_corpus(name: str, word_width: int = 32):
    return parse(corpus_source(name), name, word_width=word_width)


@functools.lru_cache(maxsize=None)
def corpus_build(name: str, width: int):
    """(plain, machine, cfg, instrumented, backmap, driver) for a benchmark."""
    from ticbench.dvp import build_cfg, compile_program
    from ticbench.annotate import build_driver, instrument

    prog = parse_corpus(name, word_width=width)
    m = compile_program(prog)
    cfg = build_cfg(m)
    inst, bm = instrument(prog, m, cfg)
    drv = build_driver(inst, CORPUS_ENTRIES[name])
    return prog, m, cfg, inst, bm, drv


def sim_call_from_log(prog, entry: str, log):
    """Rebuild simulate() arguments from a driver run's nondet log.

    The driver draws hardened globals first, then entry arguments; this
    inverts those sites into (argument vector, globals override) so the
    simulator replays the same machine state the interpreter saw.
    """
    fn = prog.function(entry)
    go, scal, cells = {}, {}, {}
    for site, _occ, val in log:
        nm = site.split(".", 1)[1]
        if nm.startswith("_a_"):
            base = nm[3:]
            if "[" in base:
                anm, idx = base[:-1].split("[")
                cells.setdefault(anm, {})[int(idx)] = val
            else:
                scal[base] = val
        elif "[" in nm:
            anm, idx = nm[:-1].split("[")
            go.setdefault(anm, {})[int(idx)] = val
        else:
            go[nm] = val
    for anm, d in list(go.items()):
        if isinstance(d, dict):
            go[anm] = [d.get(i, 0) for i in range(max(d) + 1)]
    argv = []
    for p in fn.params:
        if p.name in cells:
            d = cells[p.name]
            argv.append([d.get(i, 0) for i in range(max(d) + 1)])
        else:
            argv.append(scal[p.name])
    return argv, go


@pytest.fixture(scope="session")
def fir_program():
    return parse_corpus("fir.mc")
