"""Parsing, type checking, node identity, and diagnostics."""
import pytest

from ticbench.diag import DiagnosticError
from ticbench.minic import ast as A
from ticbench.minic import parse, pretty_print

from conftest import corpus_source


def err(code: str, src: str, width: int = 32, allow=False):
    with pytest.raises(DiagnosticError) as ei:
        parse(src, "t.mc", word_width=width, allow_instrumentation=allow)
    assert ei.value.code == code, ei.value
    return ei.value


# ------------------------------------------------------------- round trips

def test_pretty_print_fixpoint_on_corpus():
    src = corpus_source("fir.mc")
    p1 = parse(src, "fir.mc")
    t1 = pretty_print(p1)
    p2 = parse(t1, "fir.mc")
    assert pretty_print(p2) == t1
    assert p1 == p2  # structural equality ignores ids/locations


def test_node_ids_deterministic():
    src = corpus_source("fir.mc")
    a = parse(src, "fir.mc")
    b = parse(src, "fir.mc")
    ids_a = [n.nid for n in A.walk(a)]
    ids_b = [n.nid for n in A.walk(b)]
    assert ids_a == ids_b
    assert len(ids_a) == len(set(ids_a)), "node ids must be unique"


def test_node_ids_depend_on_position():
    src = "void f(void) { int x = 1; int y = 1; }"
    p = parse(src, "t.mc")
    decls = [n for n in A.walk(p) if isinstance(n, A.DeclStmt)]
    assert decls[0].nid != decls[1].nid


# ------------------------------------------------------------- widths

def test_int_width_follows_target():
    p32 = parse("int g; void f(int x) { g = x; }", "t.mc", word_width=32)
    p16 = parse("int g; void f(int x) { g = x; }", "t.mc", word_width=16)
    assert p32.global_decl("g").vtype == A.I32
    assert p16.global_decl("g").vtype == A.I16


def test_long_is_32_bits_on_both_widths():
    for w in (16, 32):
        p = parse("unsigned long g; void f(void) { g = 70000; }", "t.mc",
                  word_width=w)
        assert p.global_decl("g").vtype == A.U32


def test_literal_out_of_range_is_rejected():
    # 70000 still fits a 32-bit type at width 16 (and narrows on store);
    # only literals outside every scalar type are errors.
    parse("void f(void) { int x = 70000; }", "t.mc", word_width=16)
    err("E_CONST", "void f(void) { long x = 1099511627776; }", width=16)
    err("E_CONST", "void f(void) { long x = 1099511627776; }", width=32)


# ------------------------------------------------------------- statics

def test_static_locals_hoist_to_mangled_globals():
    p = parse("int f(void) { static int n = 3; n += 1; return n; }", "t.mc")
    names = [g.name for g in p.globals]
    assert names == ["_s_f_n"]
    refs = [n.name for n in A.walk(p.function("f")) if isinstance(n, A.VarRef)]
    assert set(refs) == {"_s_f_n"}


def test_static_initializer_must_be_constant():
    err("E_CONST", "int f(int x) { static int n = x; return n; }")


# ------------------------------------------------------------- nondet sites

def test_nondet_sites_are_stable_and_numbered():
    src = """
    void f(void) {
        int a = nondet_i32();
        int b[2];
        b[0] = nondet_u8();
        a = nondet_i32();
    }
    """
    p = parse(src, "t.mc")
    sites = [n.site for n in A.walk(p) if isinstance(n, A.NondetExpr)]
    assert sites == ["f.a", "f.b[0]", "f.a#1"]
    assert sites == [n.site for n in A.walk(parse(src, "t.mc"))
                     if isinstance(n, A.NondetExpr)]


def test_nondet_only_as_whole_rhs():
    err("E_TYPE", "void f(void) { int a = nondet_i32() + 1; }")
    err("E_TYPE", "void f(void) { int a = 0; a += nondet_i32(); }")


# ------------------------------------------------------------- diagnostics

def test_unsupported_syntax_is_rejected():
    err("E_SYNTAX", "void f(int a, int b) { if (a && b) { a = 1; } }")
    err("E_SYNTAX", "void f(int a) { switch (a) { } }")
    err("E_SYNTAX", "void f(void) { goto done; }")
    err("E_SYNTAX", "void f(void) { break; }")


def test_recursion_is_rejected():
    e = err("E_RECURSION", "int f(int n) { return f(n); }")
    assert "f" in str(e)
    # Calls may reference later definitions, so a mutual cycle needs no
    # prototypes to be expressible; it is still rejected.
    err("E_RECURSION",
        "int f(int n) { return g(n); }"
        " int g(int n) { return f(n); }")


def test_redefinition_and_shadowing():
    err("E_REDEF", "int x; int x;")
    err("E_REDEF", "int f(void) { return 0; } int f(void) { return 1; }")
    err("E_REDEF", "int x; void f(void) { int x = 1; }")
    err("E_REDEF", "void f(int a) { int a = 1; }")


def test_reserved_names():
    err("E_RESERVED", "int _x;")
    err("E_RESERVED", "void f(void) { int _y = 1; }")
    err("E_RESERVED", "int _time;")
    err("E_RESERVED", "void f(void) { _time += 3; }")


def test_specification_statements_parse_in_plain_mode():
    # assume/assert are analysis-facing annotations, legal in user code;
    # reading `_time` inside them is not.
    parse("void f(void) { int x = 0; assume(x == 0); assert(x == 0); }",
          "t.mc")
    err("E_RESERVED", "void f(void) { assert(_time < 10); }")


def test_time_rules_under_instrumentation():
    src = "uint64_t _time = 0; void f(void) { _time = 0; _time += 4; }"
    p = parse(src, "t.mc", allow_instrumentation=True)
    assert p.instrumented
    err("E_TYPE", "uint64_t _time = 0; void f(void) { _time = 4; }",
        allow=True)
    err("E_TYPE", "uint64_t _time = 0; void f(int x) { _time = x; }",
        allow=True)


def test_u64_reserved_for_time():
    # Plain mode does not even have the type; instrumented mode has it
    # but only for the counter.
    err("E_SYNTAX", "uint64_t g;")
    err("E_UNSUPPORTED", "uint64_t g;", allow=True)


def test_type_errors():
    err("E_TYPE", "void f(int a[3]) { int x = a; }")
    err("E_UNDEF", "void f(void) { g(); }")
    err("E_TYPE", "int f(int x) { return x; } void g(void) { f(); }")
    err("E_TYPE", "void f(void) { } void g(void) { int x = f(); }")
    err("E_TYPE", "int f(int x) { if (x) { return 1; } }")


def test_void_call_statement_is_allowed():
    p = parse("void f(void) { } void g(void) { f(); }", "t.mc")
    assert [f.name for f in p.functions] == ["f", "g"]


def test_array_argument_must_match_declared_shape():
    err("E_TYPE",
        "void f(int a[3]) { a[0] = 1; } void g(void) { int b[4]; f(b); }")
    parse("void f(int a[3]) { a[0] = 1; } void g(void) { int b[3]; f(b); }",
          "t.mc")


def test_array_brace_initializers():
    p = parse("int t[4] = {1, 2}; void f(void) { t[3] = 9; }", "t.mc")
    g = p.global_decl("t")
    assert isinstance(g.init, list) and len(g.init) == 2
    err("E_TYPE", "int t[2] = {1, 2, 3};")


def test_driver_reset_round_trips():
    src = ("uint64_t _time = 0;\n"
           "void f(void) { _time += 2; }\n"
           "void _driver(void) { _time = 0; f(); }\n")
    p = parse(src, "t.mc", allow_instrumentation=True)
    assert pretty_print(parse(pretty_print(p), "t.mc",
                              allow_instrumentation=True)) == pretty_print(p)
