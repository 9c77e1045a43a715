from odsim import parse_design, validate_design
from odsim.model import Design, FifoDecl, FifoWrite, Lit, ModuleDecl

from conftest import corpus_path


def codes(design, severity=None):
    diags = validate_design(design)
    if severity:
        diags = [d for d in diags if d.severity == severity]
    return [d.code for d in diags]


def test_valid_corpus_design_has_no_diagnostics():
    d = parse_design(corpus_path("pipeline_pair").read_text())
    assert validate_design(d) == []


def test_depth_zero_flagged():
    d = parse_design(corpus_path("pipeline_pair").read_text())
    d.fifos[0].depth = 0
    assert "depth-must-be-positive" in codes(d, "error")


def test_dangling_reader_is_a_warning():
    d = parse_design("""
    design dangling {
      fifo f depth 1;
      fifo g depth 1;
      module w { writes f, g; write f, 1; write g, 2; }
      module r { reads f; locals x; read f -> x; }
      top w, r;
    }
    """)
    assert "dangling-reader" in codes(d, "warning")
    assert codes(d, "error") == []


def test_break_outside_loop():
    d = parse_design("design b { module m { break; } top m; }")
    assert "break-outside-loop" in codes(d, "error")


def test_zero_cost_spin_loop_rejected():
    d = parse_design("""
    design spin {
      module m { locals x; while x < 10 { if x { x = x + 1; } } }
      top m;
    }
    """)
    assert "zero-cost-loop" in codes(d, "error")


def test_costed_loop_body_accepted():
    d = parse_design("""
    design fine {
      module m { locals x; while x < 10 { x = x + 1; } }
      top m;
    }
    """)
    assert codes(d, "error") == []


def test_undeclared_register():
    d = parse_design("design u { module m { locals a; a = ghost + 1; } top m; }")
    assert "undeclared-register" in codes(d, "error")


def test_declared_access_sets_must_match_program():
    d = parse_design("""
    design mismatch {
      fifo f depth 1;
      module w { writes f; write f, 1; }
      module r { reads f; locals x; read f -> x; }
      top w, r;
    }
    """)
    d.modules[0].writes = ("f", "extra")
    assert "writes-set-mismatch" in codes(d, "error")


def test_status_checks_restricted_to_owner_side():
    d = parse_design("""
    design sides {
      fifo f depth 1;
      module w { writes f; locals t; empty f -> t; write f, 1; }
      module r { reads f; locals x, u; full f -> u; read f -> x; }
      top w, r;
    }
    """)
    errs = codes(d, "error")
    assert "empty-check-wrong-side" in errs
    assert "full-check-wrong-side" in errs


def test_infinite_loop_without_exit_rejected():
    d = parse_design("design inf { module m { locals x; loop { x = x + 1; } } top m; }")
    assert "infinite-loop-no-exit" in codes(d, "error")


def test_multiple_writers_diagnosed_on_built_ast():
    # hand-built designs never go through the parser's own checks
    stmt = FifoWrite("f", Lit(1))
    d = Design("dup", [FifoDecl("f", 1)],
               [ModuleDecl("a", [stmt]), ModuleDecl("b", [FifoWrite("f", Lit(2))])],
               ("a", "b"))
    assert "multiple-writers" in codes(d, "error")


def test_empty_top_rejected():
    d = Design("notop", [], [ModuleDecl("a", [])], ())
    assert "empty-top" in codes(d, "error")


def test_output_owned_by_one_module():
    d = parse_design("""
    design outs {
      module a { locals x; output v, 1; }
      module b { locals y; output v, 2; }
      top a, b;
      outputs v;
    }
    """)
    assert "output-multiple-writers" in codes(d, "error")


def test_undeclared_output_rejected():
    d = parse_design("design o { module a { output ghost, 1; } top a; }")
    assert "undeclared-output" in codes(d, "error")
