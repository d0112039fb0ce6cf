import pytest
from hypothesis import given, settings, strategies as st

from nullgvn.corpus import GeneratorConfig, generate
from nullgvn.gvn import do_gvn
from nullgvn.interp import (
    TraceLimitError,
    check_solution_soundness,
    check_term_consistency,
    enumerate_traces,
    project_trace,
    traces_equivalent,
)
from nullgvn.ir import Path
from nullgvn.normalize import lift_loops, to_ssa
from nullgvn.solver import generate_constraints, solve_worklist

from conftest import parse_ok


def test_blocked_interproc_trace(bundled):
    traces = enumerate_traces(bundled["basic_interproc"], 32)
    assert len(traces) == 1
    (trace,) = traces
    assert trace[0] == ("assign", "a", ("loc", 1, 1))
    assert trace[1] == ("assign", "x", "null")
    assert trace[-1][0] == "assume_blocked"


def test_alloc_then_assert_passes():
    program = parse_ok(
        "procedure main() { var x; L1: x := new(1); assert (x != Null); return; }"
    )
    traces = enumerate_traces(program, 32)
    assert len(traces) == 1
    kinds = [ev[0] for ev in traces[0]]
    assert kinds == ["assign", "assert_pass", "return"]


def test_null_then_assert_fails():
    program = parse_ok(
        "procedure main() { var x; L1: x := Null; assert (x != Null); return; }"
    )
    traces = enumerate_traces(program, 32)
    assert len(traces) == 1
    assert traces[0][-1][0] == "assert_fail"


def test_unwritten_field_reads_null():
    program = parse_ok(
        "procedure main() { var x; var y; L1: x := new(1); y := x.f; return; }"
    )
    (trace,) = enumerate_traces(program, 32)
    assert ("assign", "y", "null") in trace


def test_store_through_null_faults():
    program = parse_ok(
        "procedure main() { var x; var y; L1: x := Null; y := new(1); x.f := y; return; }"
    )
    (trace,) = enumerate_traces(program, 32)
    assert trace[-1][0] == "null_deref"


def test_unassigned_read_is_trap():
    program = parse_ok("procedure main() { var x; var y; L1: y := x; return; }")
    (trace,) = enumerate_traces(program, 32)
    assert trace[-1][0] == "unassigned"
    assert trace[-1][2] == "x"


def test_determinism(bundled):
    program = bundled["loop_multi_exit"]
    assert enumerate_traces(program, 48) == enumerate_traces(program, 48)


def test_depth_monotone(bundled):
    program = bundled["opaque_branching"]
    for k in (4, 6, 9):
        small = enumerate_traces(program, k)
        big = set(enumerate_traces(program, k + 1))
        for t in small:
            if t[-1] != ("truncated",):
                assert t in big
            else:
                body = t[:-1]
                assert any(u[: len(body)] == body for u in big)


def test_trace_cap():
    program = parse_ok(
        """
        procedure main() {
          L0: assume *; assume *; assume *; assume *; return;
        }
        """
    )
    with pytest.raises(TraceLimitError):
        enumerate_traces(program, 32, max_traces=2)


def test_projection_drops_tagged_and_versions():
    trace = (
        ("assign", "x", ("loc", 1, 1)),
        ("assign", "gvnTmp__gvn1", ("loc", 1, 1)),
        ("assign", "x__2", "null"),
        ("assert_pass", ("main", "L0", 3)),
    )
    assert project_trace(trace) == (
        ("assign", "x", ("loc", 1, 1)),
        ("assign", "x", "null"),
        ("assert_pass",),
    )


def test_projection_drops_value_preserving_reassignment():
    trace = (
        ("assign", "x", ("loc", 1, 1)),
        ("assign", "x", ("loc", 1, 1)),
        ("assign", "x", "null"),
    )
    assert project_trace(trace) == (
        ("assign", "x", ("loc", 1, 1)),
        ("assign", "x", "null"),
    )


def test_equivalence_reflexive(bundled):
    for program in bundled.values():
        t = enumerate_traces(program, 48)
        assert traces_equivalent(t, t)


def test_equivalence_detects_deleted_assert(bundled):
    program = bundled["assert_chain"]
    mutated = parse_ok(
        """
        procedure main() {
          var x; var y;
          L0: goto LA, LB;
          LA: x := new(1); goto L1;
          LB: x := Null; goto L1;
          L1: y := x; assert (y != Null); return;
        }
        """
    )
    a = enumerate_traces(program, 64)
    b = enumerate_traces(mutated, 64)
    assert not traces_equivalent(a, b)


def test_transformed_equivalence(bundled):
    program = bundled["chained_field_equiv"]
    out = do_gvn(to_ssa(lift_loops(program)))
    assert traces_equivalent(enumerate_traces(program, 64), enumerate_traces(out, 64))


# -- soundness oracle --------------------------------------------------------------


def test_soundness_clean_on_corpus(bundled):
    for name, program in bundled.items():
        out = do_gvn(to_ssa(lift_loops(program)))
        sol = solve_worklist(generate_constraints(out))
        assert check_solution_soundness(out, sol, 32) == [], name


def test_soundness_flags_each_disabled_rule():
    cases = {
        "alloc": "procedure main() { var x; L0: x := new(1); return; }",
        "null": "procedure main() { var x; L0: x := Null; return; }",
        "copy": "procedure main() { var x; var y; L0: x := new(1); y := x; return; }",
        "load": (
            "procedure main() { var a; var b; var c; "
            "L0: a := new(1); b := new(2); a.f := b; c := a.f; return; }"
        ),
        "store": (
            "procedure main() { var a; var b; "
            "L0: a := new(1); b := new(2); a.f := b; return; }"
        ),
    }
    for rule, src in cases.items():
        program = parse_ok(src)
        broken = solve_worklist(generate_constraints(program, disable_rule=rule))
        assert check_solution_soundness(program, broken, 32), rule
        intact = solve_worklist(generate_constraints(program))
        assert check_solution_soundness(program, intact, 32) == [], rule


def test_empty_program_sound():
    program = parse_ok("procedure main() { L1: return; }")
    sol = solve_worklist(generate_constraints(program))
    assert check_solution_soundness(program, sol, 32) == []


# -- same-term-same-value oracle ----------------------------------------------------


def test_term_consistency_on_corpus(bundled):
    for name, program in bundled.items():
        out, recording = do_gvn(to_ssa(lift_loops(program)), instrument=True)
        assert check_term_consistency(out, recording, 48) == [], name


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 3000))
def test_term_consistency_generated(seed):
    program = generate(GeneratorConfig(seed=seed))
    out, recording = do_gvn(to_ssa(lift_loops(program)), instrument=True)
    assert check_term_consistency(out, recording, 32) == []


def test_term_check_catches_planted_lie(bundled):
    """Give two unrelated variables the same term and the replay notices."""
    program = bundled["reassign_null_after_check"]
    ssa = to_ssa(program)
    fake = {("main", "L1", 0): [(Path("x"), 1)], ("main", "L1", 3): [(Path("x__2"), 1)]}
    # x holds a location where the recording claims term 1, x__2 holds Null
    out = ssa
    violations = check_term_consistency(out, fake, 32)
    assert not violations  # both records precede the statements, x__2 unset at idx 3

    fake = {
        ("main", "L1", 1): [(Path("x"), 1)],
        ("main", "L1", 3): [(Path("y"), 1)],
    }
    violations = check_term_consistency(out, fake, 32)
    assert violations
