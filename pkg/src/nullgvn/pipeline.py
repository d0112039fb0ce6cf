"""Drives parse -> lift -> ssa -> gvn -> solve -> classify with timings."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import gvn as gvn_mod
from . import normalize, solver
from .ir import Diagnostic, Program
from .parse import parse_program

TRANSFORM_LEVELS = ("none", "ssa", "ssa+gvn")
SOLVERS = ("naive", "worklist")


class PipelineError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


@dataclass
class PipelineConfig:
    inputs: list[str] = field(default_factory=list)
    transform: str = "ssa+gvn"
    solver: str = "worklist"
    fmt: str = "text"
    check_semantics: bool = False
    depth: int = 64
    emit_transformed: str | None = None
    jobs: int = 1


@dataclass
class PipelineResult:
    program: Program              # as parsed
    transformed: Program          # after the requested transform level
    report: solver.SafetyReport


def _ms(t0: float) -> float:
    return (time.monotonic() - t0) * 1000.0


def transform_program(program: Program, level: str) -> tuple[Program, dict[str, float]]:
    """Apply the requested transform level; levels are cumulative, gvn
    implies ssa implies loop lifting."""
    if level not in TRANSFORM_LEVELS:
        raise ValueError(f"unknown transform level {level!r}")
    timings = {"lift": 0.0, "ssa": 0.0, "gvn": 0.0}
    prog = program
    if level != "none":
        t0 = time.monotonic()
        prog = normalize.lift_loops(prog)
        timings["lift"] = _ms(t0)
        t0 = time.monotonic()
        prog = normalize.to_ssa(prog)
        timings["ssa"] = _ms(t0)
    if level == "ssa+gvn":
        t0 = time.monotonic()
        prog = gvn_mod.do_gvn(prog)
        timings["gvn"] = _ms(t0)
    return prog, timings


def analyze_program(
    program: Program,
    transform: str = "ssa+gvn",
    solver_kind: str = "worklist",
    parse_ms: float = 0.0,
) -> PipelineResult:
    if solver_kind not in SOLVERS:
        raise ValueError(f"unknown solver {solver_kind!r}")
    transformed, timings = transform_program(program, transform)
    t0 = time.monotonic()
    constraints = solver.generate_constraints(transformed)
    if solver_kind == "naive":
        solution = solver.solve_naive(constraints)
    else:
        solution = solver.solve_worklist(constraints)
    report = solver.classify_assertions(transformed, solution)
    report.timings_ms = {
        "parse": parse_ms,
        "lift": timings["lift"],
        "ssa": timings["ssa"],
        "gvn": timings["gvn"],
        "solve": _ms(t0),
    }
    return PipelineResult(program, transformed, report)


def analyze_source(
    text: str,
    filename: str = "<input>",
    transform: str = "ssa+gvn",
    solver_kind: str = "worklist",
) -> PipelineResult:
    t0 = time.monotonic()
    program = parse_program(text, filename)
    parse_ms = _ms(t0)
    if isinstance(program, list):
        raise PipelineError(program)
    return analyze_program(program, transform, solver_kind, parse_ms)


def analyze_file(
    path: str, transform: str = "ssa+gvn", solver_kind: str = "worklist"
) -> PipelineResult:
    with open(path, "r", encoding="utf-8") as fp:
        text = fp.read()
    return analyze_source(text, path, transform, solver_kind)
