"""Command-line driver: analyze, transform, gen, check-semantics, report."""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path as FsPath

from . import corpus, interp, normalize, pipeline
from .parse import parse_program, print_program

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_INTERNAL = 2


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fp:
        return fp.read()


def _parse_or_fail(path: str):
    program = parse_program(_read(path), path)
    if isinstance(program, list):
        for d in program:
            print(str(d), file=sys.stderr)
        raise pipeline.PipelineError(program)
    return program


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fp:
            fp.write(text)


def _report_text(name: str, report) -> str:
    lines = [f"{name}: {report.unproved} of {report.total} asserts not proved safe"]
    for a in report.per_assert:
        lines.append(f"  {a.proc}/{a.block}[{a.index}] assert {a.cond}: {a.verdict}")
    t = report.timings_ms
    lines.append(
        "  timings_ms: "
        + " ".join(f"{k}={t.get(k, 0.0):.2f}" for k in ("parse", "lift", "ssa", "gvn", "solve"))
    )
    return "\n".join(lines) + "\n"


def _check_semantics(original, transformed, depth: int, dump: str | None) -> bool:
    a = interp.enumerate_traces(original, depth)
    b = interp.enumerate_traces(transformed, depth)
    if dump:
        with open(dump, "w", encoding="utf-8") as fp:
            interp.dump_traces_jsonl(a, fp)
            interp.dump_traces_jsonl(b, fp)
    ok = interp.traces_equivalent(a, b)
    if not ok:
        print(interp.traces_diff(a, b), file=sys.stderr)
    return ok


# -- subcommands ---------------------------------------------------------------


def cmd_analyze(args) -> int:
    t0 = time.monotonic()
    program = _parse_or_fail(args.file)
    parse_ms = (time.monotonic() - t0) * 1000.0
    result = pipeline.analyze_program(program, args.transform, args.solver, parse_ms)
    if args.check_semantics:
        if not _check_semantics(program, result.transformed, args.depth, None):
            print("semantics check FAILED", file=sys.stderr)
            return EXIT_DIAGNOSTICS
    if args.emit_transformed:
        _emit(print_program(result.transformed), args.emit_transformed)
    if args.format == "json":
        _emit(json.dumps(result.report.to_json_dict(), indent=2) + "\n", None)
    else:
        _emit(_report_text(args.file, result.report), None)
    return EXIT_OK


def cmd_transform(args) -> int:
    program = _parse_or_fail(args.file)
    transformed, _ = pipeline.transform_program(program, args.level)
    _emit(print_program(transformed), args.output)
    return EXIT_OK


def cmd_check_semantics(args) -> int:
    program = _parse_or_fail(args.file)
    transformed, _ = pipeline.transform_program(program, args.level)
    if _check_semantics(program, transformed, args.depth, args.dump_traces):
        print(f"{args.file}: traces equivalent at depth {args.depth}")
        return EXIT_OK
    return EXIT_DIAGNOSTICS


def _config_from_args(args) -> corpus.GeneratorConfig:
    values: dict[str, str] = {}
    if args.config:
        for raw in _read(args.config).splitlines():
            line = raw.split("//")[0].strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    weights = dict(corpus.DEFAULT_WEIGHTS)
    for key, value in values.items():
        if key.startswith("weight_"):
            weights[key[len("weight_"):]] = float(value)
    cfg = corpus.GeneratorConfig(
        seed=args.seed if args.seed is not None else int(values.get("seed", 0)),
        max_procs=int(values.get("max_procs", 2)),
        max_blocks=int(values.get("max_blocks", 4)),
        max_stmts=int(values.get("max_stmts", 4)),
        weights=tuple(weights.items()),
        null_check_density=(
            args.null_check_density
            if args.null_check_density is not None
            else float(values.get("null_check_density", 0.85))
        ),
        loop_prob=(
            args.loop_prob
            if args.loop_prob is not None
            else float(values.get("loop_prob", 0.15))
        ),
    )
    return cfg


def cmd_gen(args) -> int:
    program = corpus.generate(_config_from_args(args))
    _emit(print_program(program), args.output)
    return EXIT_OK


def _report_row(path: FsPath, solver_kind: str) -> dict:
    text = _read(str(path))
    program = parse_program(text, str(path))
    if isinstance(program, list):
        raise pipeline.PipelineError(program)
    ssa = pipeline.analyze_program(program, "ssa", solver_kind)
    gvn = pipeline.analyze_program(program, "ssa+gvn", solver_kind)
    ssa_t = ssa.report.timings_ms
    gvn_t = gvn.report.timings_ms
    return {
        "bench": path.stem,
        "procs": len(program.procedures),
        "asserts": ssa.report.total,
        "ssa_time_ms": round(sum(ssa_t.values()), 3),
        "ssa_unproved": ssa.report.unproved,
        "gvn_time_ms": round(sum(gvn_t.values()), 3),
        "gvn_phase_ms": round(gvn_t["gvn"], 3),
        "gvn_unproved": gvn.report.unproved,
    }


def cmd_report(args) -> int:
    root = FsPath(args.directory)
    files = sorted(root.glob("*.ir"))
    if not files:
        print(f"no .ir files under {root}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        rows = list(pool.map(lambda p: _report_row(p, args.solver), files))
    if args.format == "json":
        _emit(json.dumps(rows, indent=2) + "\n", None)
        return EXIT_OK
    cols = [
        ("bench", 28), ("procs", 6), ("asserts", 8),
        ("ssa_time_ms", 12), ("ssa_unproved", 13),
        ("gvn_time_ms", 12), ("gvn_phase_ms", 13), ("gvn_unproved", 13),
    ]
    header = " ".join(name.rjust(width) if i else name.ljust(width)
                      for i, (name, width) in enumerate(cols))
    print(header)
    print("-" * len(header))
    totals = {name: 0 for name, _ in cols[1:]}
    for row in rows:
        print(" ".join(
            (str(row[name]).rjust(width) if i else str(row[name]).ljust(width))
            for i, (name, width) in enumerate(cols)
        ))
        for name, _ in cols[1:]:
            totals[name] += row[name]
    print("-" * len(header))
    print(" ".join(
        ("total".ljust(cols[0][1]) if i == 0 else str(round(totals[name], 3)).rjust(width))
        for i, (name, width) in enumerate(cols)
    ))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nullgvn",
        description="Non-null assertion checking for a small pointer IR: "
        "loop lifting, SSA, a value-numbering transformation that exploits "
        "null checks, and an inclusion-based points-to analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analyze one program and report assert safety")
    p.add_argument("file")
    p.add_argument("--transform", choices=pipeline.TRANSFORM_LEVELS, default="ssa+gvn")
    p.add_argument("--solver", choices=pipeline.SOLVERS, default="worklist")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--check-semantics", action="store_true",
                   help="also verify trace equivalence of the transformation")
    p.add_argument("--depth", type=int, default=64)
    p.add_argument("--emit-transformed", metavar="PATH",
                   help="write the transformed program to PATH")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("transform", help="print the transformed program")
    p.add_argument("file")
    p.add_argument("--level", choices=pipeline.TRANSFORM_LEVELS, default="ssa+gvn")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("gen", help="generate a random program")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", help="key=value config file", default=None)
    p.add_argument("--null-check-density", type=float, default=None)
    p.add_argument("--loop-prob", type=float, default=None)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("check-semantics",
                       help="compare traces of a program and its transformed version")
    p.add_argument("file")
    p.add_argument("--level", choices=pipeline.TRANSFORM_LEVELS, default="ssa+gvn")
    p.add_argument("--depth", type=int, default=64)
    p.add_argument("--dump-traces", metavar="PATH", default=None,
                   help="dump both trace sets as JSON lines")
    p.set_defaults(func=cmd_check_semantics)

    p = sub.add_parser("report", help="aggregate table over a corpus directory")
    p.add_argument("directory")
    p.add_argument("--solver", choices=pipeline.SOLVERS, default="worklist")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--jobs", type=int, default=4)
    p.set_defaults(func=cmd_report)

    return parser


def run(config: pipeline.PipelineConfig) -> tuple[int, list[dict]]:
    """Programmatic one-shot: analyze every input at the configured level."""
    reports = []
    for path in config.inputs:
        try:
            result = pipeline.analyze_file(path, config.transform, config.solver)
        except pipeline.PipelineError as exc:
            for d in exc.diagnostics:
                print(str(d), file=sys.stderr)
            return EXIT_DIAGNOSTICS, reports
        if config.check_semantics:
            original = _parse_or_fail(path)
            if not _check_semantics(original, result.transformed, config.depth, None):
                return EXIT_DIAGNOSTICS, reports
        if config.emit_transformed:
            _emit(print_program(result.transformed), config.emit_transformed)
        reports.append(result.report.to_json_dict())
    return EXIT_OK, reports


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except pipeline.PipelineError:
        return EXIT_DIAGNOSTICS
    except normalize.LiftError as exc:
        print(str(exc.diagnostic), file=sys.stderr)
        return EXIT_DIAGNOSTICS
    except interp.TraceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    except Exception as exc:  # internal error contract
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
