#!/usr/bin/env python3
"""Differential fuzzing loop: trace equivalence and solver soundness over a
seed range. Exit status 1 if any seed misbehaves."""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from nullgvn.corpus import GeneratorConfig, generate
from nullgvn.gvn import check_tagged_dominance, do_gvn
from nullgvn.interp import (
    check_solution_soundness,
    enumerate_traces,
    traces_diff,
    traces_equivalent,
)
from nullgvn.normalize import lift_loops, to_ssa
from nullgvn.solver import generate_constraints, solve_naive, solve_worklist


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=500)
    parser.add_argument("--depth", type=int, default=64)
    parser.add_argument("--loop-prob", type=float, default=0.15)
    args = parser.parse_args()

    failures = 0
    for seed in range(args.seeds):
        program = generate(GeneratorConfig(seed=seed, loop_prob=args.loop_prob))
        lifted = lift_loops(program)
        ssa = to_ssa(lifted)
        transformed = do_gvn(ssa)
        reference = enumerate_traces(program, args.depth)
        for stage, prog in (("lift", lifted), ("ssa", ssa), ("gvn", transformed)):
            if not traces_equivalent(reference, enumerate_traces(prog, args.depth)):
                print(f"seed {seed}: {stage} changed the trace set")
                print(traces_diff(reference, enumerate_traces(prog, args.depth)))
                failures += 1
        cons = generate_constraints(transformed)
        if solve_naive(cons) != solve_worklist(cons):
            print(f"seed {seed}: solvers disagree")
            failures += 1
        if check_solution_soundness(transformed, solve_worklist(cons), args.depth // 2):
            print(f"seed {seed}: points-to solution is not an over-approximation")
            failures += 1
        if check_tagged_dominance(transformed):
            print(f"seed {seed}: tagged assignment does not dominate a use")
            failures += 1
    print(f"{args.seeds} seeds checked, {failures} failures")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
