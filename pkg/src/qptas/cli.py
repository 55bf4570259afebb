"""Command-line surface: generate instances, solve them, run benchmark sweeps.

Exit codes: 0 success, 2 usage error, 3 unsupported scale, 4 internal
invariant breach.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from .errors import BudgetExceededError, InvariantError, UnknownConstantError
from .high_cost import dispatch_mfast
from .instances import (
    Clustering,
    Constants,
    DESK,
    GroundTruth,
    LabeledGraph,
    Permutation,
    Tournament,
    gen_planted_clustering,
    gen_planted_tournament,
    load_ground_truth,
    load_instance,
    save_ground_truth,
    save_instance,
)
from .kcc_ptas import dispatch_kcc
from .oracles import brute_force_kcc, brute_force_mfast, kcc_cost, mfast_cost

USAGE_EXIT = 2
UNSUPPORTED_EXIT = 3
INVARIANT_EXIT = 4


def _parse_overrides(pairs: list[str]) -> Constants:
    int_fields = {f.name for f in fields(Constants) if f.type in ("int", int)}
    overrides: dict[str, float] = {}
    for pair in pairs:
        if "=" not in pair:
            raise UnknownConstantError(pair)
        name, _, raw = pair.partition("=")
        value = float(raw)
        overrides[name] = int(value) if name in int_fields else value
    return DESK.with_overrides(**overrides)


def _add_const_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--const",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="override one solver constant (repeatable)",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qptas")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a planted instance plus ground truth")
    gen.add_argument("--problem", choices=["kcc", "mfast"], required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--k", type=int, default=2)
    gen.add_argument("--noise", type=float, default=0.0, help="pair flip probability (kcc)")
    gen.add_argument("--flip", type=float, default=0.0, help="arc flip probability (mfast)")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", type=Path, required=True)

    solve = sub.add_parser("solve", help="dispatch a solve and print the report")
    solve.add_argument("--problem", choices=["kcc", "mfast"], required=True)
    solve.add_argument("--infile", type=Path, help="instance file (else generate)")
    solve.add_argument("--n", type=int)
    solve.add_argument("--k", type=int, default=2)
    solve.add_argument("--noise", type=float, default=0.0)
    solve.add_argument("--flip", type=float, default=0.0)
    solve.add_argument("--eps", type=float, required=True)
    solve.add_argument("--seed", type=int, required=True)
    solve.add_argument("--out", type=Path, help="write the JSON report here")
    _add_const_arg(solve)

    bench = sub.add_parser("bench", help="sweep sizes and seeds, emit CSV rows")
    bench.add_argument("--problem", choices=["kcc", "mfast"], required=True)
    bench.add_argument("--n-list", default="", help="comma-separated sizes")
    bench.add_argument("--seeds", type=int, default=1, help="seeds 0..S-1 per size")
    bench.add_argument("--k", type=int, default=2)
    bench.add_argument("--noise", type=float, default=0.0)
    bench.add_argument("--flip", type=float, default=0.0)
    bench.add_argument("--eps", type=float, required=True)
    bench.add_argument("--out", type=Path, help="write CSV here (else stdout)")
    bench.add_argument("--workers", type=int, default=1)
    _add_const_arg(bench)
    return parser


def _generate(args) -> tuple[LabeledGraph | Tournament, GroundTruth]:
    if args.problem == "kcc":
        if args.k < 1 or args.k > args.n:
            raise UnknownConstantError(f"invalid k={args.k} for n={args.n}")
        return gen_planted_clustering(args.n, args.k, args.noise, args.seed)
    return gen_planted_tournament(args.n, args.flip, args.seed)


def cmd_gen(args) -> int:
    instance, truth = _generate(args)
    save_instance(instance, args.out)
    save_ground_truth(truth, Path(str(args.out) + ".gt"))
    print(f"wrote {args.out} and {args.out}.gt")
    return 0


def cmd_solve(args) -> int:
    constants = _parse_overrides(args.const)
    if args.infile is not None:
        instance = load_instance(args.infile)
    else:
        if args.n is None:
            print("solve without --infile needs --n", file=sys.stderr)
            return USAGE_EXIT
        instance, _ = _generate(args)
    start = time.perf_counter()
    if args.problem == "kcc":
        if not isinstance(instance, LabeledGraph):
            print("instance file is not a kcc instance", file=sys.stderr)
            return USAGE_EXIT
        solution, report = dispatch_kcc(instance, args.k, args.eps, constants, args.seed)
        report.cost_exact = kcc_cost(instance, solution)
    else:
        if not isinstance(instance, Tournament):
            print("instance file is not a tournament", file=sys.stderr)
            return USAGE_EXIT
        solution, report = dispatch_mfast(instance, args.eps, constants, args.seed)
        report.cost_exact = mfast_cost(instance, solution)
    report.wall_ms = (time.perf_counter() - start) * 1000.0
    text = report.to_json()
    if args.out is not None:
        args.out.write_text(text + "\n")
    print(text)
    return UNSUPPORTED_EXIT if report.branch == "unsupported_scale" else 0


def _bench_row(problem, n, seed, k, noise, flip, eps, constants):
    if problem == "kcc":
        graph, truth = gen_planted_clustering(n, k, noise, seed)
        solution, report = dispatch_kcc(graph, k, eps, constants, seed)
        cost = kcc_cost(graph, solution)
        ratio_or_gap = None
        if n * math.log2(max(k, 1)) <= constants.brute_kcc_budget:
            _, opt = brute_force_kcc(graph, k, constants)
            ratio_or_gap = (cost / opt) if opt > 0 else (1.0 if cost == 0 else math.inf)
        else:
            planted = kcc_cost(graph, truth.solution)
            ratio_or_gap = float(cost - planted)
        total_pairs = n * (n - 1) // 2
        return (n, seed, report.branch, ratio_or_gap, report.queries_dedup, total_pairs)
    tournament, truth = gen_planted_tournament(n, flip, seed)
    solution, report = dispatch_mfast(tournament, eps, constants, seed)
    cost = mfast_cost(tournament, solution)
    if n <= constants.mfast_brute_cap:
        _, opt = brute_force_mfast(tournament, constants)
        ratio_or_gap = (cost / opt) if opt > 0 else (1.0 if cost == 0 else math.inf)
    else:
        planted = mfast_cost(tournament, truth.solution)
        ratio_or_gap = float(cost - planted)
    total_pairs = n * (n - 1) // 2
    return (n, seed, report.branch, ratio_or_gap, report.queries_dedup, total_pairs)


def cmd_bench(args) -> int:
    constants = _parse_overrides(args.const)
    sizes = [int(x) for x in args.n_list.split(",") if x.strip()]
    jobs = [(n, seed) for n in sizes for seed in range(args.seeds)]
    rows = []
    if args.workers > 1 and jobs:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            futures = [
                pool.submit(
                    _bench_row, args.problem, n, seed, args.k, args.noise, args.flip,
                    args.eps, constants,
                )
                for n, seed in jobs
            ]
            rows = [f.result() for f in futures]
    else:
        rows = [
            _bench_row(
                args.problem, n, seed, args.k, args.noise, args.flip, args.eps, constants
            )
            for n, seed in jobs
        ]
    rows.sort(key=lambda r: (r[0], r[1]))
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["n", "seed", "branch", "ratio_or_gap", "queries_dedup", "total_pairs"])
    writer.writerows(rows)
    text = buf.getvalue()
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            return cmd_gen(args)
        if args.command == "solve":
            return cmd_solve(args)
        return cmd_bench(args)
    except (UnknownConstantError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except BudgetExceededError as exc:
        print(f"unsupported at this scale: {exc}", file=sys.stderr)
        return UNSUPPORTED_EXIT
    except InvariantError as exc:
        print(f"internal invariant breach: {exc}", file=sys.stderr)
        return INVARIANT_EXIT


if __name__ == "__main__":
    sys.exit(main())
