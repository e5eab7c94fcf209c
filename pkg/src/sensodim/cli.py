"""Command-line entry point: ``sensodim <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 runtime or numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from sensodim.bootstrap import BootstrapParams, Strategy, run_bootstrap
from sensodim.cca import CcaParams, estimate_dim_cca
from sensodim.estimators import Method, estimate_dim_linear
from sensodim.harness import (
    PAPER_TRIALS,
    ExperimentPlan,
    emit_plot_data,
    load_plan,
    read_records,
    read_summary,
    run_directory,
    run_experiment,
    summarize,
    with_overrides,
    write_records,
    write_summary,
    write_timings,
)
from sensodim.sim import (
    ExplorationMode,
    SystemSpec,
    VariationMatrix,
    build_system,
    explore,
    sample_configurations,
    save_system,
)

log = logging.getLogger("sensodim")


class UsageError(Exception):
    pass


def _mode(value: str) -> ExplorationMode:
    try:
        return ExplorationMode.parse(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid mode {value!r} (agent|env|both)")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("runs"))


def _system_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--amplitude", type=float, default=1e-6, help="maximal amplitude in degrees")
    p.add_argument("--mode", type=_mode, default=ExplorationMode.AGENT, help="agent|env|both")
    p.add_argument("--n-moves", type=int, default=1000)
    p.add_argument("--sources", type=int, default=3)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sensodim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="explore once and dump the variation matrix as CSV")
    _system_flags(p)
    _common(p)

    p = sub.add_parser("estimate", help="estimate the dimension of a variation-matrix CSV")
    p.add_argument("matrix", type=Path)
    p.add_argument("--method", choices=["linear", "cca"], default="linear")
    p.add_argument("--pmax", type=int, default=15)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("bootstrap", help="run one bootstrap and write its trace")
    _system_flags(p)
    p.add_argument("--method", choices=["cca-boot-inf", "cca-boot-finite"], default="cca-boot-inf")
    p.add_argument("--boot-iters", type=int, default=10)
    p.add_argument("--pmax", type=int, default=None, help="also estimate with CCA up to this p")
    _common(p)

    p = sub.add_parser("experiment", help="full Monte-Carlo sweep")
    p.add_argument("--plan", type=Path, help="JSON or YAML plan file; flags override it")
    p.add_argument("--amplitude", type=float, action="append", help="repeatable; default: paper grid")
    p.add_argument("--mode", type=_mode, action="append")
    p.add_argument("--method", choices=[m.value for m in Method], action="append")
    p.add_argument("--trials", type=int)
    p.add_argument("--n-moves", type=int)
    p.add_argument("--sources", type=int)
    p.add_argument("--pmax", type=int)
    p.add_argument("--boot-iters", type=int)
    p.add_argument("--paper-scale", action="store_true", help=f"use {PAPER_TRIALS} trials")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, default=Path("runs"))

    p = sub.add_parser("summarize", help="success rates from a records.jsonl file")
    p.add_argument("records", type=Path)
    p.add_argument("--out", type=Path, help="defaults to the records' directory")

    p = sub.add_parser("plot-data", help="per-mode CSV and SVG curves from summary.csv")
    p.add_argument("summary", type=Path)
    p.add_argument("--out", type=Path, help="defaults to the summary's directory")
    return parser


def cmd_simulate(args) -> int:
    system = build_system(SystemSpec(n_sources=args.sources, seed=args.seed))
    configs = sample_configurations(system, args.mode, args.amplitude, args.n_moves, args.seed)
    vm = explore(system, configs, args.mode, args.amplitude)
    out = run_directory(args.out, args.seed)
    vm.to_csv(out / "variations.csv")
    save_system(system, out / "system.json", configs)
    print(out / "variations.csv")
    return 0


def cmd_estimate(args) -> int:
    if not args.matrix.exists():
        raise UsageError(f"no such file: {args.matrix}")
    vm = VariationMatrix.from_csv(args.matrix)
    if args.method == "linear":
        est = estimate_dim_linear(vm)
        diag = [float(x) for x in est.diagnostics]
    else:
        est = estimate_dim_cca(vm, args.pmax, CcaParams(seed=args.seed))
        diag = [float(x) for x in est.diagnostics.as_array()]
    print(json.dumps({"method": est.method.value, "dimension": est.value, "diagnostics": diag}))
    return 0


def cmd_bootstrap(args) -> int:
    system = build_system(SystemSpec(n_sources=args.sources, seed=args.seed))
    strategy = Strategy.INFINITESIMAL if args.method == "cca-boot-inf" else Strategy.FINITE
    params = BootstrapParams(iterations=args.boot_iters, strategy=strategy, target_amplitude=args.amplitude)
    result = run_bootstrap(system, args.mode, params, args.n_moves, args.seed)
    out = run_directory(args.out, args.seed)
    result.trace.to_csv(out / "bootstrap_trace.csv")
    result.variations.to_csv(out / "variations.csv")
    report = {"trace": str(out / "bootstrap_trace.csv"), "spreads": result.trace.spreads.tolist(),
              "linear_dimension": estimate_dim_linear(result.variations).value}
    if args.pmax:
        est = estimate_dim_cca(result.variations, args.pmax, CcaParams(seed=args.seed), Method(args.method))
        est.diagnostics.to_csv(out / "cost_profile.csv")
        report["cca_dimension"] = est.value
    print(json.dumps(report))
    return 0


def cmd_experiment(args) -> int:
    plan = load_plan(args.plan) if args.plan else ExperimentPlan()
    trials = PAPER_TRIALS if args.paper_scale else args.trials
    plan = with_overrides(
        plan,
        amplitudes=tuple(args.amplitude) if args.amplitude else None,
        modes=tuple(args.mode) if args.mode else None,
        methods=tuple(args.method) if args.method else None,
        trials=trials,
        n_moves=args.n_moves,
        n_sources=args.sources,
        p_max=args.pmax,
        boot_iters=args.boot_iters,
        master_seed=args.seed,
    )
    out = run_directory(args.out, plan.master_seed)
    (out / "plan.json").write_text(json.dumps(plan.to_dict(), indent=1))

    def progress(r):
        log.info("%g %s %s #%d -> %s (truth %d) %.1fs", r.amplitude, r.mode, r.method, r.trial,
                 r.estimate, r.truth, r.wall_time)

    records = run_experiment(plan, workers=args.workers, progress=progress)
    write_records(records, out / "records.jsonl")
    write_timings(records, out / "timings.csv")
    rows, derived = summarize(records)
    write_summary(rows, derived, out)
    emit_plot_data(rows, out)
    print(out)
    return 0


def cmd_summarize(args) -> int:
    if not args.records.exists():
        raise UsageError(f"no such file: {args.records}")
    rows, derived = summarize(read_records(args.records))
    write_summary(rows, derived, args.out or args.records.parent)
    for r in rows:
        print(f"{r.amplitude:g}\t{r.mode}\t{r.method}\t{r.percent:.1f}")
    return 0


def cmd_plot_data(args) -> int:
    if not args.summary.exists():
        raise UsageError(f"no such file: {args.summary}")
    for path in emit_plot_data(read_summary(args.summary), args.out or args.summary.parent):
        print(path)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "bootstrap": cmd_bootstrap,
    "experiment": cmd_experiment,
    "summarize": cmd_summarize,
    "plot-data": cmd_plot_data,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, np.linalg.LinAlgError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
