"""Command-line entry point: ``scvxstar {solve,sweep,plot,check}``."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import yaml

from .driver import Algorithm
from .experiments import ExperimentSpec, build_problem, load_config, run_cell, run_sweep
from .invariants import check_run
from .trace import render_convergence_plot


def _parse_sets(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        out[key.strip()] = yaml.safe_load(val)
    return out


def _split_sets(sets: dict):
    algorithm, params = {}, {}
    for key, val in sets.items():
        if key.startswith("problem."):
            params[key.split(".", 1)[1]] = val
        else:
            algorithm[key.removeprefix("algorithm.")] = val
    return algorithm, params


def _spec_from_args(args) -> ExperimentSpec:
    if getattr(args, "config", None):
        spec = load_config(args.config)
        if args.problem:
            spec.problem = args.problem
    else:
        spec = ExperimentSpec(problem=args.problem or "example1")
    algorithm, params = _split_sets(_parse_sets(args.set))
    if args.mode:
        spec.modes = tuple(Algorithm(m) for m in args.mode)
    if args.w_init:
        spec.w_init = tuple(args.w_init)
    if args.rate_variant:
        spec.rate_variant = True
    if args.out:
        spec.output = args.out
    if getattr(args, "jobs", None):
        spec.jobs = args.jobs
    spec.algorithm = {**spec.algorithm, **algorithm}
    spec.problem_params = {**spec.problem_params, **params}
    return ExperimentSpec(**{**spec.__dict__})


def cmd_solve(args) -> int:
    spec = _spec_from_args(args)
    mode, w = spec.modes[0], spec.w_init[0]
    config = spec.config_for(mode, w)
    cell, result = run_cell(spec.problem, spec.problem_params, config, spec.output)
    print(f"{spec.problem} {mode.value} w_init={w:g}: {cell.status} after "
          f"{cell.iteration_count} iterations ({cell.seconds:.2f}s)")
    if result is not None and result.iterations:
        last = result.iterations[-1]
        print(f"  f0 = {last.f0_star:.8g}  |dJ| = {abs(last.delta_J):.3e}  chi = {last.chi:.3e}")
        if len(result.z_final) <= 8:
            print(f"  z = {list(map(float, result.z_final))}")
    if cell.message:
        print(f"  {cell.message}")
    if cell.trace_path:
        print(f"  trace: {cell.trace_path}")
    return 0 if cell.status == "Converged" else 1


def cmd_sweep(args) -> int:
    spec = _spec_from_args(args)
    t0 = time.perf_counter()
    report = run_sweep(spec)
    print(f"{spec.problem}{' (rate variant)' if spec.rate_variant else ''}: "
          f"{len(report.cells)} cells in {time.perf_counter() - t0:.1f}s")
    print(report.table())
    if spec.output:
        print(f"traces and table written to {spec.output}")
    return 0


def cmd_plot(args) -> int:
    out = args.output or str(Path(args.trace).with_suffix(".svg"))
    render_convergence_plot(args.trace, out, eps=args.eps, title=args.title or "")
    print(out)
    return 0


DEFAULT_CHECK_CONFIGS = ("table1_scvxstar.yaml", "table1_scvx.yaml", "table2_scvxstar.yaml",
                         "table1_rate_variant.yaml")


def cmd_check(args) -> int:
    configs = args.configs or [str(Path(args.config_dir) / c) for c in DEFAULT_CHECK_CONFIGS]
    failures = 0
    for cfg_path in configs:
        spec = load_config(cfg_path)
        spec.output = None
        if args.quick:
            spec.w_init = spec.w_init[:2]
        report, results = run_sweep(spec, keep_results=True)
        problem, _ = build_problem(spec.problem, spec.problem_params)
        for (mode, w), res in results.items():
            if res is None:
                print(f"FAIL {Path(cfg_path).name} {mode.value} w={w:g}: solve raised")
                failures += 1
                continue
            for name, ok, detail in check_run(problem, res):
                if not ok or args.verbose:
                    print(f"{'PASS' if ok else 'FAIL'} {Path(cfg_path).name} {mode.value} "
                          f"w={w:g} [{res.status.value}, {res.iteration_count} it] {name}"
                          f"{' (' + detail + ')' if detail else ''}")
                failures += not ok
        print(f"{Path(cfg_path).name}: {len(results)} runs checked")
    print("all invariants hold" if failures == 0 else f"{failures} invariant violations")
    return 0 if failures == 0 else 1


def _add_common(p):
    p.add_argument("--problem", default=None, help="example1 | example2 | path to YAML params")
    p.add_argument("--mode", action="append", choices=[a.value for a in Algorithm],
                   help="algorithm (repeatable for sweeps)")
    p.add_argument("--w-init", type=float, action="append", help="initial penalty weight(s)")
    p.add_argument("--rate-variant", action="store_true", help="use the eta-criterion")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override algorithm.* or problem.* option")
    p.add_argument("--out", help="output directory for traces")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scvxstar", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one problem with one configuration")
    _add_common(p)
    p.add_argument("--config", help="experiment YAML (first mode/weight is used)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="reproduce a convergence table")
    _add_common(p)
    p.add_argument("--config", help="experiment YAML")
    p.add_argument("--jobs", type=int, default=None, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="render a trace CSV as SVG")
    p.add_argument("trace")
    p.add_argument("-o", "--output")
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--title")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("check", help="run the trace invariant suite")
    p.add_argument("configs", nargs="*", help="experiment YAML files")
    p.add_argument("--config-dir", default="configs")
    p.add_argument("--quick", action="store_true", help="first two weights only")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
