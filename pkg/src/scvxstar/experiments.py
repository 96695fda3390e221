"""Weight sweeps reproducing the convergence tables.

Experiment files are flat YAML mappings; dotted keys override solver options
(``algorithm.eps_opt: 1e-6``) or quad-rotor parameters (``problem.mass: 0.3``)::

    problem: example1
    modes: [scvx_star, scvx]
    w_init: [0.1, 1, 10]
    output: runs/table1
"""
from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .driver import Algorithm, AlgorithmConfig, SolveResult, Status, solve
from .examples.crawling import Z_INIT, example1_problem
from .examples.quadrotor import QuadRotorParams, example2_problem, initial_guess
from .trace import emit_trace

log = logging.getLogger(__name__)

PROBLEMS = ("example1", "example2")


@dataclass
class ExperimentSpec:
    problem: str = "example1"
    modes: tuple = (Algorithm.SCVX_STAR,)
    w_init: tuple = (1.0,)
    rate_variant: bool = False
    algorithm: dict = field(default_factory=dict)
    problem_params: dict = field(default_factory=dict)
    output: str | None = None
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        self.modes = tuple(Algorithm(m) for m in self.modes)
        self.w_init = tuple(float(w) for w in self.w_init)
        if not self.w_init:
            raise ValueError("w_init list must not be empty")
        if not self.modes:
            raise ValueError("modes list must not be empty")
        self.problem, extra = _resolve_problem(self.problem)
        self.problem_params = {**extra, **self.problem_params}
        AlgorithmConfig().with_overrides(**self.algorithm)  # validate keys early

    def config_for(self, mode, w) -> AlgorithmConfig:
        return AlgorithmConfig().with_overrides(
            **{**self.algorithm, "mode": Algorithm(mode), "w_init": float(w),
               "rate_variant": self.rate_variant})


def _resolve_problem(name: str):
    if name in PROBLEMS:
        return name, {}
    path = Path(name)
    if path.suffix in (".yaml", ".yml") and path.exists():
        data = yaml.safe_load(path.read_text()) or {}
        base = data.pop("base", "example2")
        if base not in PROBLEMS:
            raise ValueError(f"unknown base problem {base!r} in {path}")
        return base, data
    raise ValueError(f"unknown problem {name!r}; use {PROBLEMS} or a YAML parameter file")


def _coerce_params(params: dict) -> dict:
    out = {}
    names = {f.name for f in fields(QuadRotorParams)}
    for key, val in params.items():
        if key not in names:
            raise KeyError(f"unknown quad-rotor parameter {key!r}")
        if key == "obstacles":
            val = tuple((tuple(float(c) for c in center), float(r)) for center, r in val)
        elif isinstance(val, list):
            val = tuple(val)
        out[key] = val
    return out


def build_problem(name: str, params: dict | None = None):
    """Return ``(problem, z_init)`` for a problem id."""
    if name == "example1":
        if params:
            raise ValueError("example1 takes no parameters")
        return example1_problem(), Z_INIT.copy()
    if name == "example2":
        prm = QuadRotorParams(**_coerce_params(params or {}))
        return example2_problem(prm), initial_guess(prm)
    raise ValueError(f"unknown problem {name!r}")


def load_config(path) -> ExperimentSpec:
    """Read a flat YAML experiment file into an :class:`ExperimentSpec`."""
    path = Path(path)
    data = yaml.safe_load(path.read_text()) or {}
    spec = {}
    algorithm, params = {}, {}
    for key, val in data.items():
        if key.startswith("algorithm."):
            algorithm[key.split(".", 1)[1]] = val
        elif key.startswith("problem."):
            params[key.split(".", 1)[1]] = val
        else:
            spec[key] = val
    known = {f.name for f in fields(ExperimentSpec)}
    unknown = set(spec) - known
    if unknown:
        raise KeyError(f"unknown experiment keys {sorted(unknown)} in {path}")
    problem = spec.get("problem", "example1")
    if isinstance(problem, str) and not problem.startswith("/") and problem not in PROBLEMS:
        candidate = path.parent / problem
        if candidate.exists():
            spec["problem"] = str(candidate)
    spec["algorithm"] = {**spec.get("algorithm", {}), **algorithm}
    spec["problem_params"] = {**spec.get("problem_params", {}), **params}
    return ExperimentSpec(**spec)


@dataclass
class Cell:
    mode: Algorithm
    w_init: float
    status: str
    iteration_count: int
    message: str = ""
    trace_path: str | None = None
    seconds: float = 0.0
    f0: float = float("nan")
    chi: float = float("nan")

    @property
    def label(self) -> str:
        if self.status == Status.CONVERGED.value:
            return str(self.iteration_count)
        if self.status == Status.MAX_ITERS.value:
            return "N/A"
        return "ERR"


@dataclass
class SweepReport:
    spec: ExperimentSpec
    cells: list

    def cell(self, mode, w) -> Cell:
        mode = Algorithm(mode)
        for c in self.cells:
            if c.mode is mode and c.w_init == float(w):
                return c
        raise KeyError((mode, w))

    def table(self) -> str:
        """Iteration counts per mode and initial weight, N/A for non-convergence."""
        names = {Algorithm.SCVX_STAR: "SCvx* # ite.", Algorithm.SCVX: "SCvx # ite."}
        header = ["w_init"] + [f"{w:g}" for w in self.spec.w_init]
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        for mode in self.spec.modes:
            row = [names[mode]] + [self.cell(mode, w).label for w in self.spec.w_init]
            lines.append("| " + " | ".join(row) + " |")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "problem": self.spec.problem,
            "rate_variant": self.spec.rate_variant,
            "cells": [{"mode": c.mode.value, "w_init": c.w_init, "status": c.status,
                       "iteration_count": c.iteration_count, "message": c.message,
                       "trace": c.trace_path, "f0": c.f0, "chi": c.chi} for c in self.cells],
        }


def trace_name(mode, w) -> str:
    return f"{Algorithm(mode).value}_w{float(w):g}.csv"


def run_cell(problem_name: str, params: dict, config: AlgorithmConfig, out_dir=None):
    """Solve one (mode, weight) cell; failures are captured, never raised."""
    problem, z0 = build_problem(problem_name, params)
    t0 = time.perf_counter()
    try:
        result = solve(problem, config, z0)
    except Exception as exc:  # a broken cell must not abort the sweep
        log.exception("cell %s w=%g failed", config.mode.value, config.w_init)
        return Cell(config.mode, config.w_init, "Error", 0, repr(exc)), None
    seconds = time.perf_counter() - t0
    path = None
    if out_dir is not None and result.iterations:
        path = str(emit_trace(result, Path(out_dir) / trace_name(config.mode, config.w_init),
                              extra={"problem": problem_name, "problem_params": params}))
    last = result.iterations[-1] if result.iterations else None
    cell = Cell(config.mode, config.w_init, result.status.value, result.iteration_count,
                result.message, path, seconds,
                float(last.f0_star) if last else float("nan"),
                float(last.chi) if last else float("nan"))
    return cell, result


def _run_cell_remote(args):
    cell, _ = run_cell(*args)
    return cell


def run_sweep(spec: ExperimentSpec, keep_results: bool = False):
    """Run every (mode, w_init) cell.  Returns a :class:`SweepReport`, plus the
    :class:`SolveResult` objects when ``keep_results`` is set (serial only)."""
    jobs = [(spec.problem, spec.problem_params, spec.config_for(mode, w), spec.output)
            for mode in spec.modes for w in spec.w_init]
    results = {}
    if spec.jobs > 1 and not keep_results:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            cells = list(pool.map(_run_cell_remote, jobs))
    else:
        cells = []
        for args in jobs:
            cell, res = run_cell(*args)
            cells.append(cell)
            results[(cell.mode, cell.w_init)] = res
    report = SweepReport(spec, cells)
    if spec.output:
        out = Path(spec.output)
        out.mkdir(parents=True, exist_ok=True)
        (out / "table.md").write_text(report.table() + "\n")
        (out / "sweep.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    if keep_results:
        return report, results
    return report
