import json
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from scvxstar.cli import main
from scvxstar.driver import Algorithm, AlgorithmConfig, solve
from scvxstar.examples.crawling import Z_INIT
from scvxstar.experiments import ExperimentSpec, load_config, run_sweep, trace_name
from scvxstar.trace import TRACE_COLUMNS, emit_trace, read_trace, render_convergence_plot

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def run10(ex1):
    return solve(ex1, AlgorithmConfig(w_init=10.0), Z_INIT)


def test_csv_and_sidecar(tmp_path, run10):
    path = emit_trace(run10, tmp_path / "t.csv", extra={"problem": "example1"})
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(TRACE_COLUMNS)
    assert len(lines) == run10.iteration_count + 1
    meta = json.loads(path.with_suffix(".json").read_text())
    assert meta["status"] == "Converged" and meta["problem"] == "example1"
    assert meta["config"]["w_init"] == 10.0
    rows = read_trace(path)
    assert [r["k"] for r in rows] == list(range(1, run10.iteration_count + 1))
    assert rows[-1]["delta_J"] == run10.iterations[-1].delta_J  # repr round-trips


def test_baseline_trace_has_no_updates(tmp_path, ex1):
    res = solve(ex1, AlgorithmConfig(mode=Algorithm.SCVX, w_init=10.0), Z_INIT)
    rows = read_trace(emit_trace(res, tmp_path / "b.csv"))
    assert not any(r["multipliers_updated"] for r in rows)
    svg = render_convergence_plot(rows, tmp_path / "b.svg")
    assert not ET.parse(svg).getroot().findall(f".//{SVG}circle[@class='update']")


def test_svg_structure(tmp_path, run10):
    root = ET.parse(render_convergence_plot(run10, tmp_path / "p.svg", title="a<b")).getroot()
    assert len(root.findall(f".//{SVG}line[@class='tolerance']")) == 2
    points = root.findall(f".//{SVG}circle[@class='point']")
    assert len(points) == 2 * run10.iteration_count
    n_upd = sum(r.multipliers_updated for r in run10.iterations)
    assert len(root.findall(f".//{SVG}circle[@class='update']")) == n_upd


def test_svg_single_iteration(tmp_path):
    rows = [dict(k=1, delta_J=0.0, delta_L=0.0, chi=0.0, rho=1.0, r=0.1, w=1.0,
                 delta=float("inf"), accepted=True, multipliers_updated=False)]
    ET.parse(render_convergence_plot(rows, tmp_path / "one.svg"))
    with pytest.raises(ValueError):
        render_convergence_plot([], tmp_path / "none.svg")


def test_load_config_resolves_relative_problem():
    spec = load_config(CONFIGS / "table2_scvxstar.yaml")
    assert spec.problem == "example2"
    assert spec.problem_params["mass"] == pytest.approx(0.3)
    assert len(spec.w_init) == 7


def test_load_config_rejects_unknown(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("problem: example1\nwhatever: 3\n")
    with pytest.raises(KeyError):
        load_config(bad)


def test_one_cell_sweep(tmp_path):
    spec = ExperimentSpec(problem="example1", modes=("scvx_star", "scvx"), w_init=(10,),
                          output=str(tmp_path))
    report = run_sweep(spec)
    assert report.cell("scvx_star", 10).status == "Converged"
    assert "SCvx # ite." in report.table()
    assert (tmp_path / trace_name("scvx", 10)).exists()
    assert json.loads((tmp_path / "sweep.json").read_text())["cells"][0]["w_init"] == 10.0


def test_cli_solve_and_plot(tmp_path, capsys):
    assert main(["solve", "--problem", "example1", "--w-init", "100", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "Converged" in out
    trace = tmp_path / trace_name("scvx_star", 100)
    assert main(["plot", str(trace)]) == 0
    assert trace.with_suffix(".svg").exists()


def test_cli_solve_reports_failure(capsys):
    code = main(["solve", "--problem", "example1", "--mode", "scvx", "--w-init", "0.1",
                 "--set", "max_iters=5"])
    assert code == 1
    assert "MaxIters" in capsys.readouterr().out


def test_cli_sweep_with_overrides(tmp_path, capsys):
    code = main(["sweep", "--config", str(CONFIGS / "table1.yaml"), "--w-init", "10",
                 "--w-init", "100", "--out", str(tmp_path)])
    assert code == 0
    table = (tmp_path / "table.md").read_text()
    assert "| w_init | 10 | 100 |" in table


def test_cli_check(capsys):
    code = main(["check", str(CONFIGS / "table1_scvxstar.yaml"), "--quick"])
    out = capsys.readouterr().out
    assert code == 0 and "all invariants hold" in out


def test_cli_bad_set():
    with pytest.raises(SystemExit):
        main(["solve", "--set", "oops"])
