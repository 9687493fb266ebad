from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from graphgen import cli
from graphgen.config import ConfigError, ExperimentConfig, RobustnessSettings, parse_config
from graphgen.experiments import (ROBUSTNESS_COLUMNS, data_seed, iqr, oracle_rows,
                                  parse_model_row, render_csv, run_robustness, task_seed)
from graphgen.generators import GeneratorConfig, Schedule, Stop, TGPAPQ, generate
from graphgen.graph import GraphSpec
from graphgen.svg import emit_svg, scatter_svg, violin_svg

DATA = Path(__file__).parent / "data"

SMALL_ROBUSTNESS = """
[experiment]
kind = robustness
seed = 3

[robustness]
graphs = 2
nodes = 600
betas = 2.5, 3
methods = ff, edge
fractions = 0.5, 1
reps = 2
n_boot = 10
eigenvalues = 40
"""


@pytest.fixture(scope="module")
def small_run():
    cfg = parse_config(SMALL_ROBUSTNESS)
    return cfg, run_robustness(cfg)


# -- config ---------------------------------------------------------------------------------


def test_defaults():
    s = ExperimentConfig("robustness").settings
    assert (s.graphs, s.nodes, s.reps, s.n_boot, s.burn, s.eigenvalues) == (10, 2000, 10, 250,
                                                                               0.7, 100)
    assert s.betas == (2.0, 2.5, 3.0, 4.0, 5.0)
    assert s.fractions == (0.1, 0.3, 0.5, 0.7, 0.9)


def test_parse_lists_and_fractions():
    cfg = parse_config("[experiment]\nkind = exponent_sweep\n[exponent_sweep]\n"
                       "targets = 7/5, 5/3, 2\nnodes = 1e4\n")
    assert cfg.settings.targets == pytest.approx((1.4, 5 / 3, 2.0))
    assert cfg.settings.nodes == 10000
    rows = parse_config("[experiment]\nkind = clustering_table\n[clustering_table]\n"
                        "rows = TGPA(7k,0.987,10,100), GPA(7000,0.001,0.999,2)\n").settings.rows
    assert rows == ("TGPA(7k,0.987,10,100)", "GPA(7000,0.001,0.999,2)")


@pytest.mark.parametrize("text", [
    "",
    "[experiment]\nseed = 1\n",
    "[experiment]\nkind = nope\n",
    "[experiment]\nkind = robustness\ncolour = red\n",
    "[experiment]\nkind = robustness\n[robustness]\nfractions = 0, 0.5\n",
    "[experiment]\nkind = robustness\n[robustness]\nfractions = 1.5\n",
    "[experiment]\nkind = robustness\n[robustness]\nmethods = ff, bfs\n",
    "[experiment]\nkind = robustness\n[robustness]\nburn = 1\n",
    "[experiment]\nkind = robustness\n[robustness]\nreps = 0\n",
    "[experiment]\nkind = robustness\n[robustness]\nbetas = 1\n",
    "[experiment]\nkind = robustness\n[robustness]\ngraphs = many\n",
    "[experiment]\nkind = robustness\n[oracle_check]\ntmax = 5\n",
    "[experiment]\nkind = oracle_check\n[oracle_check]\ncoefficients = other\n",
    "[experiment]\nkind = exponent_sweep\n[exponent_sweep]\nrule = other\n",
    "[experiment\nkind = robustness\n",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


@pytest.mark.parametrize("text", [
    "[experiment]\nkind = robustness\n[robustness]\nfractions = -1\n",
    "[experiment]\nkind = nope\n",
])
def test_cli_config_error_exit_code(tmp_path, text, capsys):
    path = tmp_path / "bad.ini"
    path.write_text(text, encoding="utf-8")
    assert cli.main(["experiment", str(path)]) == cli.EXIT_CONFIG
    assert "error" in capsys.readouterr().err
    assert cli.main(["experiment", str(tmp_path / "missing.ini")]) == cli.EXIT_CONFIG


def test_digest_ignores_output_and_workers():
    a = parse_config("[experiment]\nkind = robustness\nout = a\nworkers = 1\n")
    b = parse_config("[experiment]\nkind = robustness\nout = b\nworkers = 4\n")
    c = parse_config("[experiment]\nkind = robustness\nseed = 1\n")
    assert a.digest() == b.digest() != c.digest()


# -- seeds ----------------------------------------------------------------------------------


def test_task_seed_stable():
    assert task_seed(1, "a", 0.3, 2) == task_seed(1, "a", 0.3, 2)
    assert task_seed(1, "a", 0.3, 2) != task_seed(1, "a", 0.3, 3)
    assert 0 <= task_seed("x") < 2 ** 63


def test_data_seed_ignores_order():
    x = np.array([3.0, 1.0, 2.0])
    assert data_seed(0, "deg", x) == data_seed(0, "deg", x[::-1])
    assert data_seed(0, "deg", x) != data_seed(0, "spec", x)


def test_iqr():
    assert iqr([1, 2, 3, 4, 5]) == 2.0
    assert np.isnan(iqr([]))


# -- robustness -----------------------------------------------------------------------------


def test_robustness_row_count(small_run):
    cfg, res = small_run
    s = cfg.settings
    kept = s.graphs - len(res.aborted)
    assert len(res.rows) == kept * len(s.methods) * len(s.fractions) * s.reps
    assert len(res.summary) == len(s.methods) * len(s.fractions)
    assert all(r["cells"] == kept * s.reps for r in res.summary)


def test_full_fraction_reproduces_base_verdicts(small_run):
    _, res = small_run
    bases = {b["graph_id"]: b for b in res.bases if b["status"] == "ok"}
    full = [r for r in res.rows if r["fraction"] == 1.0]
    assert full
    for r in full:
        b = bases[r["graph_id"]]
        for key in ("deg_alpha", "deg_pvalue", "deg_significant",
                    "spec_alpha", "spec_pvalue", "spec_significant"):
            assert r[key] == b[key], key


def test_robustness_deterministic_across_workers(small_run):
    cfg, res = small_run
    again = run_robustness(ExperimentConfig(cfg.kind, cfg.seed, cfg.out, 2, cfg.settings))
    cols = ROBUSTNESS_COLUMNS
    assert render_csv([], cols, again.rows) == render_csv([], cols, res.rows)


def test_robustness_aborts_loudly():
    s = RobustnessSettings(graphs=1, nodes=60, betas=(5.0,), methods=("ff",), fractions=(0.5,),
                           reps=1, n_boot=5, eigenvalues=10, max_regenerations=0)
    res = run_robustness(ExperimentConfig("robustness", 0, settings=s))
    if res.aborted:
        assert res.rows == [] and res.bases[0]["status"].startswith("aborted")
    else:
        assert len(res.rows) == 1


def test_experiment_cli_outputs(tmp_path):
    cfg_path = tmp_path / "r.ini"
    cfg_path.write_text(SMALL_ROBUSTNESS, encoding="utf-8")
    out = tmp_path / "out"
    code = cli.main(["experiment", str(cfg_path), "--out", str(out), "--svg"])
    assert code == 0
    text = (out / "robustness.csv").read_text()
    head = [line for line in text.splitlines() if line.startswith("#")]
    for needle in ("graphgen", "config_hash", "default burn_prob=0.7", "default n_boot=10",
                   "default significance=0.1", "default eigenvalues=40"):
        assert any(needle in line for line in head), needle
    assert text.splitlines()[len(head)] == ",".join(ROBUSTNESS_COLUMNS)
    assert (out / "robustness_summary.csv").exists()
    assert (out / "robustness_deg.svg").read_text().startswith("<svg")
    # byte-identical rerun
    out2 = tmp_path / "out2"
    cli.main(["experiment", str(cfg_path), "--out", str(out2)])
    assert (out2 / "robustness.csv").read_text() == text


# -- clustering table, sweep, oracle --------------------------------------------------------


def test_parse_model_row():
    label, model, n, init = parse_model_row("TGPA(7k,0.987,10,100)")
    assert (n, model, init) == (7000, TGPAPQ(0.987, 100), GraphSpec.clique(10))
    _, gpa, n, _ = parse_model_row("GPA(13k,0.001,0.999,2)")
    assert n == 13000 and gpa.q == 0
    for bad in ("TGPA(7k,0.9,10)", "BA(10,2)", "GPA(x,1,0,2)"):
        with pytest.raises(ConfigError):
            parse_model_row(bad)


def test_clustering_table_cli(tmp_path):
    net = tmp_path / "k4.txt"
    net.write_text("0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n", encoding="utf-8")
    cfg = tmp_path / "c.ini"
    cfg.write_text("[experiment]\nkind = clustering_table\n[clustering_table]\n"
                   f"rows = TGPA(300,0.9,5,5)\nnetworks = k4={net}\nreps = 2\n", encoding="utf-8")
    assert cli.main(["experiment", str(cfg), "--out", str(tmp_path / "o")]) == 0
    table = (tmp_path / "o" / "clustering_table.txt").read_text().splitlines()
    assert table[0].split()[:2] == ["name", "edges"]
    assert table[1].split()[:3] == ["k4", "6", "1"]
    cfg.write_text("[experiment]\nkind = clustering_table\n[clustering_table]\n"
                   f"networks = gone={tmp_path / 'missing.txt'}\n", encoding="utf-8")
    assert cli.main(["experiment", str(cfg), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG


@pytest.mark.parametrize("p,m", [(0.987, 100), (0.99, 58), (0.987, 150), (0.5, 3), (0.9, 10)])
def test_tgpa_mean_degree_mean_field(p, m):
    # per step: 2 edges; p/m net vertices from contracted node events, 3(1-p) from components
    g = generate(GeneratorConfig(TGPAPQ(p, m), Stop(nodes=7000), init=GraphSpec.clique(10),
                                 seed=1))
    assert 2 * g.n_edges / g.node_count == pytest.approx(4 * m / (p + 3 * m * (1 - p)), rel=0.05)


@pytest.mark.parametrize("p,m", [
    (0.987, 100), (0.99, 58),
    pytest.param(0.987, 150, marks=pytest.mark.xfail(
        strict=True, reason="approximate average-degree formula is 19% above the model")),
])
def test_tgpa_mean_degree_stated_formula(p, m):
    g = generate(GeneratorConfig(TGPAPQ(p, m), Stop(nodes=7000), init=GraphSpec.clique(10),
                                 seed=1))
    stated = (2 * m * (1 - p) + 2 * m) / (m * (1 - p) + 1)
    assert 2 * g.n_edges / g.node_count == pytest.approx(stated, rel=0.15)


def test_princeton_row_edge_count():
    # table lists 207k simple edges for TGPA(7k,0.987,10,100)
    g = generate(GeneratorConfig(TGPAPQ(0.987, 100), Stop(nodes=7000), init=GraphSpec.clique(10),
                                 seed=1)).simplify()
    assert g.n_edges == pytest.approx(207_000, rel=0.1)


def test_exponent_sweep_cli(tmp_path):
    cfg = tmp_path / "s.ini"
    cfg.write_text("[experiment]\nkind = exponent_sweep\n[exponent_sweep]\ntargets = 2, 3\n"
                   "gpa_p = 1\nnodes = 2000\neigenvalues = 20\n", encoding="utf-8")
    assert cli.main(["experiment", str(cfg), "--out", str(tmp_path / "o"), "--svg"]) == 0
    lines = [l for l in (tmp_path / "o" / "exponent_sweep.csv").read_text().splitlines()
             if not l.startswith("#")]
    assert len(lines) == 4
    assert "oracle_beta_deg" in lines[0]
    assert (tmp_path / "o" / "exponent_sweep.svg").exists()


def test_oracle_rows_node_only():
    rows = oracle_rows(Schedule.constant(1, 0, 0), 10 ** 4, kmax=32, ks=3)
    assert [r["k"] for r in rows] == [1, 2, 3]
    assert [r["M_k_closed_form"] for r in rows] == pytest.approx([1 / 2, 1 / 6, 1 / 12])
    # the recursion limit is 12/(k(k+1)(k+2)) with m_1 = 0
    assert rows[1]["m_k_over_n"] == pytest.approx(0.5, rel=1e-3)


def test_oracle_cli_csv(tmp_path, capsys):
    assert cli.main(["oracle", "--schedule", "constant:0.5,0.2,0.3", "--tmax", "2000",
                     "--ks", "4"]) == 0
    out = capsys.readouterr().out.splitlines()
    body = [l for l in out if not l.startswith("#")]
    assert body[0] == "k,m_k_over_n,M_k_closed_form,rel_err" and len(body) == 5
    assert any("coefficients=printed" in l for l in out)


# -- CLI round trip -------------------------------------------------------------------------


def test_cli_generate_sample_analyze_fit(tmp_path, capsys):
    g = tmp_path / "g.txt"
    assert cli.main(["generate", "--model", "tgpa-pq", "--param", "p=0.9", "--param", "m=3",
                     "--nodes", "800", "--seed", "4", "--out", str(g), "--json"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["nodes"] >= 800 and g.exists()

    s = tmp_path / "s.txt"
    assert cli.main(["sample", str(g), "--method", "dfs", "--fraction", "0.3", "--out", str(s),
                     "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["nodes"] == int(np.ceil(0.3 * info["nodes"]))

    assert cli.main(["analyze", str(g), "--k", "5", "--json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["nodes"] == info["nodes"] and len(rep["eigenvalues"]) == 5
    assert set(rep["clustering"]) >= {"global", "ho_global"}

    assert cli.main(["fit", str(g), "--what", "spectrum", "--k", "50", "--n-boot", "5",
                     "--json"]) == 0
    fit = json.loads(capsys.readouterr().out)
    assert fit["discrete"] is False and 0 <= fit["p_value"] <= 1

    vals = tmp_path / "v.txt"
    vals.write_text("# values\n1 2 3\n4, 5\n8 13 21 34 55 89 144\n", encoding="utf-8")
    assert cli.main(["fit", str(vals), "--what", "values", "--n-boot", "0"]) == 0
    assert "alpha:" in capsys.readouterr().out


def test_cli_usage_errors(tmp_path, capsys):
    out = str(tmp_path / "x.txt")
    assert cli.main(["generate", "--model", "ba", "--param", "m=2", "--steps", "5",
                     "--nodes", "5", "--out", out]) == cli.EXIT_CONFIG
    assert cli.main(["generate", "--model", "gpa-avin", "--param", "p=2", "--steps", "5",
                     "--out", out]) == cli.EXIT_CONFIG
    assert cli.main(["analyze", str(tmp_path / "none.txt")]) == cli.EXIT_CONFIG
    with pytest.raises(SystemExit):
        cli.main(["bogus"])


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "graphgen", "--version"], capture_output=True,
                         text=True, check=True)
    assert res.stdout.startswith("graphgen ")


# -- SVG ------------------------------------------------------------------------------------


def fixture_rows():
    rng = np.random.default_rng(20)
    groups = ["ff 0.3", "dfs 0.3", "edge 0.3", "ff 0.5"]
    return [{"group": groups[i % 4], "value": round(float(rng.random()), 6)} for i in range(20)]


def test_violin_golden_file():
    golden = (DATA / "violin_golden.svg").read_text(encoding="utf-8")
    assert violin_svg(fixture_rows(), title="p-values", ylabel="p") == golden


def test_svg_deterministic_and_errors(tmp_path):
    p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
    emit_svg(fixture_rows(), "violin", p1)
    emit_svg(fixture_rows(), "violin", p2)
    assert p1.read_bytes() == p2.read_bytes()
    with pytest.raises(ValueError):
        emit_svg([], "violin", p1)
    with pytest.raises(ValueError):
        emit_svg(fixture_rows(), "pie", p1)


def test_one_point_scatter():
    text = scatter_svg([{"x": 2.0, "y": 2.1}])
    assert text.count("<circle") == 1
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
