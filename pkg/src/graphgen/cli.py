"""Command-line entry point: ``graphgen generate|sample|analyze|fit|oracle|experiment``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import clustering, top_eigenvalues
from .config import ConfigError, load_config, with_overrides
from .experiments import (CLUSTER_COLUMNS, ORACLE_COLUMNS, ROBUSTNESS_COLUMNS, SWEEP_COLUMNS,
                          aligned_table, metadata, oracle_rows, render_csv, run_clustering_table,
                          run_exponent_sweep, run_oracle_check, run_robustness, write_text)
from .generators import (GeneratorConfig, GeneratorError, MODEL_TOKENS, Schedule, Stop,
                         generate, model_from_token)
from .graph import GraphError, GraphSpec, load_edge_list, write_edge_list
from .powerlaw import N_BOOT, PowerLawError, bootstrap_pvalue, fit_continuous, fit_discrete
from .sampling import DEFAULT_BURN, SampleConfig, sample
from .svg import emit_svg

EXIT_CONFIG = 2
EXIT_ABORTED = 3

log = logging.getLogger("graphgen")


def _params(pairs):
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _init_spec(text):
    if text in (None, "", "empty"):
        return GraphSpec.empty()
    kind, _, arg = text.partition(":")
    if kind == "clique":
        return GraphSpec.clique(int(arg))
    if kind == "edges":
        return GraphSpec.edge_list(arg)
    raise ConfigError(f"--init must be empty, clique:K or edges:PATH, got {text!r}")


def _emit(obj, as_json, out=None):
    text = json.dumps(obj, indent=2, sort_keys=True) if as_json else \
        "\n".join(f"{k}: {v}" for k, v in obj.items())
    if out:
        write_text(out, text + "\n")
    else:
        print(text)


def cmd_generate(args):
    model = model_from_token(args.model, **_params(args.param))
    if (args.steps is None) == (args.nodes is None):
        raise ConfigError("give exactly one of --steps / --nodes")
    cfg = GeneratorConfig(model, Stop(steps=args.steps, nodes=args.nodes),
                          init=_init_spec(args.init), seed=args.seed)
    g = generate(cfg)
    write_edge_list(g, args.out)
    s = g.simplify()
    _emit({"model": args.model, "seed": args.seed, "steps": g.steps, "nodes": s.node_count,
           "raw_edges": g.n_edges, "edges": s.n_edges, "out": str(args.out)}, args.json)
    return 0


def cmd_sample(args):
    g = load_edge_list(args.input).simplify()
    sub = sample(g, SampleConfig(args.method, args.fraction, args.burn, args.seed))
    write_edge_list(sub, args.out)
    _emit({"method": args.method, "fraction": args.fraction, "nodes": sub.node_count,
           "edges": sub.n_edges, "out": str(args.out)}, args.json)
    return 0


def cmd_analyze(args):
    mg = load_edge_list(args.input)
    g = mg.simplify()
    d = g.degrees()
    report = {"nodes": g.node_count, "edges": g.n_edges, "raw_edges": mg.n_edges,
              "max_degree": int(d.max()) if d.size else 0,
              "mean_degree": float(d.mean()) if d.size else 0.0}
    report["clustering"] = clustering(g).to_dict()
    if args.k > 0 and g.node_count:
        spec = top_eigenvalues(g, min(args.k, g.node_count))
        report["eigenvalues"] = [float(v) for v in spec.eigenvalues]
        report["k_converged"] = spec.k_converged
    _emit(report, args.json, args.out)
    return 0


def _read_values(path):
    vals = []
    for line in Path(path).read_text(encoding="utf-8").split("\n"):
        line = line.split("#", 1)[0].strip()
        if line:
            vals.extend(float(v) for v in line.replace(",", " ").split())
    return np.asarray(vals)


def cmd_fit(args):
    if args.what == "values":
        data = _read_values(args.input)
        discrete = args.discrete
    else:
        g = load_edge_list(args.input).simplify()
        if args.what == "degrees":
            d = g.degrees()
            data, discrete = d[d > 0], True
        else:
            data = top_eigenvalues(g, min(args.k, g.node_count)).positive()
            discrete = False
    f = fit_discrete(data) if discrete else fit_continuous(data)
    if args.n_boot > 0:
        f = bootstrap_pvalue(f, data, args.n_boot, np.random.default_rng(args.seed))
    _emit(f.to_dict(), args.json, args.out)
    return 0


def cmd_oracle(args):
    rows = oracle_rows(Schedule.parse(args.schedule), int(args.tmax), args.kmax, args.ks,
                       args.coefficients)
    meta = [f"graphgen {__version__}", f"oracle schedule={args.schedule} tmax={int(args.tmax)} "
            f"kmax={args.kmax} coefficients={args.coefficients} theta=0"]
    text = render_csv(meta, ORACLE_COLUMNS, rows)
    if args.out:
        write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def run_experiment(cfg, svg=False) -> int:
    out = Path(cfg.out)
    code = 0
    if cfg.kind == "robustness":
        res = run_robustness(cfg)
        meta = metadata(cfg, {"aborted_graphs": ";".join(map(str, res.aborted)) or "none"})
        write_text(out / "robustness.csv", render_csv(meta, ROBUSTNESS_COLUMNS, res.rows))
        summary_cols = ["method", "fraction", "cells", "deg_rate", "spec_rate",
                        "deg_pvalue_iqr", "spec_pvalue_iqr", "deg_pvalue_median",
                        "spec_pvalue_median"]
        write_text(out / "robustness_summary.csv", render_csv(meta, summary_cols, res.summary))
        base_cols = ["graph_id", "beta", "seed", "attempts", "status", "deg_alpha",
                     "deg_pvalue", "spec_alpha", "spec_pvalue"]
        write_text(out / "robustness_bases.csv", render_csv(meta, base_cols, res.bases))
        if svg and res.rows:
            for kind in ("deg", "spec"):
                emit_svg([{"group": f"{r['method']} {r['fraction']:g}", "value": r[f"{kind}_pvalue"]}
                          for r in res.rows], "violin", out / f"robustness_{kind}.svg",
                         title=f"{kind} p-values", ylabel="p-value")
        if res.aborted:
            log.error("aborted graphs: %s", res.aborted)
            code = EXIT_ABORTED
    elif cfg.kind == "clustering_table":
        rows = run_clustering_table(cfg)
        write_text(out / "clustering_table.csv", render_csv(metadata(cfg), CLUSTER_COLUMNS, rows))
        write_text(out / "clustering_table.txt", aligned_table(
            rows, ["name", "edges", "global", "local_avg", "ho_global", "ho_local_avg"]))
    elif cfg.kind == "exponent_sweep":
        rows = run_exponent_sweep(cfg)
        write_text(out / "exponent_sweep.csv", render_csv(metadata(cfg), SWEEP_COLUMNS, rows))
        if svg and rows:
            emit_svg([{"x": r["target_beta"], "y": r["deg_alpha"]} for r in rows],
                     "scatter", out / "exponent_sweep.svg", title="fitted vs target exponent",
                     xlabel="target", ylabel="fitted")
    else:
        rows = run_oracle_check(cfg)
        write_text(out / "oracle.csv", render_csv(metadata(cfg, {"theta": 0}), ORACLE_COLUMNS, rows))
    return code


def cmd_experiment(args):
    cfg = load_config(args.config)
    cfg = with_overrides(cfg, seed=args.seed, out=args.out, workers=args.workers)
    return run_experiment(cfg, svg=args.svg)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="graphgen", description=__doc__)
    ap.add_argument("--version", action="version", version=f"graphgen {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="grow a graph and write its edge list")
    g.add_argument("--model", required=True, choices=MODEL_TOKENS)
    g.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="model parameter, e.g. p=0.9, m=10, schedule=exponent:2.5")
    g.add_argument("--steps", type=int)
    g.add_argument("--nodes", type=int)
    g.add_argument("--init", default="empty", help="empty | clique:K | edges:PATH")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--json", action="store_true")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("sample", help="sample an induced subgraph")
    s.add_argument("input")
    s.add_argument("--method", choices=("ff", "dfs", "edge"), default="ff")
    s.add_argument("--fraction", type=float, default=0.3)
    s.add_argument("--burn", type=float, default=DEFAULT_BURN)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_sample)

    a = sub.add_parser("analyze", help="degree, clustering and spectrum summary")
    a.add_argument("input")
    a.add_argument("--k", type=int, default=10, help="eigenvalues to report (0 to skip)")
    a.add_argument("--out")
    a.add_argument("--json", action="store_true")
    a.set_defaults(func=cmd_analyze)

    f = sub.add_parser("fit", help="power-law fit with bootstrap p-value")
    f.add_argument("input")
    f.add_argument("--what", choices=("degrees", "spectrum", "values"), default="degrees")
    f.add_argument("--discrete", action="store_true", help="treat --what values as integers")
    f.add_argument("--k", type=int, default=100)
    f.add_argument("--n-boot", type=int, default=N_BOOT)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out")
    f.add_argument("--json", action="store_true")
    f.set_defaults(func=cmd_fit)

    o = sub.add_parser("oracle", help="degree recursion vs product-form M_k")
    o.add_argument("--schedule", default="constant:1,0,0",
                   help="constant:p,r,q | exponent:x | table:p,r,q;...")
    o.add_argument("--tmax", type=float, default=1e6)
    o.add_argument("--kmax", type=int, default=64)
    o.add_argument("--ks", type=int, default=10)
    o.add_argument("--coefficients", choices=("printed", "exact"), default="printed")
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)

    e = sub.add_parser("experiment", help="run an experiment config file")
    e.add_argument("config")
    e.add_argument("--seed", type=int)
    e.add_argument("--out")
    e.add_argument("--workers", type=int)
    e.add_argument("--svg", action="store_true")
    e.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, GeneratorError, GraphError, PowerLawError, ValueError) as exc:
        print(f"graphgen: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"graphgen: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
