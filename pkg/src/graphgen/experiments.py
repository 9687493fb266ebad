"""Config-driven experiments: sampling robustness, clustering table, exponent sweep, oracle check.

Every random choice draws from a seed derived by hashing the master seed with
the task's coordinates, so outputs do not depend on scheduling or worker
count.  Bootstrap seeds are derived from the data being tested, so identical
samples always receive identical p-values.
"""
from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import clustering, top_degrees, top_eigenvalues
from .config import ConfigError, ExperimentConfig
from .generators import (GPAAvin, GPAContract, GeneratorConfig, Schedule, Stop, TGPAPQ,
                         TGPASchedule, generate, schedule_for_exponent)
from .graph import GraphSpec, SimpleGraph, induced_subgraph, load_edge_list
from .powerlaw import (SIGNIFICANCE, PowerLawError, PowerLawFit, bootstrap_pvalue,
                       fit_continuous, fit_discrete)
from .sampling import sample, SampleConfig
from .theory import (beta_predictions, gamma_of_schedule, mk_closed_form, run_recursion)

log = logging.getLogger(__name__)


def task_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary printable parts."""
    blob = "\x1f".join(repr(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(blob, digest_size=8).digest(), "little") >> 1


def data_seed(master: int, label: str, data) -> int:
    arr = np.ascontiguousarray(np.sort(np.asarray(data, dtype=np.float64)))
    return task_seed(master, label, hashlib.blake2b(arr.tobytes(), digest_size=16).hexdigest())


# ---------------------------------------------------------------------------
# output helpers


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else format(float(v), ".10g")
    return str(v)


def metadata(cfg: ExperimentConfig, extra: dict | None = None) -> list[str]:
    s = cfg.settings
    defaults = {
        "burn_prob": getattr(s, "burn", 0.7),
        "n_boot": getattr(s, "n_boot", 250),
        "significance": SIGNIFICANCE,
        "eigenvalues": getattr(s, "eigenvalues", 100),
        "samples": "induced subgraph",
        "parallel_edges": "merged",
        "self_loops": "dropped",
    }
    if extra:
        defaults.update(extra)
    lines = [f"graphgen {__version__}", f"experiment {cfg.kind}",
             f"config_hash {cfg.digest()}", f"seed {cfg.seed}"]
    lines += [f"default {k}={fmt(v)}" for k, v in defaults.items()]
    return lines


def render_csv(meta: list[str], columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    for line in meta:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def write_text(path, text: str) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8")
    return p


# ---------------------------------------------------------------------------
# fitting helpers


def degree_data(g: SimpleGraph) -> np.ndarray:
    d = g.degrees()
    return d[d > 0]


def spectrum_data(g: SimpleGraph, k: int) -> np.ndarray:
    # isolated nodes only add zero eigenvalues; dropping them makes the spectrum a function
    # of the edge set, so samples that keep every edge reproduce the base values bit for bit
    g = induced_subgraph(g, np.flatnonzero(g.degrees() > 0))
    if g.node_count == 0:
        return np.zeros(0)
    spec = top_eigenvalues(g, min(k, g.node_count))
    return spec.positive()


def fit_with_pvalue(data, discrete: bool, n_boot: int, seed: int) -> PowerLawFit | None:
    """Fit and bootstrap; None when the data admit no fit (too few distinct values)."""
    try:
        f = fit_discrete(data) if discrete else fit_continuous(data)
    except PowerLawError:
        return None
    if n_boot <= 0:
        return f
    return bootstrap_pvalue(f, data, n_boot, np.random.default_rng(seed))


def _fit_fields(prefix, f):
    if f is None:
        return {f"{prefix}_alpha": float("nan"), f"{prefix}_pvalue": 0.0,
                f"{prefix}_significant": False}
    return {f"{prefix}_alpha": f.alpha, f"{prefix}_pvalue": f.p_value,
            f"{prefix}_significant": f.significant}


def fit_graph(g: SimpleGraph, n_boot: int, k_eig: int, master: int) -> dict:
    deg = degree_data(g)
    spec = spectrum_data(g, k_eig)
    fd = fit_with_pvalue(deg, True, n_boot, data_seed(master, "deg", deg))
    fs = fit_with_pvalue(spec, False, n_boot, data_seed(master, "spec", spec))
    return {**_fit_fields("deg", fd), **_fit_fields("spec", fs)}


# ---------------------------------------------------------------------------
# robustness


ROBUSTNESS_COLUMNS = ["graph_id", "target_beta", "method", "fraction", "rep",
                      "deg_alpha", "deg_pvalue", "deg_significant",
                      "spec_alpha", "spec_pvalue", "spec_significant",
                      "n_sampled_nodes", "n_sampled_edges"]


@dataclass
class RobustnessResult:
    rows: list
    bases: list          # per graph: dict with id, beta, seed, attempts, fits, status
    aborted: list        # graph ids abandoned
    summary: list        # per (method, fraction) aggregates


def robustness_graph(graph_id: int, beta: float, nodes: int, seed: int, rule: str):
    model = TGPASchedule(schedule_for_exponent(beta, rule))
    g = generate(GeneratorConfig(model, Stop(nodes=nodes), seed=seed))
    return g.simplify()


def _base_task(args):
    cfg, graph_id = args
    s = cfg.settings
    beta = s.betas[graph_id % len(s.betas)]
    for attempt in range(s.max_regenerations + 1):
        seed = task_seed(cfg.seed, "base", graph_id, attempt)
        g = robustness_graph(graph_id, beta, s.nodes, seed, s.rule)
        fits = fit_graph(g, s.n_boot, s.eigenvalues, cfg.seed)
        if fits["deg_significant"] and fits["spec_significant"]:
            return {"graph_id": graph_id, "beta": beta, "seed": seed, "attempts": attempt + 1,
                    "status": "ok", **fits}, g
    return {"graph_id": graph_id, "beta": beta, "seed": seed, "attempts": attempt + 1,
            "status": "aborted: base distributions not both significant", **fits}, None


def _cell_task(args):
    cfg, graph_id, beta, g, method, fraction, rep = args
    s = cfg.settings
    seed = task_seed(cfg.seed, graph_id, method, fraction, rep)
    sub = sample(g, SampleConfig(method, fraction, s.burn, seed))
    fits = fit_graph(sub, s.n_boot, s.eigenvalues, cfg.seed)
    return {"graph_id": graph_id, "target_beta": beta, "method": method,
            "fraction": fraction, "rep": rep, **fits,
            "n_sampled_nodes": sub.node_count, "n_sampled_edges": sub.n_edges}


def _map(fn, tasks, workers):
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks, chunksize=1))


def iqr(values) -> float:
    v = np.asarray([x for x in values if x is not None and not math.isnan(x)], dtype=float)
    if v.size == 0:
        return float("nan")
    q1, q3 = np.percentile(v, [25, 75])
    return float(q3 - q1)


def summarize(rows) -> list[dict]:
    keys = sorted({(r["method"], r["fraction"]) for r in rows})
    out = []
    for method, fraction in keys:
        sel = [r for r in rows if r["method"] == method and r["fraction"] == fraction]
        out.append({
            "method": method, "fraction": fraction, "cells": len(sel),
            "deg_rate": float(np.mean([r["deg_significant"] for r in sel])),
            "spec_rate": float(np.mean([r["spec_significant"] for r in sel])),
            "deg_pvalue_iqr": iqr([r["deg_pvalue"] for r in sel]),
            "spec_pvalue_iqr": iqr([r["spec_pvalue"] for r in sel]),
            "deg_pvalue_median": float(np.median([r["deg_pvalue"] for r in sel])),
            "spec_pvalue_median": float(np.median([r["spec_pvalue"] for r in sel])),
        })
    return out


def run_robustness(cfg: ExperimentConfig) -> RobustnessResult:
    s = cfg.settings
    based = _map(_base_task, [(cfg, i) for i in range(s.graphs)], cfg.workers)
    bases, aborted, tasks = [], [], []
    for info, g in based:
        bases.append(info)
        if g is None:
            log.warning("graph %d aborted after %d attempts", info["graph_id"], info["attempts"])
            aborted.append(info["graph_id"])
            continue
        if info["attempts"] > 1:
            log.info("graph %d regenerated %d times", info["graph_id"], info["attempts"] - 1)
        for method in s.methods:
            for fraction in s.fractions:
                for rep in range(s.reps):
                    tasks.append((cfg, info["graph_id"], info["beta"], g, method, fraction, rep))
    rows = _map(_cell_task, tasks, cfg.workers)
    return RobustnessResult(rows, bases, aborted, summarize(rows))


# ---------------------------------------------------------------------------
# clustering table


_ROW = re.compile(r"^\s*(TGPA|GPA)\s*\(([^)]*)\)\s*$", re.IGNORECASE)


def parse_model_row(text: str):
    """``TGPA(n,p,k,m)`` or ``GPA(n,p,r,k)``; returns (label, model, nodes, init)."""
    m = _ROW.match(text)
    if not m:
        raise ConfigError(f"cannot parse model row {text!r}")
    args = [a.strip() for a in m.group(2).split(",")]
    if len(args) != 4:
        raise ConfigError(f"{text!r}: expected four parameters")
    try:
        n = int(float(args[0].lower().replace("k", "e3")))
        if m.group(1).upper() == "TGPA":
            p, k, mm = float(args[1]), int(args[2]), int(args[3])
            return text.strip(), TGPAPQ(p, mm), n, GraphSpec.clique(k)
        p, r, k = float(args[1]), float(args[2]), int(args[3])
        return text.strip(), GPAAvin(p, r, max(0.0, 1.0 - p - r)), n, GraphSpec.clique(k)
    except ValueError as exc:
        raise ConfigError(f"{text!r}: {exc}") from None


CLUSTER_COLUMNS = ["name", "nodes", "edges", "raw_edges", "global", "local_avg",
                   "ho_global", "ho_local_avg", "global_sd", "local_avg_sd",
                   "ho_global_sd", "ho_local_avg_sd", "reps"]


def _cluster_task(args):
    model, n, init, seed = args
    g = generate(GeneratorConfig(model, Stop(nodes=n), init=init, seed=seed))
    s = g.simplify()
    rep = clustering(s)
    return {"nodes": s.node_count, "edges": s.n_edges, "raw_edges": g.n_edges,
            **rep.to_dict()}


def run_clustering_table(cfg: ExperimentConfig) -> list[dict]:
    s = cfg.settings
    out = []
    for spec in s.networks:
        name, _, path = spec.partition("=")
        if not path:
            raise ConfigError(f"network entry {spec!r} must be name=path")
        try:
            mg = load_edge_list(path)
        except OSError as exc:
            raise ConfigError(f"cannot read network {name}: {exc}") from None
        sg = mg.simplify()
        rep = clustering(sg).to_dict()
        out.append({"name": name, "nodes": sg.node_count, "edges": sg.n_edges,
                    "raw_edges": mg.n_edges, "reps": 1,
                    **{k: rep[k] for k in ("global", "local_avg", "ho_global", "ho_local_avg")}})
    for row in s.rows:
        label, model, n, init = parse_model_row(row)
        tasks = [(model, n, init, task_seed(cfg.seed, "cluster", label, r)) for r in range(s.reps)]
        res = _map(_cluster_task, tasks, cfg.workers)
        agg = {"name": label, "reps": len(res)}
        for key in ("nodes", "edges", "raw_edges"):
            agg[key] = float(np.mean([r[key] for r in res]))
        for key in ("global", "local_avg", "ho_global", "ho_local_avg"):
            vals = np.array([r[key] for r in res])
            agg[key] = float(vals.mean())
            agg[key + "_sd"] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
            agg[key + "_median"] = float(np.median(vals))
        out.append(agg)
    return out


def aligned_table(rows, columns) -> str:
    cells = [[c for c in columns]] + [[fmt(r.get(c)) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    return "\n".join("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip()
                     for row in cells) + "\n"


# ---------------------------------------------------------------------------
# exponent sweep


SWEEP_COLUMNS = ["model", "target_beta", "rep", "nodes", "deg_alpha", "deg_xmin", "deg_n_tail",
                 "deg_pvalue", "spec_alpha", "spec_pvalue", "oracle_beta_deg",
                 "oracle_beta_deg_recursion", "oracle_beta_eig", "oracle_provenance",
                 "lambda_over_sqrt_degree"]


def _sweep_task(args):
    cfg, model, label, target, rep = args
    s = cfg.settings
    seed = task_seed(cfg.seed, "sweep", label, rep)
    g = generate(GeneratorConfig(model, Stop(nodes=s.nodes), seed=seed)).simplify()
    deg = degree_data(g)
    fd = fit_with_pvalue(deg, True, s.n_boot, data_seed(cfg.seed, "deg", deg))
    row = {"model": label, "target_beta": target, "rep": rep, "nodes": g.node_count,
           "deg_alpha": fd.alpha if fd else float("nan"),
           "deg_xmin": fd.xmin if fd else float("nan"),
           "deg_n_tail": fd.n_tail if fd else 0,
           "deg_pvalue": fd.p_value if fd else None}
    if s.eigenvalues > 0:
        spec = top_eigenvalues(g, min(s.eigenvalues, g.node_count))
        vals = spec.positive()
        fs = fit_with_pvalue(vals, False, s.n_boot, data_seed(cfg.seed, "spec", vals))
        row["spec_alpha"] = fs.alpha if fs else float("nan")
        row["spec_pvalue"] = fs.p_value if fs else None
        top = min(5, len(vals))
        ratio = vals[:top] / np.sqrt(top_degrees(g, top))
        row["lambda_over_sqrt_degree"] = ";".join(format(v, ".4f") for v in ratio)
    pred = beta_predictions(model)
    row["oracle_beta_deg"] = pred["beta_degrees"]
    row["oracle_beta_deg_recursion"] = pred.get("beta_degrees_recursion",
                                                pred.get("beta_degrees_meanfield"))
    row["oracle_beta_eig"] = pred["beta_eigenvalues"]
    row["oracle_provenance"] = pred["provenance"]
    return row


def sweep_models(cfg: ExperimentConfig):
    s = cfg.settings
    out = []
    for x in s.targets:
        sched = schedule_for_exponent(x, s.rule)
        out.append((TGPASchedule(sched), f"tgpa-schedule[{sched.token()}]", x))
    for p in s.gpa_p:
        out.append((GPAContract(p, 1), f"gpa-contract[p={p:g}]", (2 + p) / p))
    return out


def run_exponent_sweep(cfg: ExperimentConfig) -> list[dict]:
    s = cfg.settings
    tasks = [(cfg, m, label, x, rep) for m, label, x in sweep_models(cfg) for rep in range(s.reps)]
    return _map(_sweep_task, tasks, cfg.workers)


# ---------------------------------------------------------------------------
# oracle


ORACLE_COLUMNS = ["k", "m_k_over_n", "M_k_closed_form", "rel_err"]


def oracle_rows(schedule: Schedule, tmax: int, kmax: int = 64, ks: int = 10,
                coefficients: str = "printed") -> list[dict]:
    """Recursion iterate at ``tmax`` against the product-form limit, k = 1..ks."""
    state = run_recursion(schedule, tmax, kmax, coefficients)
    decays = schedule.kind == "target_exponent" and schedule.regime != "constant"
    gamma = gamma_of_schedule(schedule, max(tmax, 1000)).gamma if decays else 1.0
    y = float(schedule.y(np.array([float(tmax)]))[0])
    rows = []
    for k in range(1, min(ks, kmax) + 1):
        mk = state.m[k] / state.n_t
        closed = mk_closed_form(gamma, y, k)
        rows.append({"k": k, "m_k_over_n": mk, "M_k_closed_form": closed,
                     "rel_err": abs(mk - closed) / closed})
    return rows


def run_oracle_check(cfg: ExperimentConfig) -> list[dict]:
    s = cfg.settings
    return oracle_rows(Schedule.parse(s.schedule), s.tmax, s.kmax, s.ks, s.coefficients)
