"""Command-line entry point: ``quso <command> --config file.json``.

Every output file starts with ``#`` header lines (config hash, seed, code
version, column schema) followed by a body that depends only on the config,
so reruns reproduce identical bodies.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .block_encoding import build_UA, encoded_block, lcu_plan
from .errors import ConfigError, ConvergenceError, QusoError, ResourceError
from .optimizer import (
    OptimizerConfig,
    QAOAParams,
    cost_landscape,
    evaluate,
    expectation_cost,
    optimize,
    result_from_distribution,
)
from .pipeline import FULL_MODE_MAX_K, FullPipeline, amplitude_costs, resource_report
from .qsp import PhaseCache, build_inversion_polynomial, phase_deviation
from .qsvt import encoded_sigma_min, run_linear_solver, solver_temperatures
from .statevector import RegisterLayout
from .thermal import assemble_matrix, enumerate_costs, load_network, solve_direct

log = logging.getLogger("quso")

COMMANDS = ("solve", "block-verify", "qsvt-sweep", "qaoa", "quso", "landscape", "resources")

DEFAULTS = {
    "target_node": 0,
    "mu": [0.5, 0.25, 0.125, 0.0625, 1 / 38],
    "eps": [0.1],
    "p": [1, 2, 3, 4, 5],
    "delta": [0.25, 0.0625, 0.015625],
    "k": 2,
    "mode": "shortcut",
    "shots": 1024,
    "seed": 0,
    "degree_cap": 2001,
    "optimizer": {},
    "landscape": {"gamma": [0.0, 6.283185307179586], "beta": [0.0, 3.141592653589793], "points": 64},
    "resources": {"mu": 0.5, "eps": 0.01, "p": 1, "k": 2},
}


# -- config ---------------------------------------------------------------------------


def load_config(path, overrides: dict | None = None) -> dict:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    cfg = json.loads(json.dumps(DEFAULTS))
    cfg.update(raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg[key] = value
    if "network" not in cfg:
        raise ConfigError(f"{path}: missing 'network'")
    net_path = Path(cfg["network"])
    if not net_path.is_absolute():
        net_path = (path.parent / net_path).resolve()
    if not net_path.exists():
        raise ConfigError(f"{path}: network file {net_path} does not exist")
    cfg["_network_path"] = str(net_path)
    for key in ("mu", "eps", "p", "delta"):
        if not isinstance(cfg[key], list):
            cfg[key] = [cfg[key]]
        if not cfg[key]:
            raise ConfigError(f"{path}: grid '{key}' is empty")
    for d in cfg["delta"]:
        if d != 0 and abs(-math.log2(d) - round(-math.log2(d))) > 1e-12:
            raise ConfigError(f"{path}: delta {d} is not a power of two")
    if cfg["mode"] not in ("shortcut", "full"):
        raise ConfigError(f"{path}: mode must be 'shortcut' or 'full'")
    return cfg


def config_hash(cfg: dict) -> str:
    public = {k: v for k, v in cfg.items() if not k.startswith("_") and k not in ("out", "workers")}
    public["network_sha256"] = hashlib.sha256(Path(cfg["_network_path"]).read_bytes()).hexdigest()
    return hashlib.sha256(json.dumps(public, sort_keys=True).encode()).hexdigest()[:16]


def optimizer_config(cfg: dict) -> OptimizerConfig:
    opts = dict(cfg.get("optimizer") or {})
    opts.setdefault("seed", cfg["seed"])
    try:
        return OptimizerConfig(**opts)
    except TypeError as exc:
        raise ConfigError(f"bad optimizer option: {exc}") from exc


# -- output ------------------------------------------------------------------------------


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class Output:
    def __init__(self, root, cfg: dict, command: str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.header = {
            "config_hash": config_hash(cfg),
            "seed": cfg["seed"],
            "version": __version__,
            "command": command,
        }

    def csv(self, name: str, columns, rows) -> Path:
        buf = io.StringIO()
        for key, value in self.header.items():
            buf.write(f"# {key}: {value}\n")
        buf.write(f"# columns: {','.join(columns)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
        path = self.root / name
        path.write_text(buf.getvalue())
        return path

    def json(self, name: str, payload: dict) -> Path:
        path = self.root / name
        path.write_text(json.dumps({"header": self.header, **payload}, indent=2, sort_keys=False) + "\n")
        return path


# -- commands ---------------------------------------------------------------------------


def cmd_solve(cfg, out: Output, workers: int):
    net = load_network(cfg["_network_path"])
    rows = []
    for x in net.configurations():
        res = solve_direct(net, x)
        rows.append([str(x) or "-"] + [float(t) for t in res.temperatures] + [res.residual])
    cols = ["bitstring"] + [f"T{i}" for i in range(net.node_count)] + ["residual"]
    out.csv("solve.csv", cols, rows)
    return {"rows": len(rows)}


def cmd_block_verify(cfg, out: Output, workers: int):
    net = load_network(cfg["_network_path"])
    layout = RegisterLayout.standard(net.edge_count, 0, net.node_count)
    ua = build_UA(net, layout)
    plan = lcu_plan(net)
    nd = layout.width("d")
    rows, worst = [], 0.0
    for x in net.configurations():
        block = encoded_block(ua, layout, x.index)
        a = np.zeros((2**nd, 2**nd))
        a[: net.node_count, : net.node_count] = assemble_matrix(net, x)
        a[net.node_count:, net.node_count:] = np.eye(2**nd - net.node_count) / net.r_env
        err = float(np.abs(block - plan.c_squared * a / 2).max())
        worst = max(worst, err)
        sv = np.linalg.svd(block, compute_uv=False)
        rows.append([str(x) or "-", err, float(sv.min()), float(sv.max())])
    out.csv("block_verify.csv", ["bitstring", "max_abs_error", "sigma_min", "sigma_max"], rows)
    summary = {"c_squared": plan.c_squared, "sum_lambda": float(plan.coefficients.sum()),
               "encoded_sigma_min": encoded_sigma_min(net), "max_abs_error": worst,
               "qubits": layout.total}
    out.json("block_verify.json", summary)
    return summary


def _sweep_point(args):
    net_path, target, mu, eps, cap, cache_dir = args
    net = load_network(net_path)
    try:
        poly = build_inversion_polynomial(mu, eps, degree_cap=cap)
        phases = PhaseCache(cache_dir).get_or_compute(poly)
    except ConvergenceError as exc:
        raise ConvergenceError(f"mu={mu:g}, eps={eps:g}: {exc}", exc.residual) from exc
    layout = RegisterLayout.standard(net.edge_count, 0, net.node_count)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sv = run_linear_solver(net, layout, poly, phases)
    temps = np.array([solver_temperatures(sv, net, poly, x, superposed=True)[target]
                      for x in range(2**net.edge_count)])
    return poly.degree, phase_deviation(phases, poly.coefficients), temps


def cmd_qsvt_sweep(cfg, out: Output, workers: int):
    net = load_network(cfg["_network_path"])
    target = cfg["target_node"]
    table = enumerate_costs(net, target)
    goal = table.normalized
    cache_dir = str(out.root / "phase_cache")
    grid = [(mu, eps) for mu in cfg["mu"] for eps in cfg["eps"]]
    jobs = [(cfg["_network_path"], target, mu, eps, cfg["degree_cap"], cache_dir) for mu, eps in grid]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    rows, summary = [], []
    labels = table.bitstrings()
    for (mu, eps), (degree, dev, temps) in zip(grid, results):
        got = temps / temps.max()
        delta = np.abs(goal - got)
        for x in range(len(goal)):
            rows.append([mu, eps, labels[x] or "-", float(got[x]), float(goal[x]), float(delta[x])])
        summary.append([mu, eps, degree, float(delta.mean()), float(delta.std()), dev])
    out.csv("qsvt_sweep.csv", ["mu", "eps", "bitstring", "c_norm", "c_norm_target", "delta"], rows)
    out.csv("qsvt_summary.csv", ["mu", "eps", "degree", "mean_delta", "std_delta", "phase_deviation"], summary)
    return {"points": len(grid), "summary": summary}


def _qaoa_runs(cfg, table, opt):
    runs = {}
    for p in cfg["p"]:
        log.info("optimizing depth %d", p)
        runs[p] = optimize(table, QAOAParams.constant(int(p)), opt)
    return runs


def _ratio_rows(runs):
    return [[p, 0.0, r.ratio, r.expectation, r.iterations, int(r.converged)] for p, r in runs.items()]


def cmd_qaoa(cfg, out: Output, workers: int):
    net = load_network(cfg["_network_path"])
    table = enumerate_costs(net, cfg["target_node"])
    runs = _qaoa_runs(cfg, table, optimizer_config(cfg))
    for p, r in runs.items():
        out.json(f"qaoa_p{p}.json", r.to_json())
    out.csv("qaoa_ratio.csv", ["p", "delta", "ratio", "expectation", "iterations", "converged"], _ratio_rows(runs))
    return {p: r.ratio for p, r in runs.items()}


def _quso_full(cfg, net, out: Output):
    ks = [round(-math.log2(d)) for d in cfg["delta"] if d > 0]
    if not ks:
        raise ConfigError("full mode needs at least one nonzero delta")
    if max(ks) > FULL_MODE_MAX_K and net.node_count >= 4:
        raise ResourceError(f"full mode with k={max(ks)} on a {net.node_count}-node network is prohibitive")
    mu, eps = cfg["mu"][0], cfg["eps"][0]
    poly = build_inversion_polynomial(mu, eps, degree_cap=cfg["degree_cap"])
    phases = PhaseCache(out.root / "phase_cache").get_or_compute(poly)
    # full-mode cost layers phase by the raw good-state amplitude, so optimize on that table
    table = amplitude_costs(net, cfg["target_node"], poly)
    opt = optimizer_config(cfg)
    rows, dist_rows = [], []
    for p in cfg["p"]:
        base = optimize(table, QAOAParams.constant(int(p)), opt, use_normalized=False)
        out.json(f"quso_full_p{p}_delta0.json", base.to_json())
        rows.append([p, 0.0, base.ratio, base.expectation, base.iterations, int(base.converged)])
        for k in sorted(set(ks)):
            pipe = FullPipeline(net, k, mu, eps, cfg["target_node"], phases=phases, poly=poly)
            probs = pipe.run(base.params).register_distribution("c")
            res = result_from_distribution(probs, table.costs, base.params, 2.0**-k, net.edge_count)
            out.json(f"quso_full_p{p}_delta{2.0**-k:g}.json", res.to_json())
            rows.append([p, 2.0**-k, res.ratio, res.expectation, 0, 1])
            for b, c, pr in res.ranking:
                dist_rows.append([p, 2.0**-k, b, c, pr])
    out.csv("quso_full_ratio.csv", ["p", "delta", "ratio", "expectation", "iterations", "converged"], rows)
    out.csv("quso_full_distribution.csv", ["p", "delta", "bitstring", "cost", "probability"], dist_rows)
    return {"rows": len(rows)}


def cmd_quso(cfg, out: Output, workers: int):
    net = load_network(cfg["_network_path"])
    if cfg["mode"] == "full":
        return _quso_full(cfg, net, out)
    table = enumerate_costs(net, cfg["target_node"])
    opt = optimizer_config(cfg)
    runs = _qaoa_runs(cfg, table, opt)
    rows = _ratio_rows(runs)
    dist_rows = []
    rng = np.random.default_rng(cfg["seed"])
    for p, base in runs.items():
        base.meta["sampled_expectation"] = expectation_cost(base.probabilities, table.normalized, "sampled",
                                                            cfg["shots"], rng)
        out.json(f"quso_p{p}_delta0.json", base.to_json())
        for b, c, pr in base.ranking:
            dist_rows.append([p, 0.0, b, c, pr])
        for d in cfg["delta"]:
            if d == 0:
                continue
            res = evaluate(table, base.params, d)
            res.meta["sampled_expectation"] = expectation_cost(res.probabilities, table.normalized, "sampled",
                                                               cfg["shots"], rng)
            out.json(f"quso_p{p}_delta{d:g}.json", res.to_json())
            rows.append([p, d, res.ratio, res.expectation, 0, 1])
            for b, c, pr in res.ranking:
                dist_rows.append([p, d, b, c, pr])
    out.csv("quso_ratio.csv", ["p", "delta", "ratio", "expectation", "iterations", "converged"], rows)
    out.csv("quso_distribution.csv", ["p", "delta", "bitstring", "cost", "probability"], dist_rows)
    return {"rows": len(rows)}


def _landscape_point(args):
    net_path, target, delta, gammas, betas = args
    table = enumerate_costs(load_network(net_path), target)
    return cost_landscape(table, gammas, betas, delta)


def cmd_landscape(cfg, out: Output, workers: int):
    opts = cfg["landscape"]
    n = int(opts.get("points", 64))
    gammas = np.linspace(opts["gamma"][0], opts["gamma"][1], n)
    betas = np.linspace(opts["beta"][0], opts["beta"][1], n)
    deltas = [0.0] + [d for d in cfg["delta"] if d != 0]
    jobs = [(cfg["_network_path"], cfg["target_node"], d, gammas, betas) for d in deltas]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            grids = list(pool.map(_landscape_point, jobs))
    else:
        grids = [_landscape_point(j) for j in jobs]
    rows = []
    for d, grid in zip(deltas, grids):
        for i, g in enumerate(gammas):
            for j, b in enumerate(betas):
                rows.append([d, float(g), float(b), float(grid[i, j])])
    out.csv("landscape.csv", ["delta", "gamma", "beta", "expectation"], rows)
    return {"deltas": deltas, "points": n}


def cmd_resources(cfg, out: Output, workers: int):
    net = load_network(cfg["_network_path"])
    opts = cfg["resources"]
    report = resource_report(net, opts.get("mu", 0.5), opts.get("eps", 0.01), opts.get("p", 1), opts.get("k", 2),
                             cfg["target_node"])
    out.json("resources.json", report)
    return {"qubits": report["qubits"]}


HANDLERS = {
    "solve": cmd_solve,
    "block-verify": cmd_block_verify,
    "qsvt-sweep": cmd_qsvt_sweep,
    "qaoa": cmd_qaoa,
    "quso": cmd_quso,
    "landscape": cmd_landscape,
    "resources": cmd_resources,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quso", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--out", default=None, help="output directory (default: config 'out' or ./results)")
    parser.add_argument("--seed", type=int, default=None, help="64-bit seed for sampled quantities")
    parser.add_argument("--workers", type=int, default=None, help="worker processes (default: logical cores)")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        cfg = load_config(args.config, {"seed": args.seed})
        out_dir = args.out or cfg.get("out") or "results"
        workers = args.workers or os.cpu_count() or 1
        summary = HANDLERS[args.command](cfg, Output(out_dir, cfg, args.command), workers)
    except ConvergenceError as exc:
        print(f"quso: convergence failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ResourceError) as exc:
        print(f"quso: {exc}", file=sys.stderr)
        return 2
    except QusoError as exc:
        print(f"quso: {exc}", file=sys.stderr)
        return 2
    print(json.dumps({"command": args.command, "out": str(out_dir), "summary": summary}, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
