"""Command-line front end: configured experiments with diff-friendly outputs.

Every command reads one JSON config, writes `summary.json` plus per-table
CSV files into the output directory (write-temp-then-rename), and exits 0.
Validation problems exit 1 and numerical failures exit 2, both with a
machine-readable error JSON on stdout.  All numeric output is
deterministic given the config, including seeds; extended-precision
numbers are serialized as decimal strings.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import edgelab, potentials, sampler
from .equilibrium import (DensityPositivityError, SupportBracketError,
                          density, edge_constants, effective_potential,
                          solve_support)
from .fredholm import RefinementError, finite_n_hole, nystrom_det, tracy_widom
from .opuc import (MomentConvergenceError, PrecisionExhaustedError, WeightSpec,
                   build_vseq, _mpf_str, verblunsky_asymptotic_report)
from .quadrature import QuadratureError

COMMANDS = ("equilibrium", "verblunsky", "kernel", "edge-study", "fredholm",
            "sample")

NUMERICAL_ERRORS = (PrecisionExhaustedError, MomentConvergenceError,
                    QuadratureError, SupportBracketError,
                    DensityPositivityError, RefinementError)


class ConfigError(ValueError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


def _fail(code, kind, message, field=None):
    payload = {"error": kind, "message": message}
    if field:
        payload["field"] = field
    print(json.dumps(payload, sort_keys=True))
    return code


def _require(cfg, field, caster=None):
    if field not in cfg:
        raise ConfigError(f"missing required config field '{field}'", field)
    val = cfg[field]
    if caster is not None:
        try:
            val = caster(val)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for '{field}': {exc}", field)
    return val


def _load_potential(cfg):
    spec = _require(cfg, "potential")
    if not isinstance(spec, dict):
        raise ConfigError("'potential' must be an object", "potential")
    try:
        return potentials.from_config(spec)
    except ValueError as exc:
        raise ConfigError(str(exc), "potential")


def _atomic_json(path, payload):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _atomic_csv(path, header, rows):
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        wr.writerows(rows)
    os.replace(tmp, path)


def _fmt(x):
    return f"{float(x):.17g}"


# -- commands ------------------------------------------------------------------

def cmd_equilibrium(cfg, out):
    pot = _load_potential(cfg)
    tol = float(cfg.get("tol", 1e-10))
    eq = solve_support(pot, tol=tol)
    ec = edge_constants(eq, pot)
    grid = np.linspace(-eq.theta, eq.theta, int(cfg.get("density_points", 257)))
    rho = density(pot, eq.theta, grid)
    _atomic_csv(os.path.join(out, "density.csv"), ["lambda", "rho"],
                [(_fmt(l), _fmt(r)) for l, r in zip(grid, rho)])
    u_vals = {str(x): effective_potential(eq, pot, x)
              for x in (0.0, eq.theta / 2, eq.theta)}
    _atomic_json(os.path.join(out, "summary.json"), {
        "theta": eq.theta,
        "normalization_residual": eq.normalization_residual,
        "P_at_edge": ec.P_at_edge, "p_theta": ec.p_theta,
        "gamma": ec.gamma, "a": ec.a, "b": ec.b,
        "effective_potential": u_vals,
    })
    return 0


def cmd_verblunsky(cfg, out, precision_override, cache_dir):
    pot = _load_potential(cfg)
    n = _require(cfg, "n", int)
    if n < 4:
        raise ConfigError("n must be at least 4", "n")
    m = int(cfg.get("m", 0)) or edgelab.truncation_size(n) + 1
    vseq = build_vseq(pot, n, m, precision_bits=precision_override,
                      directory=cache_dir)
    eq = solve_support(pot)
    ec = edge_constants(eq, pot)
    rep = verblunsky_asymptotic_report(vseq, ec, eq.theta, n)
    _atomic_csv(os.path.join(out, "alphas.csv"), ["k", "alpha", "rho"],
                [(k, _fmt(a), _fmt(r)) for k, (a, r) in
                 enumerate(zip(vseq.alphas_float(), vseq.rhos_float()))])
    _atomic_csv(os.path.join(out, "edge_window.csv"),
                ["k", "alpha", "predicted", "deviation"],
                [(r["k"], _fmt(r["alpha"]), _fmt(r["predicted"]),
                  _fmt(r["deviation"])) for r in rep.rows])
    _atomic_json(os.path.join(out, "summary.json"), {
        "n": n, "m": len(vseq), "precision_bits": vseq.precision_bits,
        "c0": _mpf_str(vseq.c0, vseq.precision_bits),
        "edge_sign": rep.sign,
        "max_alpha_deviation": float(np.max(np.abs(rep.alpha_dev))),
    })
    return 0


def cmd_kernel(cfg, out, precision_override, cache_dir):
    pot = _load_potential(cfg)
    n = _require(cfg, "n", int)
    if n < 4:
        raise ConfigError("n must be at least 4", "n")
    grid_cfg = cfg.get("grid", {"lo": -2.0, "hi": 2.0, "count": 9})
    grid = np.linspace(float(grid_cfg["lo"]), float(grid_cfg["hi"]),
                       int(grid_cfg["count"]))
    eq = solve_support(pot)
    ec = edge_constants(eq, pot)
    ke = edgelab.make_kernel_evaluator(pot, n, precision_override, cache_dir)
    vals = edgelab.rescaled_kernel_grid(ke, eq, grid, n)
    rows = []
    for i, x in enumerate(grid):
        for j, y in enumerate(grid):
            rows.append((_fmt(x), _fmt(y), _fmt(vals[i, j]),
                         _fmt(edgelab.limit_kernel(ec, x, y))))
    _atomic_csv(os.path.join(out, "kernel.csv"),
                ["x", "y", "kn_abs", "limit"], rows)
    _atomic_json(os.path.join(out, "summary.json"), {
        "n": n, "grid": [float(g) for g in grid],
        "origin_value": float(edgelab.rescaled_kernel(ke, eq, 0.0, 0.0, n)),
        "origin_limit": float(edgelab.limit_kernel(ec, 0.0, 0.0)),
    })
    return 0


def cmd_edge_study(cfg, out, precision_override, cache_dir):
    pot = _load_potential(cfg)
    n_list = _require(cfg, "n_list", list)
    n_list = [int(n) for n in n_list]
    if any(n < 4 for n in n_list):
        raise ConfigError("every n must be at least 4", "n_list")
    grid_cfg = cfg.get("grid", {"lo": -2.0, "hi": 2.0, "count": 9})
    grid = np.linspace(float(grid_cfg["lo"]), float(grid_cfg["hi"]),
                       int(grid_cfg["count"]))
    table = edgelab.convergence_study(pot, n_list, grid,
                                      precision_bits=precision_override,
                                      cache_dir=cache_dir)
    table.write_csv(os.path.join(out, "convergence.csv"))
    table.write_summary(os.path.join(out, "summary.json"))
    return 0


def cmd_fredholm(cfg, out, precision_override, cache_dir):
    mode = cfg.get("mode", "tracy-widom")
    order = int(cfg.get("order", 48))
    if mode == "tracy-widom":
        s = _require(cfg, "s", float)
        gp = tracy_widom(s, tail=float(cfg.get("tail", 12.0)), order=order)
        payload = {"mode": mode, "s": s, "order": gp.order,
                   "value": gp.value, "refinement_delta": gp.refinement_delta}
    elif mode == "finite-n":
        pot = _load_potential(cfg)
        n = _require(cfg, "n", int)
        if n < 4:
            raise ConfigError("n must be at least 4", "n")
        delta = _require(cfg, "delta", list)
        intervals = [(float(a), float(b)) for a, b in delta]
        eq = solve_support(pot)
        ec = edge_constants(eq, pot)
        ke = edgelab.make_kernel_evaluator(pot, n, precision_override, cache_dir)
        gp = finite_n_hole(ke, eq, ec, intervals, n, order=order)
        payload = {"mode": mode, "n": n, "delta": delta, "order": gp.order,
                   "value": gp.value, "refinement_delta": gp.refinement_delta}
    else:
        raise ConfigError("mode must be 'tracy-widom' or 'finite-n'", "mode")
    _atomic_json(os.path.join(out, "summary.json"), payload)
    return 0


def cmd_sample(cfg, out, seed_override):
    pot = _load_potential(cfg)
    n = _require(cfg, "n", int)
    if n < 4:
        raise ConfigError("n must be at least 4", "n")
    steps = _require(cfg, "steps", int)
    burn_in = int(cfg.get("burn_in", max(500, steps // 10)))
    seed = seed_override if seed_override is not None else int(cfg.get("seed", 1))
    chain = sampler.ChainConfig(
        pot=pot, n=n, steps=steps, burn_in=burn_in, seed=seed,
        proposal_width=float(cfg.get("proposal_width", 0.5)))
    sample = sampler.metropolis_run(chain)
    eq = solve_support(pot)
    ec = edge_constants(eq, pot)
    ncm = sampler.ncm_compare(sample, eq, bins=int(cfg.get("bins", 40)))
    fluct = sampler.edge_fluctuation(sample, eq, ec)
    rows = [(i,) + tuple(_fmt(x) for x in row)
            for i, row in enumerate(sample.configs)]
    _atomic_csv(os.path.join(out, "samples.csv"),
                ["sweep"] + [f"lambda_{j}" for j in range(n)], rows)
    ecdf_grid = np.arange(-4.5, 2.51, 0.25)
    _atomic_json(os.path.join(out, "summary.json"), {
        "n": n, "seed": seed, "kept": int(sample.configs.shape[0]),
        "acceptance_rate": sample.acceptance_rate,
        "proposal_width": sample.width,
        "ncm_sup_relative_deviation": ncm["sup_relative_deviation"],
        "ncm_outside_mass": ncm["outside_mass"],
        "histogram": [{k: b[k] for k in ("lo", "hi", "empirical", "expected",
                                         "interior")} for b in ncm["bins"]],
        "edge_cdf": {"s": [float(s) for s in ecdf_grid],
                     "value": [float(fluct["ecdf"](s)) for s in ecdf_grid]},
        "edge_median": fluct["median"],
    })
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="circedge",
        description="edge statistics of unitary matrix models")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--precision-bits", type=int, default=0)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        return _fail(1, "config", f"cannot read config: {exc}")

    out = args.out or os.path.join(os.getcwd(), f"circedge-{args.command}")
    os.makedirs(out, exist_ok=True)
    cache_dir = os.environ.get("CIRCEDGE_CACHE_DIR")

    try:
        if args.command == "equilibrium":
            return cmd_equilibrium(cfg, out)
        if args.command == "verblunsky":
            return cmd_verblunsky(cfg, out, args.precision_bits, cache_dir)
        if args.command == "kernel":
            return cmd_kernel(cfg, out, args.precision_bits, cache_dir)
        if args.command == "edge-study":
            return cmd_edge_study(cfg, out, args.precision_bits, cache_dir)
        if args.command == "fredholm":
            return cmd_fredholm(cfg, out, args.precision_bits, cache_dir)
        if args.command == "sample":
            return cmd_sample(cfg, out, args.seed)
    except ConfigError as exc:
        return _fail(1, "validation", str(exc), exc.field)
    except NUMERICAL_ERRORS as exc:
        return _fail(2, "numerical", f"{type(exc).__name__}: {exc}")
    return _fail(1, "validation", f"unknown command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
