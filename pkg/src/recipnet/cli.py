"""Command line entry point: analyze / simulate / embed / diagnose / verify.

All subcommands read one JSON config file (strict keys, defaults filled
for absent optional sections), write machine-readable artifacts into the
output directory, and echo the effective config next to them so any run
can be reproduced bit-exactly from its own artifact directory.

Exit codes: 0 success, 1 runtime failure, 2 config or validation error.
Failures print a single machine-parsable line to stderr of the form
``recipnet: <ErrorName>: <message>``.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io as rio
from .branching import estimate_pkl
from .embedding import verify_equivalence
from .equilibrium import build_jstar, solve_equilibrium
from .params import ParameterError, group_rates, validate_params
from .simulate import SimConfig, degree_histogram, run
from .spectral import all_spectra, order_groups
from .tails import DegreeDataset, PeelOptions, tail_report

P_THRESHOLD = 0.001


class ConfigError(ValueError):
    """Base class for configuration problems (exit code 2)."""


class ParseError(ConfigError):
    """Config file is not valid JSON or has a wrongly-typed section."""


class UnknownKey(ConfigError):
    """Config contains a key outside the schema."""


DEFAULTS = {
    "solver": {"tol": 1e-12, "max_iter": 10_000},
    "sim": {"n_steps": 100_000, "seed": 0, "snapshots": [], "emit_edges": False,
            "max_edges": 100_000_000},
    "embed": {"replicates": 100_000, "kmax": 30, "lmax": 30,
              "event_budget": 10_000_000, "seed": 0},
    "diagnose": {"hill_k_rule": "sqrt", "radius_quantile": 0.999,
                 "distance_quantile": 0.999, "bins": 50, "input": None},
    "verify": {"n": 2, "replicates": 100_000, "repetitions": 1, "seed": 0},
    "output": {"directory": "out", "formats": ["csv", "json"]},
}

MODEL_KEYS = {"alpha", "delta", "pi", "rho", "k"}


def _check_keys(section: str, given: dict, allowed) -> None:
    unknown = set(given) - set(allowed)
    if unknown:
        raise UnknownKey(f"unknown key(s) in '{section}': {sorted(unknown)}")


def load_config(path) -> dict:
    """Strict parse of the run config; fills defaults for absent sections."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ParseError("config root must be a JSON object")

    _check_keys("(root)", raw, {"model"} | set(DEFAULTS))
    if "model" not in raw:
        raise ParseError("config must contain a 'model' section")
    if not isinstance(raw["model"], dict):
        raise ParseError("'model' must be an object")
    _check_keys("model", raw["model"], MODEL_KEYS)
    for name in {"alpha", "delta", "pi", "rho"} - set(raw["model"]):
        raise ParseError(f"model section is missing '{name}'")

    cfg = {"model": dict(raw["model"])}
    for section, defaults in DEFAULTS.items():
        given = raw.get(section, {})
        if not isinstance(given, dict):
            raise ParseError(f"'{section}' must be an object")
        _check_keys(section, given, defaults)
        merged = dict(defaults)
        merged.update(given)
        cfg[section] = merged

    formats = cfg["output"]["formats"]
    if not set(formats) <= {"csv", "json"}:
        raise ParseError(f"output.formats must be within ['csv','json'], got {formats}")
    rule = cfg["diagnose"]["hill_k_rule"]
    if rule != "sqrt" and not isinstance(rule, int):
        raise ParseError("diagnose.hill_k_rule must be 'sqrt' or an integer k")
    return cfg


def apply_overrides(cfg: dict, args: argparse.Namespace) -> dict:
    cfg = copy.deepcopy(cfg)
    if args.out is not None:
        cfg["output"]["directory"] = args.out
    if args.seed is not None:
        cfg["sim"]["seed"] = args.seed
        cfg["embed"]["seed"] = args.seed
        cfg["verify"]["seed"] = args.seed
    if getattr(args, "n_steps", None) is not None:
        cfg["sim"]["n_steps"] = args.n_steps
    if getattr(args, "replicates", None) is not None:
        cfg["embed"]["replicates"] = args.replicates
        cfg["verify"]["replicates"] = args.replicates
    if getattr(args, "kmax", None) is not None:
        cfg["embed"]["kmax"] = args.kmax
        cfg["embed"]["lmax"] = args.kmax
    if getattr(args, "input", None) is not None:
        cfg["diagnose"]["input"] = args.input
    return cfg


def _model(cfg):
    m = cfg["model"]
    return validate_params(alpha=m["alpha"], delta=m["delta"], pi=m["pi"],
                           rho=m["rho"], k=m.get("k"))


def _spectra_payload(spectra, order):
    rows = []
    for s in spectra:
        rows.append({
            "group": s.group + 1,
            "lambda": s.lam,
            "lambda_prime": s.lam_prime,
            "D0": s.D0,
            "degenerate": s.degenerate,
            "u": None if s.u is None else list(s.u),
            "v": None if s.v is None else list(s.v),
            "a": s.a,
            "theta": None if s.a is None else s.a / (1.0 + s.a),
        })
    return {"groups": rows, "descending_lambda_order": [int(i) + 1 for i in order.order],
            "non_distinct": order.non_distinct}


def cmd_analyze(cfg, out_dir: Path) -> None:
    params = _model(cfg)
    rates = group_rates(params)
    contraction = build_jstar(params)
    sol = solve_equilibrium(params, tol=cfg["solver"]["tol"],
                            max_iter=cfg["solver"]["max_iter"])
    spectra = all_spectra(params, rates)
    order = order_groups(spectra)
    lam_sorted = [spectra[i].lam for i in order.order]
    report = {
        "schema": "recipnet/analyze/v1",
        "model": {"alpha": params.alpha, "gamma": params.gamma,
                  "delta": params.delta, "K": params.K,
                  "pi": list(params.pi), "rho": [list(r) for r in params.rho]},
        "rates": {"rho_row": list(rates.rho_row), "rho_col": list(rates.rho_col),
                  "rho0": rates.rho0},
        "contraction": {"norm1": contraction.norm1, "norm_fro": contraction.norm_fro,
                        "delta_min": contraction.delta_min,
                        "satisfied": contraction.satisfied},
        "equilibrium": {"x": list(sol.x), "y": list(sol.y),
                        "residual": sol.residual, "iterations": sol.iterations,
                        "damped": sol.damped, "rho_star": sol.rho_star,
                        "c_star": sol.c_star, "C_delta": sol.c_delta,
                        "H": [list(r) for r in sol.H], "lambda_H": sol.lambda_h,
                        "H_positive": sol.h_positive},
        "spectral": _spectra_payload(spectra, order),
        "regularity": {
            "alpha_gamma_positive": sol.regular.alpha_gamma_positive,
            "delta_condition": sol.regular.delta_condition,
            "max_row_rate_positive": sol.regular.max_row_rate_positive,
            "max_col_rate_positive": sol.regular.max_col_rate_positive,
            "lambda_H_lt_1": sol.regular.lambda_h_lt_1,
            "mrv_condition": sol.regular.mrv_condition,
            "hrv_condition": sol.regular.hrv_condition,
            "distinct_eigenvalues": sol.regular.distinct_eigenvalues,
            "star": sol.regular.star,
            "margins": sol.regular.margins,
        },
        "predicted": {
            "tail_indices": [sol.c_star / lam for lam in lam_sorted],
            "rays": [
                {"group": spectra[i].group + 1, "a": spectra[i].a,
                 "theta": None if spectra[i].a is None
                 else spectra[i].a / (1.0 + spectra[i].a)}
                for i in order.order if not spectra[i].degenerate
            ],
        },
    }
    rio.write_json(out_dir / "analyze.json", rio.jsonable(report))


def cmd_simulate(cfg, out_dir: Path) -> None:
    params = _model(cfg)
    sim = cfg["sim"]
    config = SimConfig(n_steps=sim["n_steps"], seed=sim["seed"],
                       snapshot_steps=tuple(sim["snapshots"]),
                       emit_edges=sim["emit_edges"], max_edges=sim["max_edges"])
    result = run(params, config)
    state = result.state
    csv_on = "csv" in cfg["output"]["formats"]
    if csv_on:
        rio.write_degree_snapshot(out_dir / "degrees.csv", state)
        if len(result.trajectory.steps):
            rio.write_trajectory(out_dir / "trajectory.csv", result.trajectory)
        if config.emit_edges:
            rio.write_edges(out_dir / "edges.csv", result.edges)
    n = state.n
    summary = {
        "schema": "recipnet/simulate/v1",
        "n_steps": n,
        "seed": sim["seed"],
        "nodes": state.n_nodes,
        "edges": state.edge_count,
        "reciprocal_edges": state.reciprocal_count,
        "edges_per_step": state.edge_count / n,
        "group_in_edges": list(state.group_in_edges),
        "group_out_edges": list(state.group_out_edges),
        "group_in_per_step": [c / n for c in state.group_in_edges],
        "group_out_per_step": [c / n for c in state.group_out_edges],
        "group_node_counts": list(state.group_node_counts),
    }
    if "json" in cfg["output"]["formats"]:
        rio.write_json(out_dir / "summary.json", rio.jsonable(summary))


def cmd_embed(cfg, out_dir: Path, workers: int) -> None:
    params = _model(cfg)
    sol = solve_equilibrium(params, tol=cfg["solver"]["tol"],
                            max_iter=cfg["solver"]["max_iter"])
    emb = cfg["embed"]
    est = estimate_pkl(params, sol, replicates=emb["replicates"],
                       kmax=emb["kmax"], lmax=emb["lmax"], seed=emb["seed"],
                       event_budget=emb["event_budget"], workers=workers)
    rio.write_pmf(out_dir, est)


def cmd_diagnose(cfg, out_dir: Path) -> None:
    src = cfg["diagnose"]["input"]
    if src is None:
        raise ParseError("diagnose requires an input degree CSV "
                         "(--input or diagnose.input)")
    ind, outd, grp = rio.read_degree_snapshot(src)
    dataset = DegreeDataset(x=ind.astype(float), y=outd.astype(float), groups=grp)
    params = _model(cfg)
    sol = solve_equilibrium(params, tol=cfg["solver"]["tol"],
                            max_iter=cfg["solver"]["max_iter"])
    spectra = all_spectra(params)
    opts = PeelOptions(radius_quantile=cfg["diagnose"]["radius_quantile"],
                       distance_quantile=cfg["diagnose"]["distance_quantile"])
    report = tail_report(dataset, params, sol, spectra, options=opts,
                         bins=cfg["diagnose"]["bins"])

    if "csv" in cfg["output"]["formats"]:
        for name, rep in (("in", report.hill_in), ("out", report.hill_out)):
            if rep is not None and rep.k_sweep is not None:
                with open(out_dir / f"hill_sweep_{name}.csv", "w", newline="") as fh:
                    fh.write("k,index_estimate\n")
                    fh.writelines(f"{int(k)},{float(v)!r}\n" for k, v in rep.k_sweep)
        with open(out_dir / "angular_hist.csv", "w", newline="") as fh:
            fh.write("bin_left,bin_right,count\n")
            for i, c in enumerate(report.angular_counts):
                fh.write(f"{float(report.angular_bins[i])!r},"
                         f"{float(report.angular_bins[i + 1])!r},{int(c)}\n")

    payload = {
        "schema": "recipnet/diagnose/v1",
        "n": dataset.n,
        "hill_in": None if report.hill_in is None else {
            "k": report.hill_in.k, "index": report.hill_in.index_estimate,
            "se": report.hill_in.se},
        "hill_out": None if report.hill_out is None else {
            "k": report.hill_out.k, "index": report.hill_out.index_estimate,
            "se": report.hill_out.se},
        "marginal_skipped": report.marginal_skip,
        "radius_threshold": report.radius_threshold,
        "predicted_first_index": report.predicted_first_index,
        "predicted_rays": [
            {"group": g + 1, "lambda": lam, "a": a, "theta": th}
            for (g, lam, a, th) in report.predicted_rays
        ],
        "hrv": None,
        "hrv_skip_reason": report.hrv_skip_reason,
    }
    if report.hrv is not None:
        h = report.hrv
        payload["hrv"] = {
            "a1_used": h.a1_used,
            "removal_rule": h.removal_rule,
            "first_index": h.first_index,
            "second_index": h.second_index,
            "first_ray_theta": h.first_ray_estimate,
            "second_ray_theta": h.second_ray_estimate,
            "predicted": list(h.predicted),
            "n_removed": h.n_removed,
            "n_peeled": h.n_peeled,
            "degraded": list(h.degraded),
            "rays": [
                {"rank": r.rank, "group": r.group + 1,
                 "index_estimate": r.index_estimate,
                 "index_predicted": r.index_predicted,
                 "theta_median": r.theta_median,
                 "theta_predicted": r.theta_predicted,
                 "n_selected": r.n_selected}
                for r in h.rays
            ],
        }
    if "json" in cfg["output"]["formats"]:
        rio.write_json(out_dir / "report.json", rio.jsonable(payload))


def cmd_verify(cfg, out_dir: Path) -> None:
    params = _model(cfg)
    ver = cfg["verify"]
    runs = []
    passes = 0
    total = 0
    for n in range(1, min(int(ver["n"]), 3) + 1):
        for rep in range(int(ver["repetitions"])):
            report = verify_equivalence(params, n=n, replicates=int(ver["replicates"]),
                                        seed=int(ver["seed"]) + rep)
            ok = report.p_value > P_THRESHOLD and not report.impossible_support
            passes += ok
            total += 1
            runs.append({
                "n": report.n, "seed": int(ver["seed"]) + rep,
                "replicates": report.replicates,
                "statistic": report.statistic, "df": report.df,
                "p_value": report.p_value, "max_abs_dev": report.max_abs_dev,
                "cells": report.n_cells, "merged": report.n_merged,
                "impossible_support": report.impossible_support,
                "pass": bool(ok),
            })
    payload = {
        "schema": "recipnet/verify/v1",
        "p_threshold": P_THRESHOLD,
        "passes": passes,
        "total": total,
        "runs": runs,
    }
    rio.write_json(out_dir / "verify.json", rio.jsonable(payload))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recipnet",
        description="Reciprocal preferential attachment: simulation and analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("analyze", "solve the equilibrium and report spectra/regularity"),
        ("simulate", "grow a graph and write degree/trajectory/edge tables"),
        ("embed", "Monte-Carlo the limiting joint degree pmf"),
        ("diagnose", "tail diagnostics for a degree CSV"),
        ("verify", "exact-vs-chain equivalence check"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="path to JSON run config")
        p.add_argument("--seed", type=int, default=None,
                       help="override the seed of the invoked workflow")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker cap for replicate fan-out")
        p.add_argument("--out", default=None, help="override output directory")
        if name == "simulate":
            p.add_argument("--n-steps", dest="n_steps", type=int, default=None)
        if name in ("embed", "verify"):
            p.add_argument("--replicates", type=int, default=None)
        if name == "embed":
            p.add_argument("--kmax", type=int, default=None)
        if name == "diagnose":
            p.add_argument("--input", default=None, help="degree snapshot CSV")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(cfg, args)
        out_dir = Path(cfg["output"]["directory"])
        out_dir.mkdir(parents=True, exist_ok=True)
        rio.write_json(out_dir / "config.json", rio.jsonable(cfg))
        if args.command == "analyze":
            cmd_analyze(cfg, out_dir)
        elif args.command == "simulate":
            cmd_simulate(cfg, out_dir)
        elif args.command == "embed":
            cmd_embed(cfg, out_dir, workers=max(1, args.threads))
        elif args.command == "diagnose":
            cmd_diagnose(cfg, out_dir)
        elif args.command == "verify":
            cmd_verify(cfg, out_dir)
    except (ConfigError, ParameterError) as exc:
        print(f"recipnet: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - single boundary for exit code 1
        print(f"recipnet: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(str(out_dir))
    return 0


if __name__ == "__main__":
    sys.exit(main())
