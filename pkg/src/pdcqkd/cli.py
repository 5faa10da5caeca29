"""Command-line front end: ``pdcqkd {rate,sweep,montecarlo,attack,cutoff}``.

Exit codes: 0 success, 1 validation error, 2 numerical failure,
3 Monte Carlo z-score above threshold.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import kernels
from .bounds import key_rate_triggered
from .channel import aggregate, observables
from .config import RunConfig, load_config
from .errors import (
    BracketError,
    DegenerateObservablesError,
    TruncationError,
    UnboundedOddsError,
    ValidationError,
    ZeroRateError,
)
from .montecarlo import (
    SimConfig,
    analytic_summary,
    matched_pns_attack,
    pns_attack_vector,
    simulate,
)
from .optimize import evaluate, find_cutoff, find_strategy_switch, optimize_mu, run_sweep
from .report import json_report, key_value_csv, row_to_dict, sweep_csv, table_csv
from .source import source_stats

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_STATISTICAL = 0, 1, 2, 3

FLAG_KEYS = {"mu": "mu", "length_km": "length_km", "seed": "seed", "out": "out", "format": "format"}


def _emit(cfg: RunConfig, command: str, pairs: list, results: dict, meta: dict | None = None) -> str:
    if cfg["format"] == "json":
        return json_report(command, cfg, results, meta)
    return key_value_csv(pairs, cfg["precision"])


def _rate_point(cfg: RunConfig):
    length = cfg["length_km"]
    spec = cfg.sweep_spec(distances=())
    flag = "ok"
    if spec.protocol == "ideal_single_photon":
        obs, res = evaluate(spec, length)
        mu = None
    elif spec.optimize_mu:
        try:
            opt = optimize_mu(length, spec)
        except ZeroRateError as exc:
            opt, flag = exc.best, "zero_rate"
        mu, obs, res = opt.mu, opt.summary, opt.result
    else:
        mu = spec.source.mu
        obs, res = evaluate(spec, length, mu)
    return spec, mu, obs, res, flag


def cmd_rate(cfg: RunConfig):
    cfg.require("length_km")
    spec, mu, obs, res, flag = _rate_point(cfg)
    ch = spec.channel.with_length(cfg["length_km"])
    results = {
        "protocol": spec.protocol,
        "l_km": cfg["length_km"],
        "mu": mu,
        "eta_c": ch.eta_c,
        "eta": ch.eta,
    }
    if obs is not None:
        results.update(obs.as_dict())
    if spec.protocol == "efficient_pdc":
        src = source_stats(spec.source.with_mu(mu))
        results.update(r0=src.r(0), r1=src.r(1), r2=src.r(2))
    results.update(
        R_t=res.R_t,
        R_both=res.R_both,
        R_final=res.R_final,
        selected=res.selected,
        x_star_t=res.x_star_t,
        x_star_both=res.x_star_both,
        xi_at_min=res.xi_at_min,
        eps_at_min=res.eps_at_min,
        flag=flag,
    )
    for strategy, diag in sorted(res.diagnostics.items()):
        for term in ("ec_cost", "vacuum_gain", "single_gain", "x_hi"):
            results[f"{strategy}.{term}"] = diag[term]
    meta = {"mu_rel_tol": spec.mu_rel_tol, "mu_grid": spec.mu_grid, "x_grid": spec.minimizer.grid_points}
    return _emit(cfg, "rate", list(results.items()), results, meta), EXIT_OK


def cmd_sweep(cfg: RunConfig):
    spec = cfg.sweep_spec()
    rows = run_sweep(spec)
    if cfg["format"] == "json":
        meta = {
            "mu_rel_tol": spec.mu_rel_tol,
            "mu_grid": spec.mu_grid,
            "mu_interval": [spec.mu_lo, spec.mu_hi],
            "x_grid": spec.minimizer.grid_points,
            "x_rel_tol": spec.minimizer.rel_tol,
        }
        return json_report("sweep", cfg, {"rows": [row_to_dict(r) for r in rows]}, meta), EXIT_OK
    return sweep_csv(rows, cfg["precision"]), EXIT_OK


def _sim_setup(cfg: RunConfig):
    cfg.require("length_km")
    if not cfg.needs_source():
        raise ValidationError("montecarlo needs a PDC source; protocol ideal_single_photon has none")
    length = cfg["length_km"]
    mu = cfg["mu"]
    if mu == "optimize":
        spec = cfg.sweep_spec(distances=())
        try:
            mu = optimize_mu(length, spec).mu
        except ZeroRateError as exc:
            mu = exc.best.mu
    return cfg.source(mu), cfg.channel(length)


def _mc_report(cfg, command, sim_cfg, analytic, extra_pairs, extra_results):
    result = simulate(sim_cfg)
    emp = result.empirical()
    z = emp.z_scores(analytic)
    threshold = cfg["z_threshold"]
    worst = max(abs(v) for v in z.values())
    status = EXIT_STATISTICAL if not worst <= threshold else EXIT_OK
    rows = [(name, getattr(emp, name), getattr(emp, "se_" + name), getattr(analytic, name), z[name])
            for name in emp.FIELDS]
    results = {
        "seed": sim_cfg.seed,
        "pulses": sim_cfg.pulses,
        "rng": result.rng_algorithm,
        "backend": result.backend,
        "mu": sim_cfg.source.mu,
        "l_km": sim_cfg.channel.length_km,
        "cells": result.cells(),
        "comparison": [dict(zip(("quantity", "empirical", "std_error", "analytic", "z"), r)) for r in rows],
        "max_abs_z": worst,
        "z_threshold": threshold,
        "pass": status == EXIT_OK,
        **extra_results,
    }
    if cfg["format"] == "json":
        return json_report(command, cfg, results), status
    head = [("seed", sim_cfg.seed), ("pulses", sim_cfg.pulses), ("rng", result.rng_algorithm),
            ("backend", result.backend), ("mu", sim_cfg.source.mu), ("l_km", sim_cfg.channel.length_km)]
    head += list(result.cells().items()) + extra_pairs
    head += [("max_abs_z", worst), ("z_threshold", threshold), ("pass", status == EXIT_OK)]
    p = cfg["precision"]
    text = key_value_csv(head, p) + "\n" + table_csv(("quantity", "empirical", "std_error", "analytic", "z"), rows, p)
    return text, status


def _sim_config(cfg, source, channel, attack=None):
    return SimConfig(cfg["pulses"], cfg["seed"], source, channel, attack, cfg["batch_size"], cfg["workers"])


def cmd_montecarlo(cfg: RunConfig):
    source, channel = _sim_setup(cfg)
    sim_cfg = _sim_config(cfg, source, channel)
    return _mc_report(cfg, "montecarlo", sim_cfg, analytic_summary(sim_cfg), [], {})


def cmd_attack(cfg: RunConfig):
    source, channel = _sim_setup(cfg)
    src = source_stats(source)
    bf = cfg["attack.block_fraction"]
    if cfg["attack.match_q_t"]:
        attack = matched_pns_attack(src, channel, bf)
    else:
        attack = pns_attack_vector(src, channel, bf)
    sim_cfg = _sim_config(cfg, source, channel, attack)
    analytic = aggregate(src, *attack.padded(src.n_max + 1))
    honest = observables(src, channel)
    r_honest_key = key_rate_triggered(honest, src, cfg.constants()).rate
    r_attack_key = key_rate_triggered(analytic, src, cfg.constants()).rate
    extra = {
        "attack": attack.description,
        "r_observed_analytic": analytic.r,
        "r_honest": honest.r,
        "r1": src.r(1),
        "r2": src.r(2),
        "R_t_honest": r_honest_key,
        "R_t_attacked": r_attack_key,
    }
    return _mc_report(cfg, "attack", sim_cfg, analytic, list(extra.items()), extra)


def cmd_cutoff(cfg: RunConfig):
    spec = cfg.sweep_spec(distances=())
    bracket = (cfg["cutoff_lo"], cfg["cutoff_hi"])
    results = {"protocol": spec.protocol, "cutoff_km": find_cutoff(spec, bracket, cfg["resolution"])}
    if cfg["find_switch"]:
        results["switch_km"] = find_strategy_switch(spec, (cfg["cutoff_lo"], results["cutoff_km"]), cfg["resolution"])
    results["resolution_km"] = cfg["resolution"]
    return _emit(cfg, "cutoff", list(results.items()), results), EXIT_OK


COMMANDS = {
    "rate": cmd_rate,
    "sweep": cmd_sweep,
    "montecarlo": cmd_montecarlo,
    "attack": cmd_attack,
    "cutoff": cmd_cutoff,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdcqkd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "rate": "key rate and observables at one (mu, l) point",
        "sweep": "key rate versus distance table",
        "montecarlo": "pulse-level simulation compared with the analytic observables",
        "attack": "montecarlo under a photon-number-splitting attack",
        "cutoff": "distance where the key rate vanishes",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("config", nargs="?", help="key = value configuration file")
        p.add_argument("--mu", help="source strength or 'optimize'")
        p.add_argument("--length-km", dest="length_km")
        p.add_argument("--seed")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any configuration key")
    return parser


def run(argv=None):
    """Execute the CLI; returns ``(exit_code, output_text, out_path)``."""
    args = build_parser().parse_args(argv)
    try:
        file_values = load_config(args.config) if args.config else {}
        overrides = {}
        for item in args.set:
            if "=" not in item:
                raise ValidationError(f"--set expects KEY=VALUE, got {item!r}")
            key, value = item.split("=", 1)
            overrides[key.strip()] = value.strip()
        for attr, key in FLAG_KEYS.items():
            value = getattr(args, attr)
            if value is not None:
                overrides[key] = value
        cfg = RunConfig.build(file_values, overrides)
        kernels.set_backend(cfg["backend"])
        text, code = COMMANDS[args.command](cfg)
        out = cfg.get("out")
        if out:
            Path(out).write_text(text, encoding="utf-8")
    except (ValidationError, OSError) as exc:
        return EXIT_VALIDATION, f"error: {exc}\n", None
    except (DegenerateObservablesError, TruncationError, UnboundedOddsError, BracketError, ZeroRateError) as exc:
        return EXIT_NUMERICAL, f"numerical failure: {exc}\n", None
    return code, text, out


def main(argv=None):
    code, text, out = run(argv)
    if code in (EXIT_VALIDATION, EXIT_NUMERICAL):
        sys.stderr.write(text)
    elif not out:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
