"""Experiment driver.

Subcommands: ``analyze`` (mean-field solution plus stationary law),
``simulate`` (seeded Monte Carlo replications), ``compare`` (theory vs
simulation side by side) and ``sweep`` (one compare row per sweep
point). Reports are JSON/CSV with full round-trip float precision,
written atomically; compare and sweep also render figures next to the
delimited output.

Exit codes: 0 success (including unstable or diverged findings),
2 config error, 3 numeric failure, 4 IO failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import markov, meanfield, plots
from .config import ExperimentConfig, load_config
from .errors import ConfigError, NumericError
from .metrics import compare_distributions
from .models import mean_arrival_bits
from .sim import GcfsPolicy, SimSummary, ThresholdPolicy, simulate

OUT_DIR_ENV = "GCFS_OUT_DIR"
WORKERS_ENV = "GCFS_WORKERS"


# ---------------------------------------------------------------------------
# atomic output helpers

def _write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_json(path: Path, payload: dict) -> None:
    _write_text(path, json.dumps(payload, indent=2) + "\n")


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))  # plain-float repr round-trips exactly
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_csv_cell(cell) for cell in row) for row in rows)
    _write_text(path, "\n".join(lines) + "\n")


def _num(value):
    """JSON-safe number: non-finite floats become null."""
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


# ---------------------------------------------------------------------------
# report building blocks

def _config_echo(config: ExperimentConfig) -> dict:
    return {
        "n_users": config.system.n_users,
        "bandwidth": config.system.bandwidth,
        "slot_duration": config.system.slot_duration,
        "power": config.system.power,
        "noise_power": config.system.noise_power,
        "snr": config.system.snr,
        "symbols_per_slot": config.system.symbols_per_slot,
        "channel": config.channel_label,
        "theta": list(config.traffic.theta),
        "packet_bits": config.traffic.packet_bits,
        "arrival_bits_per_slot": mean_arrival_bits(config.traffic),
        "policy": config.policy_kind,
        "policy_gain": config.policy_gain,
        "horizon": config.horizon,
        "warmup": config.warmup,
        "seeds": list(config.seeds),
    }


def _meanfield_dict(solution: meanfield.MeanFieldSolution, eps_solve: float) -> dict:
    return {
        "h_th": _num(solution.threshold_gain),
        "p": _num(solution.service_prob),
        "D": _num(solution.delay_slots),
        "mean_queue_bits": _num(solution.mean_queue_bits),
        "status": solution.status.value,
        "residual": _num(solution.residual),
        "phi_sup": _num(solution.phi_supremum),
        "deficit": _num(solution.deficit),
        "eps_solve": eps_solve,
    }


def _solve(config: ExperimentConfig) -> tuple[meanfield.MeanFieldSolution, float]:
    target = config.system.n_users * mean_arrival_bits(config.traffic)
    eps = config.eps_solve if config.eps_solve is not None else 1e-6 * target
    solution = meanfield.solve_threshold(config.channel, config.traffic, config.system, eps_solve=eps)
    return solution, eps


def _stationary(config: ExperimentConfig, service_prob: float):
    """Best available stationary solver for the configured burst size."""
    traffic = config.traffic
    if traffic.max_packets == 1:
        return markov.steady_state_closed_form_A1(traffic.theta[1], service_prob), "closed_form"
    params = markov.ChainParams(theta=traffic.theta, service_prob=service_prob)
    return markov.steady_state_roots(params), "roots"


def _policy_for(config: ExperimentConfig, solution: meanfield.MeanFieldSolution):
    if config.policy_kind == "gcfs":
        return GcfsPolicy()
    if config.policy_gain is not None:
        return ThresholdPolicy(threshold_gain=config.policy_gain)
    return ThresholdPolicy(threshold_gain=solution.threshold_gain)


def _simulate_seed(args) -> SimSummary:
    config, policy, seed = args
    return simulate(
        config.channel, config.traffic, config.system, policy,
        horizon=config.horizon, warmup=config.warmup, seed=seed,
    )


def _run_seeds(config: ExperimentConfig, policy, workers: int) -> list[SimSummary]:
    jobs = [(config, policy, seed) for seed in config.seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_simulate_seed, jobs))
    return [_simulate_seed(job) for job in jobs]


def _pool_summaries(summaries: list[SimSummary]) -> dict:
    width = max(len(s.packet_histogram) for s in summaries)
    hist = np.zeros(width)
    for s in summaries:
        hist[: len(s.packet_histogram)] += s.packet_histogram
    hist /= len(summaries)
    return {
        "kind": "simulation_pooled",
        "seeds": [s.seed for s in summaries],
        "n_runs": len(summaries),
        "policy": summaries[0].policy_label,
        "threshold_gain": summaries[0].threshold_gain,
        "mean_queue_bits": float(np.mean([s.mean_queue_bits for s in summaries])),
        "mean_delay_slots": float(np.mean([s.mean_delay_slots for s in summaries])),
        "p_hat": float(np.mean([s.p_hat for s in summaries])),
        "diverged": any(s.diverged for s in summaries),
        "packet_histogram": [float(x) for x in hist],
        "per_seed": [
            {
                "seed": s.seed,
                "mean_queue_bits": s.mean_queue_bits,
                "mean_delay_slots": s.mean_delay_slots,
                "p_hat": s.p_hat,
                "diverged": s.diverged,
            }
            for s in summaries
        ],
    }


# ---------------------------------------------------------------------------
# commands

def cmd_analyze(config: ExperimentConfig, out_dir: Path, workers: int) -> None:
    solution, eps = _solve(config)
    report = {
        "kind": "analysis",
        "config": _config_echo(config),
        "meanfield": _meanfield_dict(solution, eps),
        "stationary": None,
    }
    if solution.service_prob is not None:
        dist, solver = _stationary(config, solution.service_prob)
        report["stationary"] = {
            "solver": solver,
            "truncation": dist.truncation,
            "tail_bound": dist.tail_bound,
        }
        tmp = out_dir / "stationary.csv.tmp"
        dist.to_csv(tmp)
        os.replace(tmp, out_dir / "stationary.csv")
    _write_json(out_dir / "analysis.json", report)


def cmd_simulate(config: ExperimentConfig, out_dir: Path, workers: int) -> dict:
    if config.policy_kind == "threshold" and config.policy_gain is None:
        solution, _ = _solve(config)
        policy = _policy_for(config, solution)
    else:
        policy = _policy_for(config, solution=None)
    summaries = _run_seeds(config, policy, workers)
    for summary in summaries:
        _write_json(out_dir / f"sim_seed{summary.seed}.json", summary.to_json_dict())
        tmp = out_dir / f"trace_seed{summary.seed}.csv.tmp"
        summary.trace.write_csv(tmp)
        os.replace(tmp, out_dir / f"trace_seed{summary.seed}.csv")
    pooled = _pool_summaries(summaries)
    _write_json(out_dir / "sim_pooled.json", pooled)
    return pooled


def cmd_compare(config: ExperimentConfig, out_dir: Path, workers: int) -> dict:
    solution, eps = _solve(config)
    policy = _policy_for(config, solution)
    summaries = _run_seeds(config, policy, workers)
    pooled = _pool_summaries(summaries)

    d_theory = solution.delay_slots
    d_sim = pooled["mean_delay_slots"]
    rel_error = None
    if d_theory is not None:
        denom = max(abs(d_theory), 1e-12)
        rel_error = abs(d_sim - d_theory) / denom

    distribution = None
    dist = solver = None
    if solution.service_prob is not None:
        dist, solver = _stationary(config, solution.service_prob)
        comparison = compare_distributions(np.asarray(pooled["packet_histogram"]), dist)
        distribution = {
            "tv_distance": comparison.tv_distance,
            "ks_like_sup": comparison.ks_like_sup,
            "support_truncation": comparison.support_truncation,
            "solver": solver,
        }

    report = {
        "kind": "compare",
        "config": _config_echo(config),
        "theory": _meanfield_dict(solution, eps),
        "simulation": pooled,
        "delay": {"D_theory": _num(d_theory), "D_sim": _num(d_sim), "relative_error": _num(rel_error)},
        "distribution": distribution,
    }
    _write_json(out_dir / "compare.json", report)

    _write_csv(
        out_dir / "compare.csv",
        ["D_theory", "D_sim", "relative_error", "p", "p_hat", "h_th", "tv_distance", "status"],
        [[
            _num(d_theory), _num(d_sim), _num(rel_error), _num(solution.service_prob),
            pooled["p_hat"], _num(solution.threshold_gain),
            None if distribution is None else distribution["tv_distance"],
            solution.status.value,
        ]],
    )

    hist = np.asarray(pooled["packet_histogram"])
    theory_pi = dist.pi if dist is not None else np.zeros(0)
    width = max(len(hist), len(theory_pi))
    rows = [
        [state,
         float(theory_pi[state]) if state < len(theory_pi) else 0.0,
         float(hist[state]) if state < len(hist) else 0.0]
        for state in range(width)
    ]
    _write_csv(out_dir / "distribution.csv", ["state", "pi_theory", "p_empirical"], rows)

    if config.figures:
        tmp = out_dir / "distribution.png.tmp"
        plots.save_distribution_figure(theory_pi, hist, tmp)
        os.replace(tmp, out_dir / "distribution.png")
    return report


def _sweep_point(args) -> dict:
    config, value = args
    point = config.with_power(value) if config.sweep.axis == "power" else config.with_theta1(value)
    solution, _ = _solve(point)
    policy = _policy_for(point, solution)
    summaries = _run_seeds(point, policy, workers=1)
    pooled = _pool_summaries(summaries)
    tv = None
    if solution.service_prob is not None:
        dist, _ = _stationary(point, solution.service_prob)
        tv = compare_distributions(np.asarray(pooled["packet_histogram"]), dist).tv_distance
    theta1 = point.traffic.theta[1] if point.traffic.max_packets >= 1 else 0.0
    return {
        "axis_value": float(value),
        "theta1": float(theta1),
        "D_theory": _num(solution.delay_slots),
        "D_sim": _num(pooled["mean_delay_slots"]),
        "p": _num(solution.service_prob),
        "h_th": _num(solution.threshold_gain),
        "tv_distance": tv,
        "status": solution.status.value,
        "deficit": _num(solution.deficit),
    }


def cmd_sweep(config: ExperimentConfig, out_dir: Path, workers: int) -> list[dict]:
    if config.sweep is None:
        raise ConfigError("sweep: the sweep command needs a sweep section in the config")
    jobs = [(config, value) for value in config.sweep.values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(job) for job in jobs]

    header = ["axis_value", "theta1", "D_theory", "D_sim", "p", "h_th", "tv_distance", "status", "deficit"]
    _write_csv(out_dir / "sweep.csv", header, [[row[k] for k in header] for row in rows])
    if config.figures:
        tmp = out_dir / f"delay_vs_{config.sweep.axis}.png.tmp"
        plots.save_delay_figure(rows, config.sweep.axis, tmp)
        os.replace(tmp, out_dir / f"delay_vs_{config.sweep.axis}.png")
    return rows


# ---------------------------------------------------------------------------
# argument handling

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gcfs",
        description="Good-channel-first downlink scheduling: mean-field analysis vs simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("analyze", "solve the balance equation and export the stationary law"),
        ("simulate", "run seeded Monte Carlo replications"),
        ("compare", "run analyze and simulate on one config, report side by side"),
        ("sweep", "one compare row per sweep point"),
    ]:
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", required=True, help="experiment config file (YAML)")
        cmd.add_argument("--out", default=None, help="output directory")
        cmd.add_argument("--workers", type=int, default=None, help="concurrent workers")
        cmd.add_argument("--seed", type=int, default=None, help="override the config's seed list")
    return parser


def _resolve_out_dir(config: ExperimentConfig, args) -> Path:
    for candidate in (args.out, os.environ.get(OUT_DIR_ENV), config.out_dir):
        if candidate:
            return Path(candidate)
    return Path("out")


def _resolve_workers(args) -> int:
    raw = args.workers if args.workers is not None else os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    workers = int(raw)
    if workers < 1:
        raise ConfigError(f"workers: must be at least 1, got {workers}")
    return workers


_COMMANDS = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = dataclasses.replace(config, seeds=(args.seed,))
        workers = _resolve_workers(args)
        out_dir = _resolve_out_dir(config, args)
        out_dir.mkdir(parents=True, exist_ok=True)
        _COMMANDS[args.command](config, out_dir, workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
