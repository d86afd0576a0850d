"""Experiment configuration: YAML parsing, validation, model construction.

A config file is a nested key/value document; every field is validated
against the model invariants before anything runs, and errors name the
offending field.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import yaml

from .errors import ConfigError
from .models import (
    ChannelModel,
    RayleighChannel,
    SystemParams,
    TabulatedChannel,
    TrafficModel,
    UniformChannel,
)

SWEEP_AXES = ("power", "theta1")
POLICY_KINDS = ("gcfs", "threshold")


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemParams
    channel: ChannelModel
    channel_label: str
    traffic: TrafficModel
    policy_kind: str
    policy_gain: float | None    # explicit threshold; None means "solve for it"
    horizon: int
    warmup: int
    seeds: tuple[int, ...]
    sweep: SweepSpec | None
    out_dir: str | None
    figures: bool
    eps_solve: float | None

    def with_power(self, power: float) -> "ExperimentConfig":
        system = dataclasses.replace(self.system, power=float(power))
        return dataclasses.replace(self, system=system)

    def with_theta1(self, theta1: float) -> "ExperimentConfig":
        traffic = TrafficModel(theta=(1.0 - theta1, theta1), packet_bits=self.traffic.packet_bits)
        return dataclasses.replace(self, traffic=traffic)


def _require(mapping, key, where):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ConfigError(f"{where}.{key}: missing required field")
    return mapping[key]


def _build_system(raw) -> SystemParams:
    try:
        return SystemParams(
            n_users=int(_require(raw, "users", "system")),
            bandwidth=float(_require(raw, "bandwidth", "system")),
            slot_duration=float(_require(raw, "slot_duration", "system")),
            power=float(_require(raw, "power", "system")),
            noise_power=float(_require(raw, "noise_power", "system")),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"system: {exc}") from exc


def _build_channel(raw, base_dir: Path) -> tuple[ChannelModel, str]:
    kind = _require(raw, "kind", "channel")
    try:
        if kind == "rayleigh":
            return RayleighChannel(), "rayleigh"
        if kind == "uniform":
            h_max = float(_require(raw, "h_max", "channel"))
            return UniformChannel(h_sup=h_max), f"uniform(0,{h_max})"
        if kind == "table":
            path = Path(str(_require(raw, "path", "channel")))
            if not path.is_absolute():
                path = base_dir / path
            return TabulatedChannel.from_csv(path), f"table:{path}"
    except ConfigError:
        raise
    except (TypeError, ValueError, OSError) as exc:
        raise ConfigError(f"channel: {exc}") from exc
    raise ConfigError(f"channel.kind: expected one of rayleigh/uniform/table, got {kind!r}")


def _build_traffic(raw) -> TrafficModel:
    theta = _require(raw, "theta", "traffic")
    if not isinstance(theta, (list, tuple)):
        raise ConfigError("traffic.theta: expected a list of probabilities")
    try:
        return TrafficModel(
            theta=tuple(float(x) for x in theta),
            packet_bits=float(raw.get("packet_bits", 1.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"traffic: {exc}") from exc


def _build_policy(raw) -> tuple[str, float | None]:
    if raw is None:
        return "gcfs", None
    if isinstance(raw, str):
        kind, gain = raw, None
    elif isinstance(raw, dict):
        kind = _require(raw, "kind", "policy")
        gain = raw.get("gain")
    else:
        raise ConfigError(f"policy: expected a string or mapping, got {type(raw).__name__}")
    if kind not in POLICY_KINDS:
        raise ConfigError(f"policy.kind: expected one of {'/'.join(POLICY_KINDS)}, got {kind!r}")
    if gain is not None:
        try:
            gain = float(gain)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"policy.gain: {exc}") from exc
        if gain < 0:
            raise ConfigError("policy.gain: threshold gain must be nonnegative")
        if kind == "gcfs":
            raise ConfigError("policy.gain: only the threshold policy takes a gain")
    return kind, gain


def _build_sweep(raw) -> SweepSpec | None:
    if raw is None:
        return None
    axis = _require(raw, "axis", "sweep")
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep.axis: expected one of {'/'.join(SWEEP_AXES)}, got {axis!r}")
    values = _require(raw, "values", "sweep")
    if not isinstance(values, (list, tuple)) or len(values) < 2:
        raise ConfigError("sweep.values: need at least 2 values")
    try:
        values = tuple(float(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"sweep.values: {exc}") from exc
    if axis == "power" and any(v <= 0 for v in values):
        raise ConfigError("sweep.values: powers must be positive")
    if axis == "theta1" and any(not 0 < v <= 1 for v in values):
        raise ConfigError("sweep.values: arrival probabilities must lie in (0, 1]")
    return SweepSpec(axis=axis, values=values)


def parse_config(raw: dict, base_dir: Path) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a mapping")
    system = _build_system(_require(raw, "system", "config"))
    channel, channel_label = _build_channel(_require(raw, "channel", "config"), base_dir)
    traffic = _build_traffic(_require(raw, "traffic", "config"))
    policy_kind, policy_gain = _build_policy(raw.get("policy"))
    try:
        horizon = int(_require(raw, "horizon", "config"))
        warmup = int(raw.get("warmup", -1))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"horizon/warmup: {exc}") from exc
    if horizon < 1:
        raise ConfigError("horizon: must be a positive slot count")
    if warmup < 0:
        warmup = min(max(horizon // 10, 1000), horizon - 1)
    if not horizon > warmup:
        raise ConfigError(f"warmup: must be smaller than horizon, got {warmup} >= {horizon}")

    seeds_raw = raw.get("seeds", [0])
    if not isinstance(seeds_raw, (list, tuple)) or not seeds_raw:
        raise ConfigError("seeds: expected a nonempty list of integers")
    try:
        seeds = tuple(int(s) for s in seeds_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"seeds: {exc}") from exc
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds: must be distinct")

    sweep = _build_sweep(raw.get("sweep"))
    if sweep is not None and sweep.axis == "theta1" and traffic.max_packets > 1:
        raise ConfigError("sweep.axis: theta1 sweeps need single-packet (Bernoulli) traffic")

    output = raw.get("output") or {}
    if not isinstance(output, dict):
        raise ConfigError("output: expected a mapping")
    out_dir = output.get("dir")
    figures = bool(output.get("figures", True))

    eps_solve = raw.get("eps_solve")
    if eps_solve is not None:
        try:
            eps_solve = float(eps_solve)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"eps_solve: {exc}") from exc
        if eps_solve <= 0:
            raise ConfigError("eps_solve: must be positive")

    return ExperimentConfig(
        system=system,
        channel=channel,
        channel_label=channel_label,
        traffic=traffic,
        policy_kind=policy_kind,
        policy_gain=policy_gain,
        horizon=horizon,
        warmup=warmup,
        seeds=seeds,
        sweep=sweep,
        out_dir=str(out_dir) if out_dir is not None else None,
        figures=figures,
        eps_solve=eps_solve,
    )


def load_config(path) -> ExperimentConfig:
    """Parse and validate an experiment config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc
    return parse_config(raw, path.parent)
