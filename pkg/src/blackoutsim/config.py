"""Simulation configuration: every model parameter and design knob, with a
flat key-value text format that round-trips exactly."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields

STREAM_NAMES = ("outages", "overload_trials", "bursts", "recovery",
                "daily_factor", "synthesis")


class ConfigError(ValueError):
    """Invalid configuration value or file."""


@dataclass
class SimConfig:
    # grid source: a file, or the synthetic generator
    grid_file: str | None = None
    n_nodes: int = 100
    n_gen_nodes: int = 15
    n_lines: int = 154
    mean_base_load: float = 100.0
    kappa: float = 1.25              # initial flow limit = kappa * |base flow|
    initial_margin: float = 0.4      # generation sizing of synthetic grids

    # duration
    days: int = 2000
    warmup_days: int = 0

    # stochastic model parameters
    p0: float = 1.44e-6              # line failure probability (per day)
    p1: float = 0.01                 # failure probability of an at-limit line
    p3: float = 0.00025              # burst probability (per node, per step)
    p4: float = 0.00125              # pending-burst recovery probability
    lambda_bar: float = 1.00058      # daily demand growth
    mu: float = 1.07                 # line upgrade factor
    b: float = 0.0                   # burst amplitude
    gamma: float = 0.05              # day-factor half width

    # demand control
    control_enabled: bool = False
    control_f1: float = 0.85         # PL1 as fraction of the daily peak
    control_f2: float = 0.75         # PL2 as fraction of the daily peak
    burst_recovery_basis: str = "relative"   # or "absolute"

    # demand shape
    headroom: float = 0.25           # generation-limit margin over the profile
    profile_file: str | None = None

    # dispatch
    shed_penalty: float = 100.0
    gen_cost: float = 1.0
    lp_backend: str = "warm"         # or "scipy"

    # evolution
    margin_threshold: float = 0.2
    margin_target: float = 0.4

    # cadences and numerics
    initiating_outage_cadence: str = "per_step"   # or "per_day"
    renormalize_threshold: float = 10.0  # rescale MW units past this growth; 0 off

    # outputs
    diagnostics: bool = False
    intraday_bin_minutes: int = 60

    # named seeds, one generator per stochastic stream
    seed_outages: int = 101
    seed_overload_trials: int = 102
    seed_bursts: int = 103
    seed_recovery: int = 104
    seed_daily_factor: int = 105
    seed_synthesis: int = 106

    # replica index folded into every stream seed
    replica: int = 0

    def validate(self):
        for name in ("p0", "p1", "p3", "p4"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} = {v} is not a probability")
        if self.days <= self.warmup_days or self.warmup_days < 0:
            raise ConfigError("need days > warmup_days >= 0")
        if self.lambda_bar < 1.0:
            raise ConfigError("lambda_bar must be >= 1")
        if self.mu <= 1.0:
            raise ConfigError("mu must be > 1")
        if self.b < 0:
            raise ConfigError("b must be >= 0")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError("gamma must be in [0, 1)")
        if not 0.0 < self.control_f2 <= self.control_f1 <= 1.0:
            raise ConfigError("need 0 < control_f2 <= control_f1 <= 1")
        if self.burst_recovery_basis not in ("relative", "absolute"):
            raise ConfigError("burst_recovery_basis must be relative|absolute")
        if self.initiating_outage_cadence not in ("per_step", "per_day"):
            raise ConfigError("initiating_outage_cadence must be "
                              "per_step|per_day")
        if self.lp_backend not in ("warm", "scipy"):
            raise ConfigError("lp_backend must be warm|scipy")
        if not 0.0 < self.margin_threshold < self.margin_target:
            raise ConfigError("need 0 < margin_threshold < margin_target")
        if self.headroom < 0:
            raise ConfigError("headroom must be >= 0")
        if self.shed_penalty <= self.gen_cost:
            raise ConfigError("shed_penalty must exceed gen_cost")
        if self.grid_file is None:
            if self.n_nodes < 2 or not 1 <= self.n_gen_nodes <= self.n_nodes \
                    or self.n_lines < self.n_nodes - 1:
                raise ConfigError("invalid synthetic grid parameters")
        if self.intraday_bin_minutes <= 0 or 1440 % self.intraday_bin_minutes:
            raise ConfigError("intraday_bin_minutes must divide 1440")
        if self.renormalize_threshold < 0:
            raise ConfigError("renormalize_threshold must be >= 0")
        if self.replica < 0:
            raise ConfigError("replica must be >= 0")
        return self

    def stream_seeds(self) -> dict[str, int]:
        return {name: getattr(self, f"seed_{name}") for name in STREAM_NAMES}

    # -- flat key-value serialization -----------------------------------

    def to_text(self) -> str:
        out = []
        for f in fields(self):
            value = getattr(self, f.name)
            out.append(f"{f.name} {_format_value(value)}")
        return "\n".join(out) + "\n"

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "SimConfig":
        known = {f.name: f for f in fields(cls)}
        values = {}
        for k, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise ConfigError(f"line {k}: expected 'key value'")
            key, raw = parts
            if key not in known:
                raise ConfigError(f"line {k}: unknown config key {key!r}")
            if key in values:
                raise ConfigError(f"line {k}: duplicate key {key!r}")
            values[key] = _parse_value(raw, known[key].type, key, k)
        return cls(**values).validate()

    @classmethod
    def load(cls, path) -> "SimConfig":
        with open(path) as fh:
            return cls.from_text(fh.read())

    def replace(self, **updates) -> "SimConfig":
        return dataclasses.replace(self, **updates)


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(raw: str, ftype: str, key: str, lineno: int):
    if raw == "none":
        return None
    base = ftype.replace(" ", "")
    try:
        if base.startswith("bool"):
            if raw not in ("true", "false"):
                raise ValueError(f"expected true/false, got {raw!r}")
            return raw == "true"
        if base.startswith("int"):
            return int(raw)
        if base.startswith("float"):
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
