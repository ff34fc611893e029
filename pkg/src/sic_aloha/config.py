"""Flat ``section.key = value`` configuration files.

Precedence, lowest first: built-in defaults, the ``--config`` file, each
``--set key=value`` in command-line order, then dedicated flags such as
``--seed``. Unknown keys and unparsable values raise ``ConfigError`` naming
the key.

Example::

    # N = 5 nodes, equal 20 dB SNR, p swept over 10 points
    scenario.n_nodes = 5
    scenario.arrival_prob = 0.4
    channel.mode = equal_snr
    channel.snr_db = 20
    sweep.axis = p
    sweep.values = 0.1:1.0:10
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .channel import ChannelParams, EqualSnr
from .sim import ConfigError, ScenarioConfig

SWEEP_AXES = ("p", "G", "p_a", "sigma_eps_sq", "N")


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_int(text):
    return None if text.strip().lower() in ("", "none") else int(text)


# key -> (target, field, parser); target is scenario / channel / sweep / compare
KEYS = {
    "scenario.n_nodes": ("scenario", "n_nodes", int),
    "scenario.tx_prob": ("scenario", "tx_prob", float),
    "scenario.arrival_prob": ("scenario", "arrival_prob", float),
    "scenario.deadline_slots": ("scenario", "deadline_slots", int),
    "scenario.area_m": ("scenario", "area_m", float),
    "scenario.drop_on_deadline": ("scenario", "drop_on_deadline", _bool),
    "policy.kind": ("scenario", "policy", str),
    "policy.age_threshold": ("scenario", "age_threshold", _opt_int),
    "csi.sigma_eps_sq": ("scenario", "sigma_eps_sq", float),
    "csi.analytic_v": ("scenario", "analytic_csi_v", float),
    "sim.n_slots": ("scenario", "n_slots", int),
    "sim.n_runs": ("scenario", "n_runs", int),
    "sim.seed": ("scenario", "seed", int),
    "sim.warmup_fraction": ("scenario", "warmup_fraction", float),
    "channel.mode": ("channel", "mode", str),
    "channel.snr_db": ("channel", "snr_db", float),
    "channel.rate_threshold": ("channel", "rate_threshold", float),
    "channel.tx_power_dbm": ("channel", "tx_power_dbm", float),
    "channel.noise_power": ("channel", "noise_power", float),
    "channel.pathloss_ref_db": ("channel", "pathloss_ref_db", float),
    "channel.pathloss_exponent": ("channel", "pathloss_exponent", float),
    "sweep.axis": ("sweep", "axis", str),
    "sweep.values": ("sweep", "values", str),
    "sweep.runs_per_point": ("sweep", "runs_per_point", _opt_int),
    "compare.z_bound": ("compare", "z_bound", float),
    "compare.mode": ("compare", "mode", str),
}

_KEY_FOR_FIELD = {name: key for key, (target, name, _) in KEYS.items() if target == "scenario"}


@dataclass(frozen=True)
class SweepSpec:
    base: ScenarioConfig
    axis: str
    values: tuple
    runs_per_point: int | None = None

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError("sweep.axis", f"must be one of {', '.join(SWEEP_AXES)}, got {self.axis!r}")
        if len(self.values) == 0:
            raise ConfigError("sweep.values", "must not be empty")

    def points(self) -> list:
        out = []
        for v in self.values:
            cfg = _apply_axis(self.base, self.axis, v)
            if self.runs_per_point is not None:
                cfg = cfg.replace(n_runs=self.runs_per_point)
            try:
                cfg.validate()
            except ConfigError as exc:
                raise ConfigError("sweep.values", f"{self.axis}={v!r} invalid ({exc})") from None
            out.append(cfg)
        return out


def _apply_axis(base: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    if axis == "p":
        return base.replace(tx_prob=float(value))
    if axis == "G":
        return base.replace(tx_prob=float(value) / base.n_nodes)
    if axis == "p_a":
        return base.replace(arrival_prob=float(value))
    if axis == "sigma_eps_sq":
        return base.replace(sigma_eps_sq=float(value))
    if float(value) != int(value):
        raise ConfigError("sweep.values", f"N must be an integer, got {value!r}")
    return base.replace(n_nodes=int(value))


def parse_values(text: str) -> tuple:
    """``a, b, c`` or ``start:stop:count`` (inclusive, evenly spaced)."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("range form is start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        return tuple(float(v) for v in np.linspace(start, stop, count))
    return tuple(float(v) for v in text.split(",") if v.strip())


@dataclass(frozen=True)
class CompareOptions:
    z_bound: float = 4.0
    mode: str = "strict"  # strict: exit 1 when the bound is exceeded; report: always exit 0


def parse_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def parse_assignment(text: str) -> tuple:
    if "=" not in text:
        raise ConfigError(text, "--set expects key=value")
    key, value = (s.strip() for s in text.split("=", 1))
    return key, value


def build(values: dict):
    """Turn raw ``key -> text`` pairs into ``(scenario, sweep_or_None, compare)``."""
    scenario, channel, sweep, compare = {}, {}, {}, {}
    targets = {"scenario": scenario, "channel": channel, "sweep": sweep, "compare": compare}
    for key, text in values.items():
        if key not in KEYS:
            raise ConfigError(key, "unknown key")
        target, name, parse = KEYS[key]
        try:
            targets[target][name] = parse(text)
        except ValueError as exc:
            raise ConfigError(key, f"cannot parse {text!r} ({exc})") from None

    mode = channel.pop("mode", "equal_snr")
    try:
        if mode == "equal_snr":
            extra = set(channel) - {"snr_db", "rate_threshold"}
            if extra:
                key = "channel." + sorted(extra)[0]
                raise ConfigError(key, "only valid with channel.mode = geometric")
            ch = EqualSnr(**channel)
        elif mode == "geometric":
            if "snr_db" in channel:
                raise ConfigError("channel.snr_db", "only valid with channel.mode = equal_snr")
            ch = ChannelParams(**channel)
        else:
            raise ConfigError("channel.mode", f"must be equal_snr or geometric, got {mode!r}")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("channel", str(exc)) from None

    try:
        cfg = ScenarioConfig(channel=ch, **scenario).validate()
    except ConfigError as exc:
        raise ConfigError(_KEY_FOR_FIELD.get(exc.field, exc.field), str(exc).split(": ", 1)[1]) from None

    spec = None
    if sweep:
        if "axis" not in sweep or "values" not in sweep:
            raise ConfigError("sweep.axis" if "axis" not in sweep else "sweep.values",
                              "sweep needs both sweep.axis and sweep.values")
        try:
            vals = parse_values(sweep["values"])
        except ValueError as exc:
            raise ConfigError("sweep.values", str(exc)) from None
        spec = SweepSpec(cfg, sweep["axis"], vals, sweep.get("runs_per_point"))
        spec.points()

    opts = CompareOptions(**compare)
    if opts.mode not in ("strict", "report"):
        raise ConfigError("compare.mode", f"must be strict or report, got {opts.mode!r}")
    if not opts.z_bound > 0 or math.isnan(opts.z_bound):
        raise ConfigError("compare.z_bound", "must be positive")
    return cfg, spec, opts


def with_seed(cfg: ScenarioConfig, spec: SweepSpec | None, seed: int):
    cfg = cfg.replace(seed=seed)
    if spec is not None:
        spec = replace(spec, base=spec.base.replace(seed=seed))
    return cfg, spec
