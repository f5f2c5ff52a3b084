"""Sweep/run configuration: TOML files whose keys mirror the model parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class ConfigError(ValueError):
    """Malformed configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config key {key!r}: {message}")
        self.key = key


FLOAT_KEYS = {
    "omega0", "delta", "lambda", "omega", "omega_h", "omega_c", "omega_ratio",
    "t_hot", "t_cold", "temperature", "alpha", "omega_co", "lambda_hot", "lambda_cold",
}
INT_KEYS = {"n_qubits", "n_tr", "levels"}
CHOICE_KEYS = {
    "protocol": ("frequency", "coupling"),
    "lambda_mode": ("absolute", "ratio"),
    "solver": ("ecs", "bare"),
    "partition": ("field", "qubits"),
}
PARAM_KEYS = FLOAT_KEYS | INT_KEYS | set(CHOICE_KEYS)
AXIS_KEYS = FLOAT_KEYS | INT_KEYS

DEFAULTS: dict[str, Any] = {
    "omega0": 1.0,
    "delta": 1.0,
    "lambda": 0.0,
    "n_qubits": 1,
    "n_tr": 50,
    "omega_h": 2.0,
    "omega_c": 1.0,
    "t_hot": 0.5,
    "t_cold": 0.1,
    "alpha": 0.01,
    "omega_co": 10.0,
    "protocol": "frequency",
    "lambda_mode": "absolute",
    "solver": "ecs",
    "partition": "field",
    "levels": 10,
}

CYCLE_OUTPUTS = ("regime", "work", "q_hot", "q_cold", "eta", "cop", "carnot_eta", "carnot_cop")
CORRELATION_OUTPUTS = ("g2", "g2_generalized", "negativity", "mean_photon")
SPECTRAL_OUTPUTS = ("gap",)
ALL_OUTPUTS = CYCLE_OUTPUTS + CORRELATION_OUTPUTS + SPECTRAL_OUTPUTS


def check_param(key: str, value: Any) -> Any:
    if key not in PARAM_KEYS:
        raise ConfigError(key, f"unknown parameter (expected one of {sorted(PARAM_KEYS)})")
    if key in FLOAT_KEYS:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(key, f"expected a finite number, got {value!r}")
        return float(value)
    if key in INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int) and not (
            isinstance(value, float) and value.is_integer()
        ):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return int(value)
    if value not in CHOICE_KEYS[key]:
        raise ConfigError(key, f"expected one of {CHOICE_KEYS[key]}, got {value!r}")
    return value


def check_params(table: dict, where: str = "params") -> dict:
    if not isinstance(table, dict):
        raise ConfigError(where, "expected a table")
    return {k: check_param(k, v) for k, v in table.items()}


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple

    @classmethod
    def from_dict(cls, d: dict, index: int = 0) -> "Axis":
        where = f"axes[{index}]"
        if not isinstance(d, dict):
            raise ConfigError(where, "expected a table")
        extra = set(d) - {"name", "min", "max", "count", "scale", "values", "open_min"}
        if extra:
            raise ConfigError(f"{where}.{sorted(extra)[0]}", "unknown axis field")
        name = d.get("name")
        if name not in AXIS_KEYS:
            raise ConfigError(f"{where}.name", f"not a sweepable parameter: {name!r}")
        if "values" in d:
            vals = d["values"]
            if not isinstance(vals, list) or not vals:
                raise ConfigError(f"{where}.values", "expected a non-empty list")
            return cls(name, tuple(check_param(name, v) for v in vals))
        for k in ("min", "max", "count"):
            if k not in d:
                raise ConfigError(f"{where}.{k}", "missing (or give 'values')")
        count = d["count"]
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise ConfigError(f"{where}.count", f"expected an integer >= 1, got {count!r}")
        lo, hi = float(d["min"]), float(d["max"])
        scale = d.get("scale", "linear")
        open_min = bool(d.get("open_min", False))
        n = count + 1 if open_min else count
        if scale == "linear":
            pts = np.linspace(lo, hi, n)
        elif scale == "log":
            if lo <= 0 or hi <= 0:
                raise ConfigError(f"{where}.min", "log axis needs positive bounds")
            pts = np.geomspace(lo, hi, n)
        else:
            raise ConfigError(f"{where}.scale", f"expected 'linear' or 'log', got {scale!r}")
        if open_min:
            pts = pts[1:]
        return cls(name, tuple(check_param(name, float(v) if name in FLOAT_KEYS else int(round(v))) for v in pts))

    def to_dict(self) -> dict:
        return {"name": self.name, "values": list(self.values)}


@dataclass(frozen=True)
class SweepSpec:
    axes: tuple
    fixed: dict = field(default_factory=dict)
    outputs: tuple = CYCLE_OUTPUTS[:6]
    csv: Optional[str] = None
    json: Optional[str] = None
    threads: int = 1
    auto_converge: bool = False

    def __post_init__(self):
        if not self.axes:
            raise ConfigError("axes", "at least one axis is required")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ConfigError("axes", f"duplicate axis names {names}")
        if not self.outputs:
            raise ConfigError("outputs", "output set is empty")
        for o in self.outputs:
            if o not in ALL_OUTPUTS:
                raise ConfigError("outputs", f"unknown output {o!r} (expected from {ALL_OUTPUTS})")
        if self.threads < 1:
            raise ConfigError("threads", "must be >= 1")

    @property
    def shape(self) -> tuple:
        return tuple(len(a.values) for a in self.axes)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        known = {"axes", "fixed", "params", "outputs", "output", "sweep"}
        for k in d:
            if k not in known:
                raise ConfigError(k, f"unknown top-level section (expected {sorted(known)})")
        fixed = check_params(d.get("fixed", d.get("params", {})), "fixed")
        axes_raw = d.get("axes")
        if not isinstance(axes_raw, list):
            raise ConfigError("axes", "expected an array of axis tables")
        axes = tuple(Axis.from_dict(a, i) for i, a in enumerate(axes_raw))
        for a in axes:
            if a.name in fixed:
                raise ConfigError(a.name, "appears both as an axis and as a fixed parameter")
        sweep = d.get("sweep", {})
        for k in sweep:
            if k not in ("threads", "auto_converge"):
                raise ConfigError(f"sweep.{k}", "unknown sweep option")
        out = d.get("output", {})
        for k in out:
            if k not in ("csv", "json"):
                raise ConfigError(f"output.{k}", "unknown output path kind")
        outputs = d.get("outputs", list(CYCLE_OUTPUTS[:6]))
        if not isinstance(outputs, list):
            raise ConfigError("outputs", "expected a list")
        return cls(
            axes=axes,
            fixed=fixed,
            outputs=tuple(outputs),
            csv=out.get("csv"),
            json=out.get("json"),
            threads=int(sweep.get("threads", 1)),
            auto_converge=bool(sweep.get("auto_converge", False)),
        )

    def to_dict(self) -> dict:
        d = {
            "axes": [a.to_dict() for a in self.axes],
            "fixed": dict(self.fixed),
            "outputs": list(self.outputs),
            "sweep": {"threads": self.threads, "auto_converge": self.auto_converge},
        }
        out = {k: v for k, v in (("csv", self.csv), ("json", self.json)) if v}
        if out:
            d["output"] = out
        return d


def load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"invalid TOML: {exc}") from exc


def load_sweep(path) -> SweepSpec:
    spec = SweepSpec.from_dict(load_toml(path))
    base = Path(path).parent
    fix = {}
    for k in ("csv", "json"):
        v = getattr(spec, k)
        if v and not Path(v).is_absolute():
            fix[k] = str(base / v)
    if fix:
        spec = SweepSpec(**{**spec.__dict__, **fix})
    return spec


def load_point(path) -> dict:
    """Single-point config: a ``[params]`` table (``[fixed]`` accepted too)."""
    d = load_toml(path)
    for k in d:
        if k not in ("params", "fixed"):
            raise ConfigError(k, "single-point configs take only a [params] table")
    return check_params(d.get("params", d.get("fixed", {})))


def resolve(values: dict) -> dict:
    out = dict(DEFAULTS)
    out.update(values)
    if "omega" in values:
        out["omega0"] = values.get("omega0", values["omega"])
        out["delta"] = values.get("delta", values["omega"])
    if "omega_ratio" in values:
        out["omega_h"] = values["omega_ratio"] * out["omega_c"]
    return out
