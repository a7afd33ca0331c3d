"""JSON config ingestion for runs and sweeps, with field-named diagnostics."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .controller import ControllerConfig, ControllerError
from .metrics import WINDOW, Thresholds
from .simulator import ConfigError, InitConfig, ReferenceParams, SimConfig, parse_mix

_NESTED = {"init": InitConfig, "reference": ReferenceParams, "controller": ControllerConfig}
_PAIRS = {"evader_mean", "herder_center", "x_star"}


@dataclass(frozen=True)
class RunConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    thresholds: Thresholds = field(default_factory=Thresholds)
    window: tuple = WINDOW


def _number(path: str, v, integer: bool = False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    if integer:
        if int(v) != v:
            raise ConfigError(f"{path}: expected an integer, got {v!r}")
        return int(v)
    return float(v)


def _build(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, v in data.items():
        where = f"{path}.{key}" if path else key
        if key not in fields:
            raise ConfigError(f"{where}: unknown field")
        default = getattr(cls(), key) if key not in _NESTED else None
        if key in _NESTED:
            kwargs[key] = _build(_NESTED[key], v, where)
        elif key in _PAIRS:
            if not isinstance(v, (list, tuple)) or len(v) != 2:
                raise ConfigError(f"{where}: expected [x, y]")
            kwargs[key] = tuple(_number(where, c) for c in v)
        elif key == "model_mix":
            try:
                parse_mix(v)
            except ConfigError as exc:
                raise ConfigError(f"{where}: {exc}") from None
            kwargs[key] = v
        elif isinstance(default, bool):
            if not isinstance(v, bool):
                raise ConfigError(f"{where}: expected true or false")
            kwargs[key] = v
        else:
            kwargs[key] = _number(where, v, integer=isinstance(default, int))
    try:
        return cls(**kwargs)
    except ControllerError as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from None


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config: expected a JSON object")
    data = dict(data)
    th = _build(Thresholds, data.pop("thresholds", {}), "thresholds")
    window = data.pop("window", list(WINDOW))
    if not isinstance(window, (list, tuple)) or len(window) != 2:
        raise ConfigError("window: expected [t0, t1]")
    window = tuple(_number("window", v) for v in window)
    sim = _build(SimConfig, data, "")
    if not window[0] < window[1]:
        raise ConfigError("window: t0 must be below t1")
    return RunConfig(sim, th, window)


def config_to_dict(cfg: RunConfig) -> dict:
    def plain(obj):
        out = {}
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            out[f.name] = plain(v) if dataclasses.is_dataclass(v) else (list(v) if isinstance(v, tuple) else v)
        return out

    d = plain(cfg.sim)
    d["thresholds"] = plain(cfg.thresholds)
    d["window"] = list(cfg.window)
    return d


def load_config(path) -> RunConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc})") from None
    return config_from_dict(data)


@dataclass(frozen=True)
class SweepSpec:
    m_values: tuple
    n_values: tuple
    model_mixes: tuple = ("AllInverse",)
    seeds_per_cell: int = 1
    base: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("m_values", "n_values", "model_mixes"):
            if not getattr(self, name):
                raise ConfigError(f"{name}: must be a non-empty list")
        if self.seeds_per_cell < 1:
            raise ConfigError("seeds_per_cell: must be at least 1")
        for mix in self.model_mixes:
            parse_mix(mix)

    def cells(self):
        """(m, n, mix, seed_index) in row-major order."""
        for m in self.m_values:
            for n in self.n_values:
                for mix in self.model_mixes:
                    for s in range(self.seeds_per_cell):
                        yield m, n, mix, s


def sweep_from_dict(data: dict) -> SweepSpec:
    if not isinstance(data, dict):
        raise ConfigError("sweep: expected a JSON object")
    allowed = {f.name for f in dataclasses.fields(SweepSpec)}
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{key}: unknown field")
    ints = lambda key: tuple(_number(f"{key}[{i}]", v, integer=True) for i, v in enumerate(data.get(key, [])))
    spec = SweepSpec(
        m_values=ints("m_values"),
        n_values=ints("n_values"),
        model_mixes=tuple(data.get("model_mixes", ["AllInverse"])),
        seeds_per_cell=_number("seeds_per_cell", data.get("seeds_per_cell", 1), integer=True),
        base=dict(data.get("base", {})),
    )
    config_from_dict(spec.base)  # fail early on a bad base
    return spec


def load_sweep(path) -> SweepSpec:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"sweep: invalid JSON ({exc})") from None
    return sweep_from_dict(data)
