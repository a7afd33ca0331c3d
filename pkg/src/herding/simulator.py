"""Closed-loop herding simulation: initialization, reference, Euler stepping, logging."""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

import numpy as np

from . import dynamics
from .assignment import assign
from .controller import ControllabilityLoss, ControllerConfig, Reference, herder_velocity_update, h_value
from .dynamics import EvaderModel, ModelTable, Variant, WorldState

TIME_EPS = 1e-9  # s, slack on range checks against accumulated k*dt


class ConfigError(ValueError):
    pass


_BERNOULLI = re.compile(r"^Bernoulli\(\s*([0-9.eE+-]+)\s*\)$")


def parse_mix(mix: str) -> float:
    """Probability of an Exponential evader for a model-mix label."""
    if mix == "AllInverse":
        return 0.0
    if mix == "AllExponential":
        return 1.0
    hit = _BERNOULLI.match(str(mix))
    if hit:
        q = float(hit.group(1))
        if 0.0 <= q <= 1.0:
            return q
    raise ConfigError(f"model_mix: expected AllInverse, AllExponential or Bernoulli(q), got {mix!r}")


@dataclass(frozen=True)
class InitConfig:
    evader_mean: tuple = (20.0, 0.0)
    evader_cov_scale: float = 1.0
    herder_center: tuple = (20.0, 0.0)
    herder_radius: float = 70.0


@dataclass(frozen=True)
class ReferenceParams:
    x_star: tuple = (-35.0, -35.0)
    t_switch: float = 160.0
    nu: float = -0.2
    A: float = 5.0
    omega: float = 0.1


@dataclass(frozen=True)
class SimConfig:
    m: int = 50
    n: int = 4
    model_mix: str = "AllInverse"
    dt: float = 0.04
    t_end: float = 400.0
    v_max: float = 4.0
    init: InitConfig = field(default_factory=InitConfig)
    reference: ReferenceParams = field(default_factory=ReferenceParams)
    seed: int = 0
    controller: ControllerConfig = field(default_factory=ControllerConfig)

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if int(self.m) != self.m or self.m < 1:
            raise ConfigError("m must be a positive integer")
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError("n must be a positive integer")
        if not self.v_max > 0:
            raise ConfigError("v_max must be positive")
        if self.t_end < 0:
            raise ConfigError("t_end must be non-negative")
        if not self.reference.t_switch > 0:
            raise ConfigError("reference.t_switch must be positive")
        if not self.init.evader_cov_scale >= 0:
            raise ConfigError("init.evader_cov_scale must be non-negative")
        if not self.init.herder_radius >= 0:
            raise ConfigError("init.herder_radius must be non-negative")
        parse_mix(self.model_mix)
        r = self.reference
        if np.hypot(r.nu, r.omega * r.A) > self.v_max:
            raise ConfigError("reference speed exceeds v_max")
        if self.controller.v_max != self.v_max:
            object.__setattr__(self, "controller", replace(self.controller, v_max=self.v_max))

    @property
    def steps(self) -> int:
        return int(np.floor(self.t_end / self.dt + TIME_EPS))


def initialize(cfg: SimConfig) -> WorldState:
    rng = np.random.default_rng(cfg.seed)
    cov = cfg.init.evader_cov_scale * np.eye(2)
    evaders = rng.multivariate_normal(np.asarray(cfg.init.evader_mean, float), cov, size=cfg.m)
    q = parse_mix(cfg.model_mix)
    exp_mask = rng.random(cfg.m) < q
    inv, ex = EvaderModel(Variant.INVERSE), EvaderModel(Variant.EXPONENTIAL)
    models = ModelTable.from_models([ex if e else inv for e in exp_mask])

    ang = 2.0 * np.pi * np.arange(cfg.n) / cfg.n
    ring = np.column_stack([np.cos(ang), np.sin(ang)])
    herders = np.asarray(cfg.init.herder_center, float) + cfg.init.herder_radius * ring
    return WorldState(evaders, herders, models, 0.0)


def reference_at(t: float, cfg: SimConfig) -> Reference:
    if not (-TIME_EPS <= t <= cfg.t_end + TIME_EPS):
        raise ConfigError(f"time {t} outside [0, {cfg.t_end}]")
    r = cfg.reference
    x0 = np.asarray(r.x_star, dtype=float)
    if t < r.t_switch:
        return Reference(x0)
    s = t - r.t_switch
    pos = x0 + np.array([r.nu * s, r.A * np.sin(r.omega * s)])
    vel = np.array([r.nu, r.omega * r.A * np.cos(r.omega * s)])
    acc = np.array([0.0, -r.omega**2 * r.A * np.sin(r.omega * s)])
    return Reference(pos, vel, acc)


@dataclass
class StepInfo:
    selected: tuple
    h_norm: float
    herder_saturated: np.ndarray
    evader_saturated: np.ndarray
    control_loss: bool
    herder_velocity: np.ndarray
    evader_velocity: np.ndarray


def advance(w: WorldState, cfg: SimConfig, control: bool = True) -> tuple[WorldState, StepInfo]:
    """One closed-loop step returning the new state and what happened in it."""
    sel: tuple = ()
    h_norm = float("nan")
    loss = False
    u_dot = np.zeros_like(w.herders)
    if control:
        ref = reference_at(w.time, cfg)
        a = assign(w, cfg.n, cfg.seed)
        sel = a.selected
        h_norm = float(np.linalg.norm(h_value(sel, w, ref, cfg.controller)))
        try:
            u_dot = herder_velocity_update(sel, w, ref, cfg.controller)
        except ControllabilityLoss:
            loss = True
            u_dot = np.zeros_like(w.herders)
    x_dot = dynamics.herd_velocity(w)
    h_sat = dynamics.saturated_mask(u_dot, cfg.v_max)
    e_sat = dynamics.saturated_mask(x_dot, cfg.v_max)
    u_dot = dynamics.saturate(u_dot, cfg.v_max)
    x_dot = dynamics.saturate(x_dot, cfg.v_max)
    ev = w.evaders + cfg.dt * x_dot
    he = w.herders + cfg.dt * u_dot
    info = StepInfo(tuple(sel), h_norm, h_sat, e_sat, loss, u_dot, x_dot)
    if not (np.all(np.isfinite(ev)) and np.all(np.isfinite(he))):
        raise FloatingPointError("non-finite position")
    return w.with_positions(evaders=ev, herders=he, time=w.time + cfg.dt), info


def step(w: WorldState, cfg: SimConfig, control: bool = True) -> WorldState:
    return advance(w, cfg, control)[0]


@dataclass
class RunLog:
    t: np.ndarray  # (K,)
    evaders: np.ndarray  # (K, m, 2)
    herders: np.ndarray  # (K, n, 2)
    ref_position: np.ndarray  # (K, 2)
    ref_velocity: np.ndarray  # (K, 2)
    selected: list  # K tuples of evader indices
    h_norm: np.ndarray  # (K,)
    herder_saturated: np.ndarray  # (K, n) bool
    evader_saturated: np.ndarray  # (K, m) bool
    control_loss: np.ndarray  # (K,) bool
    exponential: np.ndarray  # (m,) bool, model variant per evader
    dt: float
    abort_cause: str | None = None

    def __len__(self) -> int:
        return len(self.t)

    @property
    def m(self) -> int:
        return self.evaders.shape[1]

    @property
    def n(self) -> int:
        return self.herders.shape[1]

    @property
    def centroids(self) -> np.ndarray:
        return self.evaders.mean(axis=1)


def run(cfg: SimConfig) -> RunLog:
    """Simulate ``cfg.steps`` Euler steps, logging every state.

    The per-step fields (selection, ||h||, flags) of record k describe the
    step taken from state k; the last record gets the assignment and h of the
    final state with no step flags. A non-finite state aborts the run and
    truncates the log at the last finite state.
    """
    w = initialize(cfg)
    exponential = w.models.exponential.copy()
    K = cfg.steps + 1
    m, n = cfg.m, cfg.n
    ev = np.empty((K, m, 2))
    he = np.empty((K, n, 2))
    t = np.arange(K) * cfg.dt
    rp = np.empty((K, 2))
    rv = np.empty((K, 2))
    h_norm = np.full(K, np.nan)
    hs = np.zeros((K, n), bool)
    es = np.zeros((K, m), bool)
    loss = np.zeros(K, bool)
    selected: list = []
    abort = None
    k = 0
    for k in range(K):
        w = w.with_positions(time=t[k])
        ev[k], he[k] = w.evaders, w.herders
        ref = reference_at(t[k], cfg)
        rp[k], rv[k] = ref.position, ref.velocity
        if k == K - 1:
            a = assign(w, n, cfg.seed)
            selected.append(a.selected)
            h_norm[k] = np.linalg.norm(h_value(a.selected, w, ref, cfg.controller))
            break
        try:
            w, info = advance(w, cfg)
        except (FloatingPointError, dynamics.DynamicsError) as exc:
            abort = f"step {k}: {exc}"
            selected.append(())
            break
        selected.append(info.selected)
        h_norm[k] = info.h_norm
        hs[k], es[k], loss[k] = info.herder_saturated, info.evader_saturated, info.control_loss
    end = k + 1
    return RunLog(
        t=t[:end],
        evaders=ev[:end],
        herders=he[:end],
        ref_position=rp[:end],
        ref_velocity=rv[:end],
        selected=selected[:end],
        h_norm=h_norm[:end],
        herder_saturated=hs[:end],
        evader_saturated=es[:end],
        control_loss=loss[:end],
        exponential=exponential,
        dt=cfg.dt,
        abort_cause=abort,
    )


def write_trajectory_csv(log: RunLog, path, stride: int = 5) -> None:
    """Rows ``t,kind,id,x,y,selected`` for every stride-th record (the last one always)."""
    if stride < 1:
        raise ConfigError("stride must be at least 1")
    K = len(log)
    ks = list(range(0, K, stride))
    if ks[-1] != K - 1:
        ks.append(K - 1)
    fmt = "{:.10g}".format
    lines = ["t,kind,id,x,y,selected"]
    for k in ks:
        tk = fmt(log.t[k])
        sel = set(log.selected[k])
        for j, (x, y) in enumerate(log.evaders[k]):
            lines.append(f"{tk},E,{j},{fmt(x)},{fmt(y)},{int(j in sel)}")
        for i, (x, y) in enumerate(log.herders[k]):
            lines.append(f"{tk},H,{i},{fmt(x)},{fmt(y)},0")
        x, y = log.ref_position[k]
        lines.append(f"{tk},R,0,{fmt(x)},{fmt(y)},0")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
