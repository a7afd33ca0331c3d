"""Centroid-tracking and spread metrics over a time window, escape detection, run classification."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geometry import convex_hull, points_in_polygon
from .simulator import RunLog

THETA_MU = 0.6  # m
THETA_SIGMA = 1.0  # m^2
T_ESCAPE = 5.0  # s
WINDOW = (160.0, 400.0)  # s
TIME_EPS = 1e-9


class MetricsError(ValueError):
    pass


class Classification(str, Enum):
    SUCCESS = "Success"
    COALITION_LOSS = "CoalitionLoss"
    FAILURE = "Failure"


@dataclass(frozen=True)
class Thresholds:
    theta_mu: float = THETA_MU
    theta_sigma: float = THETA_SIGMA
    t_escape: float = T_ESCAPE


@dataclass(frozen=True)
class MetricReport:
    l_mu: float
    l_sigma: float
    classification: Classification
    escape_count: int
    window: tuple

    def to_dict(self) -> dict:
        finite = lambda v: v if math.isfinite(v) else None
        return {
            "l_mu_m": finite(self.l_mu),
            "l_sigma_m2": finite(self.l_sigma),
            "classification": self.classification.value,
            "escape_count": self.escape_count,
            "window": list(self.window),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _window_slice(log: RunLog, t0: float, t1: float) -> slice:
    if not t0 < t1:
        raise MetricsError("window must satisfy t0 < t1")
    if len(log) == 0 or t0 < log.t[0] - TIME_EPS or t1 > log.t[-1] + TIME_EPS:
        raise MetricsError(f"window [{t0}, {t1}] outside log range")
    lo = int(np.searchsorted(log.t, t0 - TIME_EPS, side="left"))
    hi = int(np.searchsorted(log.t, t1 + TIME_EPS, side="right"))
    if hi - lo < 2:
        raise MetricsError("window holds fewer than two records")
    return slice(lo, hi)


def _time_average(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.trapezoid(y, t, axis=0) / (t[-1] - t[0])


def l_mu(log: RunLog, t0: float = WINDOW[0], t1: float = WINDOW[1]) -> float:
    """Norm of the time-averaged centroid error to the reference."""
    s = _window_slice(log, t0, t1)
    err = log.evaders[s].mean(axis=1) - log.ref_position[s]
    return float(np.linalg.norm(_time_average(log.t[s], err)))


def l_sigma(log: RunLog, t0: float = WINDOW[0], t1: float = WINDOW[1]) -> float:
    """Norm of the time-averaged per-axis mean squared deviation about the centroid."""
    s = _window_slice(log, t0, t1)
    ev = log.evaders[s]
    dev = ev - ev.mean(axis=1, keepdims=True)
    spread = np.mean(dev**2, axis=1)
    return float(np.linalg.norm(_time_average(log.t[s], spread)))


def outside_herders(log: RunLog, sl: slice | None = None) -> np.ndarray:
    """Boolean (K, m): evader outside the convex hull of the herders at each record."""
    sl = slice(None) if sl is None else sl
    out = []
    for ev, he in zip(log.evaders[sl], log.herders[sl]):
        verts = he[list(convex_hull(he).vertex_indices)]
        out.append(~points_in_polygon(ev, verts))
    return np.array(out, dtype=bool).reshape(-1, log.m)


def escape_count(log: RunLog, t0: float = WINDOW[0], t1: float = WINDOW[1], t_escape: float = T_ESCAPE) -> int:
    """Evaders that stay outside the herders' hull for more than ``t_escape`` consecutive seconds.

    Each record stands for one step of length dt, so a run of k outside
    records lasts k * dt seconds.
    """
    s = _window_slice(log, t0, t1)
    out = outside_herders(log, s)
    need = int(np.floor(t_escape / log.dt + TIME_EPS)) + 1  # smallest k with k*dt > t_escape
    count = 0
    for col in out.T:
        runs = np.diff(np.flatnonzero(np.diff(np.r_[0, col.astype(np.int8), 0])))[::2]
        count += int(runs.size and runs.max() >= need)
    return count


def classify(l_mu_value: float, l_sigma_value: float, escapes: int, th: Thresholds = Thresholds()) -> Classification:
    if escapes > 0 or not math.isfinite(l_mu_value) or l_mu_value > th.theta_mu:
        return Classification.FAILURE
    if not math.isfinite(l_sigma_value) or l_sigma_value > th.theta_sigma:
        return Classification.COALITION_LOSS
    return Classification.SUCCESS


def evaluate(log: RunLog, t0: float = WINDOW[0], t1: float = WINDOW[1], th: Thresholds = Thresholds()) -> MetricReport:
    """Full report; an aborted or too-short log is a Failure with undefined metrics."""
    if log.abort_cause is not None:
        return MetricReport(math.nan, math.nan, Classification.FAILURE, 0, (t0, t1))
    lm, ls = l_mu(log, t0, t1), l_sigma(log, t0, t1)
    esc = escape_count(log, t0, t1, th.t_escape)
    return MetricReport(lm, ls, classify(lm, ls, esc, th), esc, (t0, t1))
