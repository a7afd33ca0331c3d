"""Evader repulsion models, stacked herd dynamics and their analytic Jacobians.

Every pairwise interaction has the radial form ``phi(r) * d`` with ``d`` the
relative position and ``r = max(|d|, D_FLOOR)``, so one block formula

    d/dx [phi(r) d] = phi(r) I + phi'(r) / r * d d^T

covers both herder models and the evader-evader term.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

D_FLOOR = 1e-3  # m, lower clamp of every distance entering a denominator

# parameter values used throughout the experiments
THETA = 1.2
GAMMA = 2e-4
BETA = 0.5
SIGMA = 2.0
D_MIN = 10.0


class DynamicsError(ValueError):
    pass


class Variant(str, Enum):
    INVERSE = "inverse"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class EvaderModel:
    variant: Variant = Variant.INVERSE
    theta: float = THETA
    gamma: float = GAMMA
    beta: float = BETA
    sigma: float = SIGMA
    d_min: float = D_MIN

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        for name in ("theta", "gamma", "beta", "sigma", "d_min"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DynamicsError(f"{name} must be positive, got {v}")


@dataclass(frozen=True)
class ModelTable:
    """Column-wise view of a list of ``EvaderModel`` for vectorised evaluation."""

    exponential: np.ndarray
    theta: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    sigma: np.ndarray
    d_min: np.ndarray

    @classmethod
    def from_models(cls, models: Sequence[EvaderModel]) -> "ModelTable":
        models = list(models)
        if not models:
            raise DynamicsError("at least one evader model is required")
        col = lambda name: np.array([getattr(mo, name) for mo in models], dtype=float)
        return cls(
            exponential=np.array([mo.variant is Variant.EXPONENTIAL for mo in models]),
            theta=col("theta"),
            gamma=col("gamma"),
            beta=col("beta"),
            sigma=col("sigma"),
            d_min=col("d_min"),
        )

    @classmethod
    def uniform(cls, m: int, model: EvaderModel | None = None) -> "ModelTable":
        return cls.from_models([model or EvaderModel()] * m)

    def __len__(self) -> int:
        return len(self.theta)

    def __getitem__(self, j: int) -> EvaderModel:
        return EvaderModel(
            Variant.EXPONENTIAL if self.exponential[j] else Variant.INVERSE,
            float(self.theta[j]),
            float(self.gamma[j]),
            float(self.beta[j]),
            float(self.sigma[j]),
            float(self.d_min[j]),
        )

    def take(self, idx) -> "ModelTable":
        idx = np.asarray(idx, dtype=int)
        return ModelTable(*(getattr(self, f)[idx] for f in self.__dataclass_fields__))


@dataclass(frozen=True)
class WorldState:
    evaders: np.ndarray  # (m, 2)
    herders: np.ndarray  # (n, 2)
    models: ModelTable
    time: float = 0.0

    def __post_init__(self):
        ev = np.array(self.evaders, dtype=float).reshape(-1, 2)
        he = np.array(self.herders, dtype=float).reshape(-1, 2)
        models = self.models
        if not isinstance(models, ModelTable):
            models = ModelTable.from_models(models)
        if len(ev) < 1 or len(he) < 1:
            raise DynamicsError("need at least one evader and one herder")
        if len(models) != len(ev):
            raise DynamicsError("one evader model per evader is required")
        if not (np.all(np.isfinite(ev)) and np.all(np.isfinite(he))):
            raise DynamicsError("non-finite agent position")
        ev.flags.writeable = False
        he.flags.writeable = False
        object.__setattr__(self, "evaders", ev)
        object.__setattr__(self, "herders", he)
        object.__setattr__(self, "models", models)

    @property
    def m(self) -> int:
        return len(self.evaders)

    @property
    def n(self) -> int:
        return len(self.herders)

    def with_positions(self, evaders=None, herders=None, time=None) -> "WorldState":
        return replace(
            self,
            evaders=self.evaders if evaders is None else evaders,
            herders=self.herders if herders is None else herders,
            time=self.time if time is None else time,
        )


# -- radial interaction primitives -------------------------------------------

def _herder_phi(r, tab: ModelTable, rows):
    """phi(r) and phi'(r) of the herder repulsion for evader rows ``rows``.

    ``r`` has shape (k, n); parameters broadcast along the herder axis.
    """
    exp = tab.exponential[rows][:, None]
    theta = tab.theta[rows][:, None]
    beta = tab.beta[rows][:, None]
    sigma = tab.sigma[rows][:, None]
    d_min = tab.d_min[rows][:, None]
    phi_inv = theta / r**3
    dphi_inv = -3.0 * theta / r**4
    g = np.exp(np.where(exp, (d_min - r) / sigma, 0.0))
    phi_exp = beta * g / r
    dphi_exp = beta * g * (-1.0 / (sigma * r) - 1.0 / r**2)
    return np.where(exp, phi_exp, phi_inv), np.where(exp, dphi_exp, dphi_inv)


def _evader_phi(r, gamma):
    return gamma / r**2, -2.0 * gamma / r**3


def _pairs(a: np.ndarray, b: np.ndarray):
    """Relative positions a_k - b_l, clamped distance, and clamp mask."""
    d = a[:, None, :] - b[None, :, :]
    raw = np.hypot(d[..., 0], d[..., 1])
    return d, np.maximum(raw, D_FLOOR), raw > D_FLOOR


def _check_rows(rows, m: int) -> np.ndarray:
    rows = np.asarray(rows, dtype=int).reshape(-1)
    if rows.size and (rows.min() < 0 or rows.max() >= m):
        raise DynamicsError("evader index out of range")
    return rows


# -- velocities ---------------------------------------------------------------

def herder_repulsion(w: WorldState, rows=None) -> np.ndarray:
    rows = np.arange(w.m) if rows is None else _check_rows(rows, w.m)
    d, r, _ = _pairs(w.evaders[rows], w.herders)
    phi, _ = _herder_phi(r, w.models, rows)
    return np.einsum("kn,knc->kc", phi, d)


def evader_repulsion(w: WorldState, rows=None) -> np.ndarray:
    rows = np.arange(w.m) if rows is None else _check_rows(rows, w.m)
    d, r, _ = _pairs(w.evaders[rows], w.evaders)
    phi, _ = _evader_phi(r, w.models.gamma[rows][:, None])
    phi[np.arange(len(rows)), rows] = 0.0  # no self-interaction
    return np.einsum("km,kmc->kc", phi, d)


def velocities(w: WorldState, rows=None) -> np.ndarray:
    """Unsaturated velocities of evaders ``rows`` (all by default), shape (k, 2)."""
    if not (np.all(np.isfinite(w.evaders)) and np.all(np.isfinite(w.herders))):
        raise DynamicsError("non-finite agent position")
    return herder_repulsion(w, rows) + evader_repulsion(w, rows)


def evader_velocity(j: int, w: WorldState) -> np.ndarray:
    return velocities(w, [j])[0]


def herd_velocity(w: WorldState) -> np.ndarray:
    """Stacked unsaturated velocity field of all evaders, shape (m, 2)."""
    return velocities(w)


# -- Jacobians ----------------------------------------------------------------

def _radial_blocks(d, r, active, phi, dphi):
    """d/da [phi(|a-b|) (a-b)] for every pair, shape (..., 2, 2)."""
    # inside the distance floor phi is frozen at phi(D_FLOOR), so phi' = 0
    coef = np.where(active, dphi / r, 0.0)
    outer = d[..., :, None] * d[..., None, :]
    return phi[..., None, None] * np.eye(2) + coef[..., None, None] * outer


def _check_selected(selected, w: WorldState) -> np.ndarray:
    sel = _check_rows(selected, w.m)
    if len(sel) > w.n:
        raise DynamicsError("more selected evaders than herders")
    if len(set(sel.tolist())) != len(sel):
        raise DynamicsError("selected evaders must be distinct")
    return sel


def jacobian_u(selected, w: WorldState) -> np.ndarray:
    """d f_sel / d u, shape (2p, 2n)."""
    sel = _check_selected(selected, w)
    d, r, active = _pairs(w.evaders[sel], w.herders)
    phi, dphi = _herder_phi(r, w.models, sel)
    blocks = -_radial_blocks(d, r, active, phi, dphi)  # (p, n, 2, 2)
    p, n = blocks.shape[:2]
    return blocks.transpose(0, 2, 1, 3).reshape(2 * p, 2 * n)


def jacobian_x(selected, w: WorldState, f_gain: float = 0.0) -> np.ndarray:
    """d h / d e over the selected evaders e, shape (2p, 2p).

    Non-selected evaders are frozen at their current positions: they shape
    the diagonal blocks through their repulsion but are not differentiated.
    ``f_gain`` adds the linear stabiliser term ``F = f_gain * I``.
    """
    sel = _check_selected(selected, w)
    p = len(sel)
    dh, rh, acth = _pairs(w.evaders[sel], w.herders)
    phi, dphi = _herder_phi(rh, w.models, sel)
    diag = _radial_blocks(dh, rh, acth, phi, dphi).sum(axis=1)  # (p, 2, 2)

    de, re, acte = _pairs(w.evaders[sel], w.evaders)
    phi, dphi = _evader_phi(re, w.models.gamma[sel][:, None])
    phi[np.arange(p), sel] = 0.0
    dphi[np.arange(p), sel] = 0.0
    eblocks = _radial_blocks(de, re, acte, phi, dphi)  # (p, m, 2, 2)
    diag = diag + eblocks.sum(axis=1)

    J = np.zeros((p, p, 2, 2))
    J[np.arange(p), np.arange(p)] = diag + f_gain * np.eye(2)
    J -= eblocks[:, sel]  # coupling between selected evaders
    return J.transpose(0, 2, 1, 3).reshape(2 * p, 2 * p)


# -- saturation ---------------------------------------------------------------

def saturate(v, v_max: float) -> np.ndarray:
    """Scale each 2-vector in ``v`` down to norm ``v_max`` where it exceeds it."""
    v = np.asarray(v, dtype=float)
    flat = v.reshape(-1, 2)
    norm = np.hypot(flat[:, 0], flat[:, 1])
    with np.errstate(over="ignore"):  # ratio is discarded where norm <= v_max
        scale = np.where(norm > v_max, v_max / np.where(norm > 0, norm, 1.0), 1.0)
    return (flat * scale[:, None]).reshape(v.shape)


def saturated_mask(v, v_max: float) -> np.ndarray:
    flat = np.asarray(v, dtype=float).reshape(-1, 2)
    return np.hypot(flat[:, 0], flat[:, 1]) > v_max
