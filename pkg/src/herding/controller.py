"""Implicit Control of the selected evaders.

With ``e`` the stacked selected evaders, the implicit function is

    h = f_sel(e, u) + F (e - 1 (x) x*) - xdot*

and the herder input evolves as ``u_dot = pinv(J_u) (-H h - J_x e_dot + dh_ref)``
so that ``dh/dt = -H h``. ``dh_ref = F xdot* + xddot*`` cancels the explicit
time dependence carried by a moving reference and vanishes for a fixed one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dynamics
from .dynamics import WorldState

SVD_RTOL = 1e-8  # singular values below SVD_RTOL * s_max are truncated
SVD_ATOL = 1e-12  # 1/s, J_u with s_max at or below this is treated as rank zero


class ControllerError(ValueError):
    pass


class ControllabilityLoss(ControllerError):
    """All singular values of J_u fell below the truncation threshold."""


@dataclass(frozen=True)
class Reference:
    position: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(2))
    acceleration: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        for name in ("position", "velocity", "acceleration"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(2)
            if not np.all(np.isfinite(v)):
                raise ControllerError(f"reference {name} must be finite")
            object.__setattr__(self, name, v)


def check_stability(f_gain: float, h_gain: float, p: int = 1) -> bool:
    """Negative definiteness of [[-F, I/2], [I/2, -H]] for F = f I, H = h I.

    With scalar gains the 4p x 4p matrix is a Kronecker product of the 2x2
    condensed matrix with the identity, so its eigenvalues are those of the
    condensed matrix. Sylvester's criterion on that matrix avoids the round-off
    an eigen-solver shows on the singular boundary.
    """
    if p < 1:
        raise ControllerError("p must be at least 1")
    return bool(f_gain > 0.0 and f_gain * h_gain - 0.25 > 0.0)


@dataclass(frozen=True)
class ControllerConfig:
    f_gain: float = 0.25
    h_gain: float = 50.0
    v_max: float = 4.0
    svd_rtol: float = SVD_RTOL
    reference_feedforward: bool = True

    def __post_init__(self):
        if not self.v_max > 0:
            raise ControllerError("v_max must be positive")
        if not 0.0 <= self.svd_rtol < 1.0:
            raise ControllerError("svd_rtol must lie in [0, 1)")
        if not check_stability(self.f_gain, self.h_gain):
            raise ControllerError(
                f"gains f_gain={self.f_gain}, h_gain={self.h_gain} violate the negative-definite block condition"
            )


def h_value(selected, w: WorldState, ref: Reference, cfg: ControllerConfig, f_sel=None) -> np.ndarray:
    """Implicit function over the selected evaders, shape (2p,)."""
    sel = np.asarray(selected, dtype=int).reshape(-1)
    if len(sel) > w.n:
        raise ControllerError("more selected evaders than herders")
    if f_sel is None:
        f_sel = dynamics.velocities(w, sel)
    f_sel = np.asarray(f_sel, dtype=float).reshape(-1, 2)
    if f_sel.shape[0] != len(sel):
        raise ControllerError("dimension mismatch between selection and velocities")
    err = w.evaders[sel] - ref.position
    return (f_sel + cfg.f_gain * err - ref.velocity).reshape(-1)


def pinv_solve(J: np.ndarray, rhs: np.ndarray, rtol: float | None = None) -> np.ndarray:
    """Minimum-norm least-squares solution of ``J x = rhs`` via truncated SVD."""
    rtol = SVD_RTOL if rtol is None else rtol
    U, s, Vt = np.linalg.svd(J, full_matrices=False)
    if s.size == 0 or not np.isfinite(s[0]) or s[0] <= SVD_ATOL:
        raise ControllabilityLoss("controllability loss")
    keep = s > rtol * s[0]
    coeff = (U[:, keep].T @ rhs) / s[keep]
    return Vt[keep].T @ coeff


def herder_velocity_update(
    selected,
    w: WorldState,
    ref: Reference,
    cfg: ControllerConfig,
    evader_rates=None,
) -> np.ndarray:
    """Herder velocities (n, 2) before saturation.

    ``evader_rates`` are the velocities the selected evaders will actually
    move with (e.g. after saturation); the unsaturated model is used when
    omitted.
    """
    sel = np.asarray(selected, dtype=int).reshape(-1)
    f_sel = dynamics.velocities(w, sel)
    rates = f_sel if evader_rates is None else np.asarray(evader_rates, dtype=float).reshape(-1, 2)
    h = h_value(sel, w, ref, cfg, f_sel)
    Ju = dynamics.jacobian_u(sel, w)
    Jx = dynamics.jacobian_x(sel, w, cfg.f_gain)
    rhs = -cfg.h_gain * h - Jx @ rates.reshape(-1)
    if cfg.reference_feedforward:
        dh_ref = cfg.f_gain * ref.velocity + ref.acceleration
        rhs = rhs + np.tile(dh_ref, len(sel))
    return pinv_solve(Ju, rhs, cfg.svd_rtol).reshape(-1, 2)
