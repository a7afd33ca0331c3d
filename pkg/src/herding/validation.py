"""Self-check suites: Jacobians vs finite differences, hull and K-means oracles,
gain stability and the imposed h dynamics.

Each suite returns a ``Check`` so the CLI can print one line per property and
tests can assert on the same code path. Jacobian functions are injectable so a
deliberately broken one can be shown to fail.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import dynamics
from .clustering import kmeans
from .controller import ControllerConfig, Reference, check_stability, h_value, herder_velocity_update
from .dynamics import EvaderModel, ModelTable, Variant, WorldState
from .geometry import EPS_GEO, convex_hull

FD_STEP = 1e-6  # m
JAC_RTOL = 1e-5
H_FD_RTOL = 0.05
H_FD_ATOL = 1e-6
H_RATE_RTOL = 0.2


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  {self.detail}".rstrip()


# -- Jacobians ------------------------------------------------------------------

def random_state(rng, variant: Variant, m: int = 5, n: int = 3, min_sep: float = 0.5, box: float = 6.0) -> WorldState:
    """Random world with all agents at least ``min_sep`` apart."""
    while True:
        pts = rng.uniform(-box, box, size=(m + n, 2))
        d = np.hypot(*(pts[:, None] - pts[None]).transpose(2, 0, 1))
        if np.min(d[np.triu_indices(m + n, 1)]) >= min_sep:
            break
    return WorldState(pts[:m], pts[m:], ModelTable.uniform(m, EvaderModel(variant)))


def fd_jacobians(selected, w: WorldState, f_gain: float, eps: float = FD_STEP):
    """Central-difference d h/d u and d h/d e (other evaders frozen)."""
    sel = np.asarray(selected, dtype=int)
    ref = Reference(np.zeros(2))
    cfg_f = lambda ww: dynamics.velocities(ww, sel).reshape(-1) + f_gain * (ww.evaders[sel] - ref.position).reshape(-1)

    Ju = np.zeros((2 * len(sel), 2 * w.n))
    for c in range(2 * w.n):
        hp, hm = w.herders.copy(), w.herders.copy()
        hp.flat[c] += eps
        hm.flat[c] -= eps
        Ju[:, c] = (cfg_f(w.with_positions(herders=hp)) - cfg_f(w.with_positions(herders=hm))) / (2 * eps)

    Jx = np.zeros((2 * len(sel), 2 * len(sel)))
    for c in range(2 * len(sel)):
        j, ax = sel[c // 2], c % 2
        ep, em = w.evaders.copy(), w.evaders.copy()
        ep[j, ax] += eps
        em[j, ax] -= eps
        Jx[:, c] = (cfg_f(w.with_positions(evaders=ep)) - cfg_f(w.with_positions(evaders=em))) / (2 * eps)
    return Ju, Jx


def _rel_err(a: np.ndarray, ref: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(ref))), 1e-300)
    return float(np.max(np.abs(a - ref))) / scale


def jacobian_suite(
    variant: Variant,
    n_states: int = 100,
    seed: int = 0,
    jac_u=dynamics.jacobian_u,
    jac_x=dynamics.jacobian_x,
    f_gain: float = 0.25,
) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_states):
        m, n = int(rng.integers(2, 7)), int(rng.integers(1, 4))
        w = random_state(rng, variant, m, n)
        p = int(rng.integers(1, min(m, n) + 1))
        sel = rng.choice(m, size=p, replace=False)
        fu, fx = fd_jacobians(sel, w, f_gain)
        worst = max(worst, _rel_err(jac_u(sel, w), fu), _rel_err(jac_x(sel, w, f_gain), fx))
    return Check(f"jacobians[{variant.value}]", worst <= JAC_RTOL, f"max rel err {worst:.2e} over {n_states} states")


# -- convex hull ------------------------------------------------------------------

def brute_force_extreme(points: np.ndarray, eps: float = EPS_GEO) -> set[int]:
    """Indices of extreme points: not inside (or on) any triangle or segment of other points.

    Duplicates are represented by their first occurrence.
    """
    pts = np.asarray(points, dtype=float)
    _, first = np.unique(pts, axis=0, return_index=True)
    first = np.sort(first)
    if len(first) == 1:
        return {int(first[0])}
    q = pts[first]
    keep = set()
    for a in range(len(q)):
        others = np.delete(np.arange(len(q)), a)
        p = q[a]
        pairs = np.array(list(itertools.combinations(others, 2)), dtype=int).reshape(-1, 2)
        A, B = q[pairs[:, 0]], q[pairs[:, 1]]
        ab = B - A
        L2 = np.einsum("ij,ij->i", ab, ab)
        cross = (ab[:, 0] * (p[1] - A[:, 1]) - ab[:, 1] * (p[0] - A[:, 0])) / np.sqrt(L2)
        t = np.einsum("ij,ij->i", p - A, ab) / L2
        inside = bool(np.any((np.abs(cross) <= eps) & (t >= 0.0) & (t <= 1.0)))
        if not inside and len(others) >= 3:
            tri = np.array(list(itertools.combinations(others, 3)))
            A, B, C = q[tri[:, 0]], q[tri[:, 1]], q[tri[:, 2]]

            def side(u, v):
                e = v - u
                return (e[:, 0] * (p[1] - u[:, 1]) - e[:, 1] * (p[0] - u[:, 0])) / np.hypot(e[:, 0], e[:, 1])

            s1, s2, s3 = side(A, B), side(B, C), side(C, A)
            ccw = np.all(np.stack([s1, s2, s3]) >= -eps, axis=0)
            cw = np.all(np.stack([s1, s2, s3]) <= eps, axis=0)
            area = np.abs((B - A)[:, 0] * (C - A)[:, 1] - (B - A)[:, 1] * (C - A)[:, 0])
            inside = bool(np.any((ccw | cw) & (area > eps)))
        if not inside:
            keep.add(int(first[a]))
    return keep


def random_point_set(rng) -> np.ndarray:
    size = int(rng.integers(1, 61))
    kind = rng.integers(0, 4)
    if kind == 0:  # uniform disc
        r, a = np.sqrt(rng.random(size)), rng.uniform(0, 2 * np.pi, size)
        return np.column_stack([r * np.cos(a), r * np.sin(a)]) * 10
    if kind == 1:  # gaussian
        return rng.normal(size=(size, 2))
    if kind == 2:  # integer grid with duplicates and collinear runs
        return rng.integers(-3, 4, size=(size, 2)).astype(float)
    pts = rng.uniform(-5, 5, size=(size, 2))  # with repeated rows
    if size > 2:
        pts[rng.integers(0, size, size // 3)] = pts[0]
    return pts


def hull_suite(n_instances: int = 200, seed: int = 0) -> Check:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_instances):
        pts = random_point_set(rng)
        if set(convex_hull(pts).vertex_indices) != brute_force_extreme(pts):
            bad += 1
    return Check("convex_hull vs brute force", bad == 0, f"{n_instances - bad}/{n_instances} instances agree")


# -- K-means ------------------------------------------------------------------

def exhaustive_kmeans_cost(points: np.ndarray, k: int) -> float:
    """Optimal within-cluster squared error over every partition into k non-empty groups."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    best = np.inf
    # fix point 0 in group 0 to cut label symmetry
    for rest in itertools.product(range(k), repeat=n - 1):
        lab = np.array((0, *rest))
        if len(np.unique(lab)) != k:
            continue
        cost = 0.0
        for c in range(k):
            g = pts[lab == c]
            cost += float(np.sum((g - g.mean(axis=0)) ** 2))
        best = min(best, cost)
    return best


def kmeans_suite(n_instances: int = 100, seed: int = 0, min_rate: float = 0.95, max_excess: float = 0.05) -> Check:
    rng = np.random.default_rng(seed)
    hits, worst = 0, 0.0
    for i in range(n_instances):
        size = int(rng.integers(2, 9))
        k = int(rng.integers(1, min(3, size) + 1))
        pts = rng.normal(size=(size, 2)) * rng.uniform(0.5, 5)
        got = kmeans(pts, k, seed=i).cost
        opt = exhaustive_kmeans_cost(pts, k)
        excess = (got - opt) / max(opt, 1e-12)
        if excess <= 1e-9:
            hits += 1
        worst = max(worst, excess)
    ok = hits >= min_rate * n_instances and worst <= max_excess
    return Check("kmeans vs exhaustive optimum", ok, f"{hits}/{n_instances} optimal, worst excess {worst:.2%}")


# -- gains ------------------------------------------------------------------

def stability_suite() -> Check:
    cases = [((0.25, 50.0), True), ((0.1, 0.1), False), ((0.5, 0.5), False)]
    ok = all(check_stability(f, h) == want for (f, h), want in cases)
    return Check("stability gate", ok, "(0.25, 50) stable; (0.1, 0.1) and (0.5, 0.5) not")


# -- imposed h dynamics ---------------------------------------------------------

def h_trajectory(w: WorldState, selected, ref: Reference, cfg: ControllerConfig, dt: float, steps: int,
                 v_max: float | None = None):
    """Euler-integrate the closed loop with a fixed selection.

    Velocities are saturated at ``v_max`` when given. Returns (h history
    (steps+1, 2p), commanded herder speed history (steps, n)).
    """
    sel = np.asarray(selected, dtype=int)
    hs, speeds = [h_value(sel, w, ref, cfg)], []
    for _ in range(steps):
        u_dot = herder_velocity_update(sel, w, ref, cfg)
        x_dot = dynamics.herd_velocity(w)
        speeds.append(np.hypot(u_dot[:, 0], u_dot[:, 1]))
        if v_max is not None:
            u_dot, x_dot = dynamics.saturate(u_dot, v_max), dynamics.saturate(x_dot, v_max)
        w = w.with_positions(evaders=w.evaders + dt * x_dot, herders=w.herders + dt * u_dot, time=w.time + dt)
        hs.append(h_value(sel, w, ref, cfg))
    return np.array(hs), np.array(speeds)


def h_scenario(p: int = 1, seed: int = 0):
    """p evaders each with a herder placed so that h starts small but non-zero."""
    rng = np.random.default_rng(seed)
    cfg = ControllerConfig()
    ref = Reference(np.array([-4.0, 0.0]))
    ev = np.column_stack([np.zeros(p), 6.0 * np.arange(p)])
    # a lone Inverse herder at distance sqrt(theta/|f*|) behind each evader cancels h
    fstar = -cfg.f_gain * (ev - ref.position)
    r = np.sqrt(dynamics.THETA / np.hypot(fstar[:, 0], fstar[:, 1]))
    he = ev - fstar / np.hypot(fstar[:, 0], fstar[:, 1])[:, None] * r[:, None]
    he = he + rng.normal(scale=0.05, size=he.shape)
    w = WorldState(ev, he, ModelTable.uniform(p))
    return w, list(range(p)), ref, cfg


def h_dynamics_residual(hs: np.ndarray, dt: float, h_gain: float) -> np.ndarray:
    """Per-step ||dh/dt + H h|| - (rtol ||H h|| + atol); non-positive means within bound."""
    dh = (hs[1:] - hs[:-1]) / dt
    lhs = np.linalg.norm(dh + h_gain * hs[:-1], axis=1)
    bound = H_FD_RTOL * np.linalg.norm(h_gain * hs[:-1], axis=1) + H_FD_ATOL
    return lhs - bound


def h_decay_suite(dt: float = 1e-3, steps: int = 200, v_max: float = 4.0) -> Check:
    """Exponential rate of ||h|| in a 1-evader/1-herder Inverse scenario vs H."""
    w, sel, ref, cfg = h_scenario(1)
    hs, speeds = h_trajectory(w, sel, ref, cfg, dt, steps)
    norm = np.linalg.norm(hs, axis=1)
    use = norm > 1e-9
    t = np.arange(len(norm))[use] * dt
    rate = -np.polyfit(t, np.log(norm[use]), 1)[0]
    unsat = bool(np.all(speeds <= v_max))
    ok = unsat and abs(rate - cfg.h_gain) <= H_RATE_RTOL * cfg.h_gain
    return Check("h decay rate", ok, f"fitted {rate:.1f}/s vs H={cfg.h_gain:g}/s, unsaturated={unsat}")


def run_all() -> list[Check]:
    return [
        jacobian_suite(Variant.INVERSE, n_states=30),
        jacobian_suite(Variant.EXPONENTIAL, n_states=30),
        hull_suite(60),
        kmeans_suite(100),
        stability_suite(),
        h_decay_suite(),
    ]
