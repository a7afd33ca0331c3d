import dataclasses

import numpy as np
import pytest

from herding.controller import Reference
from herding.dynamics import EvaderModel, ModelTable, WorldState
from herding.simulator import (
    ConfigError, SimConfig, advance, initialize, reference_at, run, step, write_trajectory_csv,
)


def test_initialize_ring():
    w = initialize(SimConfig(m=5, n=4))
    assert np.allclose(w.herders, [[90, 0], [20, 70], [-50, 0], [20, -70]], atol=1e-12)


def test_initialize_deterministic():
    a, b = initialize(SimConfig(seed=9)), initialize(SimConfig(seed=9))
    assert np.array_equal(a.evaders, b.evaders)
    assert not np.array_equal(a.evaders, initialize(SimConfig(seed=10)).evaders)


def test_initialize_mean():
    w = initialize(SimConfig(m=10_000, n=3))
    assert np.linalg.norm(w.evaders.mean(axis=0) - [20, 0]) < 0.5


def test_model_mix():
    assert not initialize(SimConfig(m=200, model_mix="AllInverse")).models.exponential.any()
    assert initialize(SimConfig(m=200, model_mix="AllExponential")).models.exponential.all()
    frac = initialize(SimConfig(m=4000, model_mix="Bernoulli(0.5)")).models.exponential.mean()
    assert abs(frac - 0.5) < 0.05
    with pytest.raises(ConfigError):
        SimConfig(model_mix="Bernoulli(2)")


def test_reference_values():
    cfg = SimConfig()
    r0 = reference_at(0.0, cfg)
    assert np.allclose(r0.position, [-35, -35]) and np.allclose(r0.velocity, 0)
    r = reference_at(160.0, cfg)
    assert np.allclose(r.velocity, [-0.2, 0.5])
    assert np.allclose(r.position, [-35, -35])
    for t in np.linspace(0, 400, 401):
        assert np.linalg.norm(reference_at(t, cfg).velocity) <= cfg.v_max
    with pytest.raises(ConfigError):
        reference_at(401.0, cfg)
    with pytest.raises(ConfigError):
        reference_at(-1.0, cfg)


def test_reference_continuity_and_derivative():
    cfg = SimConfig()
    a, b = reference_at(160 - 1e-9, cfg), reference_at(160 + 1e-9, cfg)
    assert np.linalg.norm(a.position - b.position) < 1e-8
    t, h = 250.0, 1e-5
    fd = (reference_at(t + h, cfg).position - reference_at(t - h, cfg).position) / (2 * h)
    assert np.allclose(fd, reference_at(t, cfg).velocity, atol=1e-8)


def test_config_validation():
    with pytest.raises(ConfigError, match="dt must be positive"):
        SimConfig(dt=0)
    with pytest.raises(ConfigError):
        SimConfig(m=0)
    with pytest.raises(ConfigError):
        SimConfig(v_max=0.1)  # reference faster than the agents


def test_fixed_point_without_motion():
    # symmetric herder pair: the evader's velocity cancels exactly
    w = WorldState([[0, 0]], [[-5, 0], [5, 0]], ModelTable.uniform(1))
    cfg = SimConfig(m=1, n=2)
    w2 = step(w, cfg, control=False)
    assert np.array_equal(w2.evaders, w.evaders)
    assert np.array_equal(w2.herders, w.herders)
    assert w2.time == pytest.approx(cfg.dt)


def test_single_euler_step():
    w = WorldState([[1, 0]], [[0, 0]], ModelTable.from_models([EvaderModel(theta=1.0)]))
    w2 = step(w, SimConfig(m=1, n=1), control=False)
    assert np.allclose(w2.evaders, [[1.04, 0]])


def test_mirror_symmetry_preserved():
    ev = np.array([[20, 0], [21, 1], [21, -1], [19, 0.5], [19, -0.5]], float)
    he = np.array([[10, 0], [30, 0], [20, 10], [20, -10]], float)
    cfg = SimConfig(m=5, n=4, reference=dataclasses.replace(SimConfig().reference, x_star=(0.0, 0.0)))
    w = WorldState(ev, he, ModelTable.uniform(5))
    w2, _ = advance(w, cfg)
    flip = np.array([1, -1])
    # the mirrored set maps onto itself: compare as multisets
    key = lambda a: np.array(sorted(map(tuple, np.round(a, 9))))
    assert np.allclose(key(w2.evaders * flip), key(w2.evaders), atol=1e-7)
    assert np.allclose(key(w2.herders * flip), key(w2.herders), atol=1e-7)


def test_run_lengths():
    assert len(run(SimConfig(t_end=0))) == 1
    assert SimConfig().steps + 1 == 10001
    assert SimConfig(t_end=1.0, dt=0.3).steps + 1 == 4


@pytest.fixture(scope="module")
def short_log():
    return run(SimConfig(m=12, n=3, t_end=8.0, seed=4))


def test_log_invariants(short_log):
    log = short_log
    assert len(log) == 201
    assert np.all(np.diff(log.t) > 0)
    vmax, dt = 4.0, log.dt
    for arr in (log.evaders, log.herders):
        sp = np.linalg.norm(np.diff(arr, axis=0), axis=2) / dt
        assert sp.max() <= vmax + 1e-9
    assert all(len(s) <= log.n for s in log.selected)
    assert log.abort_cause is None


def test_bit_identical(short_log, tmp_path):
    again = run(SimConfig(m=12, n=3, t_end=8.0, seed=4))
    assert np.array_equal(again.evaders, short_log.evaders)
    assert np.array_equal(again.herders, short_log.herders)
    write_trajectory_csv(short_log, tmp_path / "a.csv")
    write_trajectory_csv(again, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_csv_layout(short_log, tmp_path):
    p = tmp_path / "t.csv"
    write_trajectory_csv(short_log, p, stride=50)
    lines = p.read_text().splitlines()
    assert lines[0] == "t,kind,id,x,y,selected"
    per_step = short_log.m + short_log.n + 1
    assert len(lines) - 1 == 5 * per_step  # records 0, 50, 100, 150, 200
    kinds = [ln.split(",")[1] for ln in lines[1 : 1 + per_step]]
    assert kinds == ["E"] * short_log.m + ["H"] * short_log.n + ["R"]
    flags = [int(ln.split(",")[5]) for ln in lines[1 : 1 + short_log.m]]
    assert sum(flags) == len(short_log.selected[0])


def test_single_pair_approaches_reference():
    cfg = SimConfig(m=1, n=1, t_end=120.0, seed=1, init=dataclasses.replace(SimConfig().init, herder_radius=3.0))
    log = run(cfg)
    d = np.linalg.norm(log.evaders[:, 0] - log.ref_position, axis=1)
    assert d[int(100 / cfg.dt)] < d[0]
