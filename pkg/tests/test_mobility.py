import numpy as np
import pytest
from scipy import stats as sps

from dynrgg.mobility import WorldConfig, init_world, positions_at, run, step, world_from_agents
from dynrgg.mobility import _same_state


def one_agent(x, y, z, s, m=5):
    return world_from_agents(WorldConfig(n=1, r=0.1, s=s, m=m), [[x, y]], [z])


@pytest.mark.parametrize("kw", [dict(n=0), dict(r=0.0), dict(r=-1.0), dict(s=-0.1), dict(m=0),
                                dict(s=float("inf")), dict(m=1.5)])
def test_world_config_rejects_invalid(kw):
    base = dict(n=5, r=0.1, s=0.01, m=1)
    base.update(kw)
    with pytest.raises(ValueError):
        WorldConfig(**base)


def test_init_world_is_deterministic_and_canonical():
    cfg = WorldConfig(n=50, r=0.1, s=0.01, m=3, seed=42)
    a, b = init_world(cfg), init_world(cfg)
    assert a.same_as(b)
    assert a.t == 0 and len(a.agents) == 50
    assert np.all((a.points >= 0) & (a.points < 1))
    assert np.all((a.heading >= 0) & (a.heading < 1))
    assert not np.array_equal(init_world(cfg, trial=1).x, a.x)
    assert not np.array_equal(init_world(WorldConfig(n=50, r=0.1, s=0.01, m=3, seed=43)).x, a.x)


def test_step_examples():
    w = step(one_agent(0.5, 0.5, 0.0, 0.25))
    assert w.points[0] == pytest.approx([0.75, 0.5])
    w = step(one_agent(0.9, 0.5, 0.0, 0.2))
    assert w.points[0] == pytest.approx([0.1, 0.5])
    w = step(one_agent(0.5, 0.5, 0.25, 0.1))
    assert w.points[0] == pytest.approx([0.5, 0.6])


def test_zero_step_length_freezes_positions():
    w0 = init_world(WorldConfig(n=20, r=0.1, s=0.0, m=2, seed=1))
    w = run(WorldConfig(n=20, r=0.1, s=0.0, m=2, seed=1), 7)
    np.testing.assert_array_equal(w.points, w0.points)


def test_step_length_above_one_wraps():
    w = step(one_agent(0.5, 0.5, 0.0, 1.25))
    assert w.points[0] == pytest.approx([0.75, 0.5])


def test_step_does_not_mutate_and_is_repeatable():
    w = init_world(WorldConfig(n=10, r=0.1, s=0.02, m=1, seed=3))
    before = (w.x.copy(), w.heading.copy(), w.rng.bit_generator.state)
    a, b = step(w), step(w)
    assert a.same_as(b)
    np.testing.assert_array_equal(w.x, before[0])
    np.testing.assert_array_equal(w.heading, before[1])
    assert _same_state(w.rng.bit_generator.state, before[2])


def test_headings_refresh_every_step_when_m_is_one():
    w = init_world(WorldConfig(n=30, r=0.1, s=0.01, m=1, seed=9))
    nxt = step(w)
    assert not np.array_equal(nxt.heading, w.heading)


def test_headings_held_for_m_steps():
    m = 4
    cfg = WorldConfig(n=25, r=0.1, s=0.01, m=m, seed=2)
    states = []
    run(cfg, 13, lambda a, b: states.append(b))
    headings = [init_world(cfg).heading] + [s.heading for s in states]
    for t in range(1, 14):
        same = np.array_equal(headings[t], headings[t - 1])
        assert same == (t % m != 0), t


def test_straight_line_between_refreshes():
    m, s = 6, 0.013
    cfg = WorldConfig(n=8, r=0.1, s=s, m=m, seed=4)
    pts = [init_world(cfg).points]
    run(cfg, 2 * m, lambda a, b: pts.append(b.points))
    steps = [(b - a + 0.5) % 1.0 - 0.5 for a, b in zip(pts, pts[1:])]
    for k in range(1, m):
        np.testing.assert_allclose(steps[k], steps[0], atol=1e-12)
    assert not np.allclose(steps[m], steps[0])
    np.testing.assert_allclose(np.hypot(*np.array(steps).transpose(2, 0, 1)), s, atol=1e-12)


def test_one_interval_is_a_straight_segment_of_length_ms():
    m, s = 5, 0.01
    cfg = WorldConfig(n=1, r=0.1, s=s, m=m, seed=8)
    start = init_world(cfg)
    end = run(cfg, m)
    z = start.heading[0]
    want = np.array([start.x[0] + m * s * np.cos(2 * np.pi * z), start.y[0] + m * s * np.sin(2 * np.pi * z)]) % 1.0
    np.testing.assert_allclose(end.points[0], want, atol=1e-12)


def test_run_zero_steps_never_calls_observer():
    calls = []
    cfg = WorldConfig(n=5, r=0.1, s=0.1, m=2, seed=0)
    w = run(cfg, 0, lambda a, b: calls.append(1))
    assert calls == [] and w.same_as(init_world(cfg))
    with pytest.raises(ValueError):
        run(cfg, -1)


def test_run_is_deterministic_and_sees_consecutive_pairs():
    cfg = WorldConfig(n=12, r=0.1, s=0.03, m=3, seed=5)
    trace1, trace2 = [], []
    run(cfg, 9, lambda a, b: trace1.append((a.t, b.t, b.x.copy())))
    run(cfg, 9, lambda a, b: trace2.append((a.t, b.t, b.x.copy())))
    assert [(a, b) for a, b, _ in trace1] == [(t, t + 1) for t in range(9)]
    for (_, _, x1), (_, _, x2) in zip(trace1, trace2):
        np.testing.assert_array_equal(x1, x2)


def test_observer_errors_propagate():
    def boom(a, b):
        raise RuntimeError("observer failed")

    with pytest.raises(RuntimeError):
        run(WorldConfig(n=3, r=0.1, s=0.1), 2, boom)


def test_world_from_agents_validation():
    cfg = WorldConfig(n=2, r=0.1, s=0.1)
    with pytest.raises(ValueError):
        world_from_agents(cfg, [[0.1, 0.1]], [0.0])
    with pytest.raises(ValueError):
        world_from_agents(cfg, [[0.1, 0.1], [1.0, 0.2]], [0.0, 0.5])


def test_initial_positions_uniform_over_seeds():
    xs = np.concatenate([init_world(WorldConfig(n=10_000, r=0.01, s=0.0, seed=k)).x for k in range(100)])
    assert sps.kstest(xs, "uniform").pvalue > 0.01


def test_positions_stay_uniform_after_moving():
    cfg = lambda k: WorldConfig(n=500, r=0.05, s=0.02, m=7, seed=k)  # noqa: E731
    pts = np.concatenate([positions_at(cfg(k), 200) for k in range(40)])
    assert sps.kstest(pts[:, 0], "uniform").pvalue > 0.01
    assert sps.kstest(pts[:, 1], "uniform").pvalue > 0.01
    counts = np.histogram2d(pts[:, 0], pts[:, 1], bins=10, range=[[0, 1], [0, 1]])[0].ravel()
    assert sps.chisquare(counts).pvalue > 0.01
