import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from triwing.errors import OutOfDomain
from triwing.trajectories import (
    Circle,
    Hover,
    Line,
    TrajectorySpec,
    Waypoints,
    build,
    min_jerk,
    obstacle_cross_points,
    sample,
)

H = 1e-4


def fd_check(traj, times, tol_v=1e-6, tol_a=1e-5, tol_j=1e-3):
    for t in times:
        m, c, p = traj.sample(t - H), traj.sample(t), traj.sample(t + H)
        assert np.allclose((p.p - m.p) / (2 * H), c.v, atol=tol_v)
        assert np.allclose((p.v - m.v) / (2 * H), c.a, atol=tol_a)
        assert np.allclose((p.a - m.a) / (2 * H), c.j, atol=tol_j)


def test_min_jerk_boundary():
    assert min_jerk(0.0) == (0.0, 0.0, 0.0, 60.0)
    s, ds, dds, _ = min_jerk(1.0)
    assert (s, ds, dds) == (1.0, 0.0, 0.0)
    assert min_jerk(0.5)[1] == 1.875


def test_min_jerk_matches_polynomial():
    poly = np.polynomial.Polynomial([0, 0, 0, 10, -15, 6])
    for tau in np.linspace(0, 1, 11):
        got = min_jerk(tau)
        for k in range(4):
            assert got[k] == pytest.approx(poly.deriv(k)(tau), abs=1e-12)


def test_hover_derivatives_zero():
    traj = Hover([1, 2, 3], 5.0)
    for t in (0.0, 2.5, 5.0):
        s = traj.sample(t)
        assert np.array_equal(s.p, [1, 2, 3])
        assert not s.v.any() and not s.a.any() and not s.j.any()


def test_circle_centripetal():
    r, w = 0.5, 1.0
    traj = Circle([0, 0, 1], r, w, 20.0)
    for t in np.linspace(0, 20, 41):
        assert np.linalg.norm(traj.sample(t).a) == pytest.approx(r * w * w, rel=1e-12)


def test_circle_finite_differences():
    fd_check(Circle([0, 0, 1], 0.5, 1.0, 20.0), np.linspace(0.1, 19.9, 25))


def test_line_endpoints_and_peak():
    d = np.array([2.0, -1.0, 0.5])
    T = 4.0
    traj = Line([0, 0, 1], [0, 0, 1] + d, T)
    assert np.allclose(traj.sample(0).v, 0) and np.allclose(traj.sample(T).v, 0)
    speed = np.linalg.norm(traj.sample(T / 2).v)
    assert speed == pytest.approx(1.875 * np.linalg.norm(d) / T, rel=1e-12)
    ts = np.linspace(0, T, 4001)
    assert max(np.linalg.norm(traj.sample(t).v) for t in ts) == pytest.approx(speed, rel=1e-9)
    assert traj.peak_speed == pytest.approx(speed)


def test_line_finite_differences():
    fd_check(Line([0, 0, 0.5], [1.5, 0.4, 1.0], 3.0), np.linspace(0.01, 2.99, 30))


def test_waypoints_c2_at_joins():
    traj = Waypoints([(0, 0, 1), (1, 0, 1), (1, 1, 1.5), (0, 0, 1)], speed=0.5, blend_time=1.0)
    for k in traj.knots[1:-1]:
        before, after = traj.sample(k - 1e-9), traj.sample(k + 1e-9)
        assert np.allclose(before.v, after.v, atol=1e-6)
        assert np.allclose(before.a, after.a, atol=1e-6)
        assert np.allclose(traj.sample(k).p, traj.points[list(traj.knots).index(k)])


def test_waypoint_segment_time():
    traj = Waypoints([(0, 0, 1), (2, 0, 1), (2, 0.1, 1)], speed=0.5, blend_time=1.0)
    assert traj.times[0] == pytest.approx(1.875 * 2 / 0.5)
    assert traj.times[1] == 1.0  # short hop floored at the blend time


def test_waypoints_finite_differences():
    traj = Waypoints([(0, 0, 1), (1, 0, 1.2), (1.5, 0.5, 1)], speed=0.6, blend_time=1.0)
    ts = [t for t in np.linspace(0.05, traj.duration - 0.05, 40) if np.min(np.abs(traj.knots - t)) > 2e-3]
    fd_check(traj, ts)


def test_obstacle_cross_clears():
    spec = TrajectorySpec(kind="obstacle-cross", altitude=0.5, obstacle_x=1.0, obstacle_height=0.8, clearance=0.2)
    pts = obstacle_cross_points(spec)
    traj = build(spec)
    assert pts[0][2] == 0.5 and pts[-1][2] == 0.5
    for t in np.linspace(0, traj.duration, 2000):
        s = traj.sample(t)
        if abs(s.p[0] - 1.0) < 0.2 - 1e-9:
            assert s.p[2] >= 0.8 + 0.2 - 1e-9


def test_out_of_domain():
    traj = Line([0, 0, 0], [1, 0, 0], 2.0)
    with pytest.raises(OutOfDomain):
        traj.sample(-1e-9)
    with pytest.raises(OutOfDomain):
        traj.sample(2.0 + 1e-9)
    assert np.allclose(traj.clamped(5.0).p, [1, 0, 0])


def test_sample_from_spec():
    spec = TrajectorySpec(kind="circle", radius=0.5, omega=1.0, duration=10.0, center=(0, 0, 1))
    s = sample(spec, math.pi / 2)
    assert np.allclose(s.p, [0, 0.5, 1])


@pytest.mark.parametrize(
    "kwargs, msg",
    [
        ({"kind": "spiral"}, "kind"),
        ({"duration": 0.0}, "duration"),
        ({"kind": "circle", "radius": -1.0}, "radius"),
        ({"kind": "waypoints", "waypoints": [(0, 0, 0)]}, "two waypoints"),
    ],
)
def test_spec_invariants(kwargs, msg):
    with pytest.raises(ValueError, match=msg):
        TrajectorySpec(**kwargs).validate()


@settings(max_examples=40)
@given(st.floats(0.1, 3.0), st.floats(0.2, 4.0), st.floats(0.0, 1.0))
def test_circle_velocity_tangent(r, w, frac):
    traj = Circle([0, 0, 0], r, w, 10.0)
    s = traj.sample(frac * 10.0)
    assert abs(np.dot(s.v, s.p)) < 1e-9 * max(1.0, r * r * w)
    assert np.linalg.norm(s.v) == pytest.approx(r * w, rel=1e-12)
