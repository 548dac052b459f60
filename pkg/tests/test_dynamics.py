import math

import numpy as np
import pytest

from triwing.actuation import ControlWrench, VehicleParams
from triwing.dynamics import (
    NoiseConfig,
    SensorModel,
    SimConfig,
    YawDisturbance,
    ground_contact,
    heading,
    mechanical_energy,
    step_dynamics,
    world_angular_momentum,
)
from triwing.errors import NonFiniteState
from triwing.geom import EulerZXY, VehicleState, euler_zxy_to_rotation, orthonormality_error, rot_x, rot_z

G = 9.81
CFG = SimConfig()
ZERO = ControlWrench(0.0, 0.0, 0.0, 0.0)


def state(p=(0, 0, 1), v=(0, 0, 0), R=None, w=(0, 0, 0), grounded=False):
    return VehicleState(np.array(p, float), np.array(v, float), np.eye(3) if R is None else R, np.array(w, float), grounded)


def run(s, u, params, n, cfg=CFG):
    for _ in range(n):
        s = step_dynamics(s, u, params, cfg)
    return s


def test_free_fall(params):
    s = run(state(), ZERO, params, 1000)
    assert s.v[2] == pytest.approx(-G * 1.0, rel=1e-12)
    assert s.p[2] == pytest.approx(1.0 - 0.5 * G, rel=1e-12)


def test_hover_equilibrium(params):
    s0 = state(p=(0.3, -0.2, 1.0))
    s = run(s0, ControlWrench(params.mass * G, 0.0, 0.0), params, 1000)
    assert np.allclose(s.p, s0.p, atol=1e-13)
    assert np.allclose(s.v, 0.0, atol=1e-13)
    assert np.allclose(s.R, np.eye(3), atol=1e-15)


@pytest.mark.parametrize("axis", [0, 1, 2])
def test_principal_axis_spin(params, axis):
    w = np.zeros(3)
    w[axis] = 3.0
    s = run(state(w=w), ControlWrench(params.mass * G, 0, 0), params, 500)
    assert np.allclose(s.omega, w, atol=1e-12)


def test_torque_gives_angular_acceleration(params):
    tau = 1e-6
    s = step_dynamics(state(), ControlWrench(0.0, tau, 0.0), params, CFG)
    assert s.omega[0] == pytest.approx(tau / params.I[0, 0] * CFG.dt_physics, rel=1e-9)


def test_thrust_along_body_z(params):
    R = rot_x(0.3)
    s = step_dynamics(state(R=R), ControlWrench(params.mass * G, 0, 0), params, CFG, dt=1e-4)
    acc = s.v / 1e-4
    expected = G * R[:, 2] - np.array([0, 0, G])
    assert np.allclose(acc, expected, rtol=1e-6, atol=1e-9)


def test_energy_conserved_unpowered(params):
    s = state(p=(0, 0, 50.0), v=(1.0, -2.0, 3.0), w=(1.0, 2.0, 0.5))
    e0 = mechanical_energy(s, params)
    s = run(s, ZERO, params, 10_000)
    assert abs(mechanical_energy(s, params) - e0) / abs(e0) < 1e-6


def test_angular_momentum_conserved(params):
    s = state(w=(2.0, -1.0, 4.0))
    h0 = world_angular_momentum(s, params)
    s = run(s, ZERO, params, 5000)
    h = world_angular_momentum(s, params)
    assert np.linalg.norm(h - h0) / np.linalg.norm(h0) < 1e-6


@pytest.mark.slow
def test_orthonormality_million_steps():
    params = VehicleParams(inertia=((2.0e-5, 0, 0), (0, 3.1e-5, 0), (0, 0, 4.3e-5)))
    s = state(w=(5.0, 0.3, 2.0))
    worst = 0.0
    for i in range(1_000_000):
        s = step_dynamics(s, ZERO, params, CFG)
        if i % 10_000 == 0:
            worst = max(worst, orthonormality_error(s.R))
    worst = max(worst, orthonormality_error(s.R))
    assert worst < 1e-7
    assert abs(np.linalg.det(s.R) - 1.0) < 1e-9


def test_deterministic(params):
    u = ControlWrench(params.mass * G * 1.01, 1e-7, -2e-7, 3e-8)
    a = run(state(w=(0.1, 0.2, 0.3)), u, params, 300)
    b = run(state(w=(0.1, 0.2, 0.3)), u, params, 300)
    for x, y in ((a.p, b.p), (a.v, b.v), (a.R, b.R), (a.omega, b.omega)):
        assert x.tobytes() == y.tobytes()


def test_non_finite_raises(params):
    with pytest.raises(NonFiniteState):
        step_dynamics(state(), ControlWrench(float("inf"), 0, 0), params, CFG)


def test_ground_clamp():
    s = ground_contact(state(p=(1, 2, -0.001), v=(0.2, 0.0, -0.2)), friction=0.5)
    assert s.p[2] == 0.0 and s.v[2] == 0.0 and s.grounded
    assert s.v[0] == pytest.approx(0.1)


def test_ground_airborne_untouched():
    s0 = state(p=(0, 0, 0.5), v=(0.1, 0.0, -1.0))
    s = ground_contact(s0)
    assert np.array_equal(s.p, s0.p) and np.array_equal(s.v, s0.v) and not s.grounded


def test_liftoff_when_thrust_exceeds_weight(params):
    s = state(p=(0, 0, 0), grounded=True)
    s = step_dynamics(s, ControlWrench(1.2 * params.mass * G, 0, 0), params, CFG)
    s = ground_contact(s)
    assert s.v[2] > 0 and not s.grounded


def test_resting_on_ground_stays(params):
    s = state(p=(0, 0, 0), grounded=True)
    s = ground_contact(step_dynamics(s, ControlWrench(0.5 * params.mass * G, 0, 0), params, CFG))
    assert s.p[2] == 0.0 and s.grounded


# --- observations


def test_noiseless_observation_is_truth():
    R = euler_zxy_to_rotation(EulerZXY(0.1, -0.2, 0.7))
    s = state(p=(1, 2, 0.5), v=(0.1, 0.2, 0.3), R=R, w=(0.4, 0.5, 0.6))
    obs = SensorModel(NoiseConfig()).observe(s, 0.0)
    assert np.array_equal(obs.R, R)
    assert np.array_equal(obs.omega, s.omega)
    assert np.array_equal(obs.p, s.p)
    assert obs.altitude == 0.5
    assert np.array_equal(obs.v_flow, s.v[:2])


def test_observations_seeded():
    s = state(R=rot_z(0.3))
    a, b = SensorModel(NoiseConfig.realistic(), seed=4), SensorModel(NoiseConfig.realistic(), seed=4)
    for k in range(20):
        oa, ob = a.observe(s, k * 0.005), b.observe(s, k * 0.005)
        assert oa.R.tobytes() == ob.R.tobytes()
        assert oa.omega.tobytes() == ob.omega.tobytes()


def test_constant_yaw_drift():
    sm = SensorModel(NoiseConfig(yaw_drift_rate=math.radians(0.5)), rate=200)
    s = state()
    for k in range(12_001):
        obs = sm.observe(s, k / 200.0)
    assert math.degrees(obs.yaw) == pytest.approx(30.0, abs=1e-6)


def test_timestamps_must_increase():
    sm = SensorModel(NoiseConfig())
    sm.observe(state(), 1.0)
    with pytest.raises(ValueError):
        sm.observe(state(), 1.0)


def test_flow_invalid_above_range():
    obs = SensorModel(NoiseConfig(flow_max_altitude=1.0)).observe(state(p=(0, 0, 3.0)), 0.0)
    assert np.all(np.isnan(obs.v_flow))


def test_heading_matches_euler_yaw():
    for e in (EulerZXY(0.2, 0.3, 1.0), EulerZXY(-0.5, 2.5, -2.0)):
        assert heading(euler_zxy_to_rotation(e)) == pytest.approx(e.yaw, abs=1e-12)


def test_yaw_disturbance_seeded():
    a, b = YawDisturbance(1e-7, 1e-8, seed=3), YawDisturbance(1e-7, 1e-8, seed=3)
    assert [a.step(0.01) for _ in range(10)] == [b.step(0.01) for _ in range(10)]
    assert YawDisturbance(2e-7).step(0.01) == 2e-7


def test_sim_config_invariants():
    with pytest.raises(ValueError):
        SimConfig(dt_physics=0.0).validate()
    with pytest.raises(ValueError):
        SimConfig(control_rate=400, sensor_rate=200).validate()
    with pytest.raises(ValueError):
        SimConfig(sensor_rate=2000).validate()
