"""Observer law checks against closed-form linear ODE solutions.

The update rules are forward Euler, so a decay with continuous rate c
shows up discretely as (1 - c dt)^k.  Where a test compares against an
exponential it uses the discretization-corrected rate
c_d = -ln(1 - c dt) / dt, which the sampled sequence matches to rounding
error; the raw rate c is then checked at the tolerance the step size
actually supports.
"""

import math

import numpy as np
import pytest

from voltsag.geom import EulerAngles, theta_vector
from voltsag.observers import (GainConditionError, IntegratorState, NdoState,
                               SmoState, VdoState, integrator_force,
                               integrator_update, ndo_output, ndo_update,
                               smo_torque_estimate, smo_update,
                               vdo_force_estimate, vdo_output, vdo_update)
from voltsag.sim import rk4_step
from voltsag.vehicle import (BatteryModel, BatteryParams, ControlInput,
                             VehicleParams, VehicleState)

MASS = 2.0
ZETA = np.array([0.0, 0.0, 2.0])
HOVER = EulerAngles(0.0, 0.0, 0.0)


def run_vdo_constant_deficit(deficit: float, est0: float, dt: float, n: int):
    """Open-loop rig: no applied force, no gravity term, constant attitude.

    The plant reduces to m v_dot = theta * deficit, so the fed velocity
    v(t) = theta * deficit * t / m is exact and the observer error obeys
    the pure decay of the error ODE.
    """
    theta = theta_vector(HOVER)
    st = VdoState.initial(ZETA, np.zeros(3), MASS, estimate0=est0)
    zero = np.zeros(3)
    estimates = []
    for k in range(n):
        v = theta * (deficit * (k * dt) / MASS)
        st = vdo_update(st, v, zero, zero, HOVER, MASS, dt)
        estimates.append(st.delta_f_hat)
    return np.array(estimates)


def test_vdo_constant_deficit_matches_corrected_exponential():
    # zeta @ theta = 2/s at hover; advertised rate for the dt=0.01 loop
    c, dt, n = 2.0, 0.01, 400
    est = run_vdo_constant_deficit(5.0, 0.0, dt, n)
    err = 5.0 - est
    c_d = -math.log(1.0 - c * dt) / dt
    t = np.arange(n) * dt
    expect = 5.0 * np.exp(-c_d * t)
    np.testing.assert_allclose(err, expect, rtol=1e-4)
    # and the uncorrected halving claim holds at the coarse tolerance
    k_half = int(round(math.log(2.0) / c / dt))
    assert err[k_half] / err[0] == pytest.approx(0.5, rel=0.02)


def test_vdo_rate_recovers_gain_after_correction():
    c, dt, n = 2.0, 1e-3, 1000
    est = run_vdo_constant_deficit(3.0, 0.0, dt, n)
    err = 3.0 - est
    # fitted discrete rate, mapped back through the Euler step
    c_d_meas = (math.log(err[0]) - math.log(err[-1])) / ((n - 1) * dt)
    c_meas = (1.0 - math.exp(-c_d_meas * dt)) / dt
    assert c_meas == pytest.approx(c, rel=1e-3)


def test_vdo_fixed_point_stays_zero():
    gravity = np.array([0.0, 0.0, MASS * 9.81])
    st = VdoState.initial(ZETA, np.zeros(3), MASS)
    for _ in range(100):
        st = vdo_update(st, np.zeros(3), -gravity, gravity, HOVER, MASS, 0.01)
        assert st.delta_f_hat == 0.0
    assert st.aux == 0.0


def test_vdo_ramp_steady_state_error():
    # deficit 0.1 t with slope mu = 0.1 N/s; residual error -> mu / (zeta theta)
    mu, c, dt = 0.1, 2.0, 1e-3
    theta = theta_vector(HOVER)
    st = VdoState.initial(ZETA, np.zeros(3), MASS)
    zero = np.zeros(3)
    for k in range(8000):
        t = k * dt
        v = theta * (0.5 * mu * t * t / MASS)  # integral of the ramp
        st = vdo_update(st, v, zero, zero, HOVER, MASS, dt)
    err = mu * (7999 * dt) - st.delta_f_hat
    assert abs(err) == pytest.approx(mu / c, rel=0.05)


def test_vdo_gain_condition_raises():
    st = VdoState.initial(np.array([0.0, 0.0, -2.0]), np.zeros(3), MASS)
    with pytest.raises(GainConditionError):
        vdo_update(st, np.zeros(3), np.zeros(3), np.zeros(3), HOVER, MASS, 1e-3)
    # tipped far enough that the z-gain row loses observability
    st = VdoState.initial(ZETA, np.zeros(3), MASS)
    with pytest.raises(GainConditionError):
        vdo_update(st, np.zeros(3), np.zeros(3), np.zeros(3),
                   EulerAngles(0.0, 2.0, 0.0), MASS, 1e-3)


def test_vdo_initial_estimate_round_trip():
    v0 = np.array([0.3, -0.2, 1.1])
    st = VdoState.initial(ZETA, v0, MASS, estimate0=3.0)
    assert vdo_output(st, v0, MASS) == pytest.approx(3.0, rel=1e-12)


def test_vdo_force_estimate_direction():
    st = VdoState(zeta=ZETA, aux=0.0, delta_f_hat=5.0)
    assert np.array_equal(vdo_force_estimate(st, HOVER), [0.0, 0.0, 5.0])
    rng = np.random.default_rng(10)
    for _ in range(20):
        eta = EulerAngles(*rng.uniform(-1.0, 1.0, size=3))
        assert np.linalg.norm(vdo_force_estimate(st, eta)) == pytest.approx(5.0, abs=1e-12)
    st = VdoState(zeta=ZETA, aux=0.0, delta_f_hat=0.0)
    assert np.array_equal(vdo_force_estimate(st, EulerAngles(0.4, 0.1, -0.2)),
                          np.zeros(3))


# ---------------------------------------------------------------------------
# momentum observer

def test_ndo_constant_force_decay_per_axis():
    force = np.array([0.3, -0.2, 0.5])
    gain = np.array([2.0, 2.0, 2.0])
    dt, n = 1e-3, 1500
    st = NdoState.initial(gain, np.zeros(3), MASS)
    zero = np.zeros(3)
    errs = []
    for k in range(n):
        v = force * (k * dt) / MASS
        st = ndo_update(st, v, zero, zero, MASS, dt)
        errs.append(force - st.force_hat)
    errs = np.array(errs)
    t = np.arange(n) * dt
    c_d = -math.log(1.0 - 2.0 * dt) / dt
    expect = np.outer(np.exp(-c_d * t), force)
    np.testing.assert_allclose(errs, expect, rtol=1e-9, atol=1e-12)
    # raw e^{-2t} claim at the tolerance dt supports
    np.testing.assert_allclose(errs[:, 2], force[2] * np.exp(-2.0 * t), rtol=5e-3)


def test_ndo_zero_stays_zero():
    st = NdoState.initial(np.array([2.0, 2.0, 2.0]), np.zeros(3), MASS)
    gravity = np.array([0.0, 0.0, MASS * 9.81])
    for _ in range(200):
        st = ndo_update(st, np.zeros(3), -gravity, gravity, MASS, 1e-3)
    assert np.array_equal(st.force_hat, np.zeros(3))


def test_ndo_and_vdo_agree_at_hover_equilibrium():
    # hovering against a 5 N deficit: thrust force cancels gravity plus the
    # disturbance, v stays zero, both observers must find (0, 0, 5)
    deficit = 5.0
    gravity = np.array([0.0, 0.0, MASS * 9.81])
    force = -gravity - theta_vector(HOVER) * deficit
    dt, n = 1e-3, 10000
    vdo = VdoState.initial(ZETA, np.zeros(3), MASS)
    ndo = NdoState.initial(np.array([2.0, 2.0, 2.0]), np.zeros(3), MASS)
    v = np.zeros(3)
    for _ in range(n):
        vdo = vdo_update(vdo, v, force, gravity, HOVER, MASS, dt)
        ndo = ndo_update(ndo, v, force, gravity, MASS, dt)
    assert vdo.delta_f_hat == pytest.approx(deficit, abs=1e-6)
    np.testing.assert_allclose(ndo.force_hat, [0.0, 0.0, deficit], atol=1e-6)
    np.testing.assert_allclose(ndo.force_hat, vdo_force_estimate(vdo, HOVER),
                               atol=1e-6)


# ---------------------------------------------------------------------------
# integrator augmentation

def test_integrator_zero_error_stays_zero():
    st = IntegratorState(gain_diag=np.array([0.5, 0.5, 0.5]))
    for _ in range(50):
        st = integrator_update(st, np.zeros(3), 0.01)
    assert np.array_equal(integrator_force(st), np.zeros(3))


def test_integrator_accumulates_constant_error():
    st = IntegratorState(gain_diag=np.ones(3))
    e = np.array([0.0, 0.0, 0.1])
    for _ in range(100):
        st = integrator_update(st, e, 0.01)
    assert st.integral[2] == pytest.approx(0.1, rel=1e-12)
    assert integrator_force(st)[2] == pytest.approx(0.1, rel=1e-12)


def test_integrator_clamps():
    st = IntegratorState(gain_diag=np.ones(3), clamp=1.0)
    e = np.array([10.0, -10.0, 0.0])
    for _ in range(1000):
        st = integrator_update(st, e, 0.01)
    assert st.integral[0] == 1.0
    assert st.integral[1] == -1.0


# ---------------------------------------------------------------------------
# sliding-mode torque observer

def test_smo_zero_disturbance_chatters_inside_band():
    J = np.array([0.02, 0.02, 0.035])
    dt = 1e-3
    # tiny initial mismatch so the sliding terms actually switch
    st = SmoState.initial(np.array([0.0, 0.0, 1e-6]))
    omega = np.zeros(3)
    worst = 0.0
    for k in range(3000):
        st = smo_update(st, omega, J, np.zeros(3), dt)
        if k > 500:
            worst = max(worst, float(np.linalg.norm(smo_torque_estimate(st, J))))
    band = st.l3 * dt * float(J.max())
    assert worst <= band * 1.000001


def test_smo_exact_zero_error_is_finite():
    J = np.array([0.02, 0.02, 0.035])
    omega = np.array([0.1, -0.2, 0.05])
    st = SmoState.initial(omega)
    st = smo_update(st, omega, J, np.zeros(3), 1e-3)
    assert np.all(np.isfinite(st.mu_hat))
    assert np.all(np.isfinite(st.xi2))


def test_smo_recovers_constant_torque_disturbance():
    bias = np.array([0.02, 0.0, 0.0])
    bat = BatteryModel(BatteryParams(delta_f0=0.0, k_d=0.0, torque_bias=bias,
                                     torque_noise_amp=0.0), seed=0)
    params = VehicleParams()
    state = VehicleState.level()
    st = SmoState.initial(state.omega)
    u = ControlInput(0.0, np.zeros(3))
    dt = 1e-3
    for k in range(2000):
        t = k * dt
        st = smo_update(st, state.omega, params.inertia_diag, u.torque, dt)
        if t > st.t0:
            err = np.linalg.norm(smo_torque_estimate(st, params.inertia_diag) - bias)
            assert err < 0.1 * np.linalg.norm(bias)
        state = rk4_step(state, u, t, dt, params, bat)


def test_smo_tracks_under_applied_torque():
    # known control torque spins the body; the estimate must still isolate
    # the disturbance component
    bias = np.array([0.0, 0.015, -0.01])
    bat = BatteryModel(BatteryParams(delta_f0=0.0, k_d=0.0, torque_bias=bias,
                                     torque_noise_amp=0.0), seed=0)
    params = VehicleParams()
    state = VehicleState.level()
    st = SmoState.initial(state.omega)
    dt = 1e-3
    for k in range(2500):
        t = k * dt
        tau = np.array([0.01 * math.sin(2.0 * t), 0.0, 0.005 * math.cos(t)])
        st = smo_update(st, state.omega, params.inertia_diag, tau, dt)
        state = rk4_step(state, ControlInput(0.0, tau), t, dt, params, bat)
    err = np.linalg.norm(smo_torque_estimate(st, params.inertia_diag) - bias)
    assert err < 0.1 * np.linalg.norm(bias)
