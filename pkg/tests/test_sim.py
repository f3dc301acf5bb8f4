"""Scenario runner checks: trajectory, integrator, metrics, scheduler,
determinism, divergence handling.
"""

import dataclasses
import math

import numpy as np
import pytest

from voltsag.config import default_config
from voltsag.control import RotationalGains
from voltsag.sim import (DivergedError, EmptySeriesError, NonFiniteError,
                         TrajectoryParams, compute_metrics, load_records_csv,
                         reference_trajectory, rk4_step, run_many,
                         run_scenario, write_records_csv)
from voltsag.vehicle import (BatteryParams, ConfigError, ControlInput,
                             VehicleParams, VehicleState)

QUIET_BATTERY = BatteryParams(delta_f0=0.0, k_d=0.0,
                              torque_bias=np.zeros(3), torque_noise_amp=0.0)
HOVER_TRAJ = TrajectoryParams(radius=0.0, period=30.0, altitude=2.0, z_amplitude=0.0)


def quiet_config(**kw):
    cfg = dataclasses.replace(default_config(), battery=QUIET_BATTERY, **kw)
    return cfg


# ---------------------------------------------------------------------------
# reference trajectory

def test_trajectory_frozen_points():
    traj = TrajectoryParams()
    sp = reference_trajectory(0.0, traj)
    np.testing.assert_allclose(sp.p_d, [0.0, 2.0, -2.0], atol=1e-15)
    sp = reference_trajectory(traj.period / 4.0, traj)
    np.testing.assert_allclose(sp.p_d, [2.0, 0.0, -2.5], atol=1e-12)


def test_trajectory_initial_velocity():
    traj = TrajectoryParams()
    sp = reference_trajectory(0.0, traj)
    T = traj.period
    np.testing.assert_allclose(sp.v_d, [4.0 * math.pi / T, 0.0, -math.pi / T],
                               atol=1e-15)


def test_trajectory_derivatives_consistent():
    traj = TrajectoryParams(radius=1.5, period=20.0, altitude=3.0, z_amplitude=0.4)
    h = 1e-6
    for t in (0.0, 3.7, 11.2):
        sp = reference_trajectory(t, traj)
        plus = reference_trajectory(t + h, traj)
        minus = reference_trajectory(t - h, traj)
        np.testing.assert_allclose(sp.v_d, (plus.p_d - minus.p_d) / (2 * h), atol=1e-6)
        np.testing.assert_allclose(sp.a_ff, (plus.v_d - minus.v_d) / (2 * h), atol=1e-6)


# ---------------------------------------------------------------------------
# integrator

def test_rk4_free_fall_is_polynomial_exact():
    params = VehicleParams()
    st = VehicleState.level()
    dt = 1e-3
    for k in range(1000):
        st = rk4_step(st, ControlInput.zero(), k * dt, dt, params)
    assert st.p[2] == pytest.approx(0.5 * 9.81, abs=1e-10)
    assert st.v[2] == pytest.approx(9.81, abs=1e-10)


def test_rk4_rejects_nonpositive_dt():
    params = VehicleParams()
    st = VehicleState.level()
    with pytest.raises(ValueError):
        rk4_step(st, ControlInput.zero(), 0.0, 0.0, params)
    with pytest.raises(ValueError):
        rk4_step(st, ControlInput.zero(), 0.0, -1e-3, params)


def test_rk4_flags_nonfinite_states():
    params = VehicleParams()
    st = VehicleState.level()
    st.v = np.array([np.nan, 0.0, 0.0])
    with pytest.raises(NonFiniteError):
        rk4_step(st, ControlInput.zero(), 0.0, 1e-3, params)


def test_rk4_fourth_order_convergence():
    # tumbling torque-free body; halving dt cuts the error 16x
    params = VehicleParams()
    u = ControlInput.zero()

    def integrate(dt, T=1.0):
        st = VehicleState(np.zeros(3), np.zeros(3), np.eye(3),
                          np.array([1.2, -0.7, 0.5]))
        for k in range(round(T / dt)):
            st = rk4_step(st, u, k * dt, dt, params)
        return st

    def err(st, ref):
        return math.sqrt(float(np.sum((st.omega - ref.omega) ** 2))
                         + float(np.sum((st.R - ref.R) ** 2)))

    ref = integrate(0.008 / 20.0)
    ratio = err(integrate(0.008), ref) / err(integrate(0.004), ref)
    assert 12.8 < ratio < 19.2


# ---------------------------------------------------------------------------
# metrics

def test_metrics_hand_fixture():
    # ten z-axis errors: three 0.1s, four 0.2s, one 0.3, two zeros, mixed signs
    # sum of squares 0.28, sum of magnitudes 1.4
    ez = np.array([0.1, -0.2, 0.3, 0.0, -0.1, 0.2, -0.2, 0.1, 0.0, -0.2])
    desired = np.zeros((10, 3))
    actual = np.zeros((10, 3))
    actual[:, 2] = -ez
    m = compute_metrics(desired, actual)
    assert m.n == 10
    assert m.rmse[2] == pytest.approx(math.sqrt(0.028), rel=1e-12)
    assert m.mae[2] == pytest.approx(0.14, rel=1e-12)
    assert m.rmse[0] == 0.0 and m.mae[1] == 0.0
    # scalar aggregates run over per-sample distances, which here reduce
    # to |e_z|, so they match the z column
    assert m.rmse_pos == pytest.approx(m.rmse[2], rel=1e-12)
    assert m.mae_pos == pytest.approx(m.mae[2], rel=1e-12)


def test_metrics_constant_error():
    desired = np.zeros((25, 3))
    actual = np.full((25, 3), 0.0)
    actual[:, 1] = 0.1
    m = compute_metrics(desired, actual)
    assert m.rmse[1] == pytest.approx(0.1, rel=1e-12)
    assert m.mae[1] == pytest.approx(0.1, rel=1e-12)


def test_metrics_two_sample_pair():
    desired = np.zeros((2, 3))
    actual = np.zeros((2, 3))
    actual[:, 0] = [0.3, -0.4]
    m = compute_metrics(desired, actual)
    assert m.rmse[0] == pytest.approx(math.sqrt(0.125), rel=1e-12)
    assert round(m.rmse[0], 4) == 0.3536
    assert m.mae[0] == pytest.approx(0.35, rel=1e-12)


def test_metrics_zero_error():
    a = np.random.default_rng(12).standard_normal((40, 3))
    m = compute_metrics(a, a.copy())
    assert np.all(m.rmse == 0.0) and np.all(m.mae == 0.0)
    assert m.rmse_pos == 0.0 and m.mae_pos == 0.0


def test_metrics_mae_never_exceeds_rmse():
    rng = np.random.default_rng(13)
    for _ in range(200):
        n = int(rng.integers(2, 60))
        desired = rng.standard_normal((n, 3))
        actual = desired + rng.standard_normal((n, 3)) * rng.uniform(0.01, 2.0)
        m = compute_metrics(desired, actual)
        assert np.all(m.mae <= m.rmse + 1e-15)
        assert m.mae_pos <= m.rmse_pos + 1e-15


def test_metrics_input_validation():
    with pytest.raises(EmptySeriesError):
        compute_metrics(np.zeros((0, 3)), np.zeros((0, 3)))
    with pytest.raises(ValueError):
        compute_metrics(np.zeros((5, 3)), np.zeros((4, 3)))
    with pytest.raises(ValueError):
        compute_metrics(np.zeros((5, 2)), np.zeros((5, 2)))


# ---------------------------------------------------------------------------
# scheduler and config guards

def test_schedule_tick_ratio_is_five_to_one():
    res = run_scenario(quiet_config(duration=1.0))
    assert res.trans_ticks == 100
    assert res.rot_ticks == 500
    assert res.rot_ticks == 5 * res.trans_ticks


def test_schedule_rejects_bad_steps():
    with pytest.raises(ConfigError):
        run_scenario(quiet_config(dt=0.0))
    with pytest.raises(ConfigError):
        run_scenario(quiet_config(duration=-1.0))
    with pytest.raises(ConfigError):
        run_scenario(quiet_config(dt=3e-4))   # does not divide the 2 ms loop
    with pytest.raises(ConfigError):
        run_scenario(quiet_config(decimation=0))


def test_hover_regulation_without_disturbance():
    cfg = quiet_config(duration=10.0, trajectory=HOVER_TRAJ, variant="baseline",
                       smo_mode="off")
    res = run_scenario(cfg)
    err = np.linalg.norm(res.data[:, 4:7] - res.data[:, 1:4], axis=1)
    assert err.max() < 1e-6
    np.testing.assert_allclose(res.col("f"), 2.0 * 9.81, atol=1e-9)
    assert res.saturated_ticks == 0


def test_zero_disturbance_variants_agree():
    # with nothing to estimate every compensation path is a no-op and the
    # logged trajectories coincide
    base = quiet_config(duration=5.0, trajectory=HOVER_TRAJ)
    r1 = []
    for variant in ("baseline", "integrator", "vdo", "ndo"):
        res = run_scenario(dataclasses.replace(base, variant=variant))
        r1.append(res.metrics.rmse_pos)
    assert max(r1) - min(r1) < 1e-6


def test_determinism_same_seed_binary_equal(tmp_path):
    cfg = dataclasses.replace(default_config(), duration=3.0)
    a = run_scenario(cfg)
    b = run_scenario(cfg)
    assert np.array_equal(a.data, b.data)
    pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
    write_records_csv(a, pa)
    write_records_csv(b, pb)
    assert pa.read_bytes() == pb.read_bytes()


def test_different_seed_changes_torque_noise_only_paths():
    cfg = dataclasses.replace(default_config(), duration=3.0)
    a = run_scenario(cfg)
    b = run_scenario(dataclasses.replace(cfg, seed=7))
    assert not np.array_equal(a.col("taudis_x"), b.col("taudis_x"))


def test_records_csv_round_trip(tmp_path):
    res = run_scenario(quiet_config(duration=1.0))
    path = tmp_path / "records.csv"
    write_records_csv(res, path)
    names, data = load_records_csv(path)
    assert tuple(names) == tuple(res.columns)
    assert np.array_equal(data, res.data)   # %.17g keeps float64 exact


def test_result_column_accessor():
    res = run_scenario(quiet_config(duration=1.0))
    assert np.array_equal(res.col("t"), res.data[:, 0])
    with pytest.raises(KeyError):
        res.col("nope")


def test_divergence_carries_partial_log():
    # attitude-loop gain past the latching stability limit (bisection puts
    # the threshold near k_eta ~ 930 with the default inner gains)
    cfg = dataclasses.replace(
        default_config(), duration=20.0, variant="baseline", smo_mode="off",
        rotational=RotationalGains(k_eta_diag=np.full(3, 1200.0),
                                   k_pp_diag=np.full(3, 40.0),
                                   k_ii_diag=np.full(3, 20.0)))
    with pytest.raises(DivergedError) as exc_info:
        run_scenario(cfg)
    partial = exc_info.value.result
    assert partial.diverged
    assert 0 < len(partial.data) < 2000
    assert np.all(np.isfinite(partial.data))


def test_run_many_matches_sequential():
    cfgs = [quiet_config(duration=1.0, variant=v) for v in ("baseline", "vdo")]
    results = run_many(cfgs, max_workers=2)
    for cfg, res in zip(cfgs, results):
        again = run_scenario(cfg)
        assert np.array_equal(res.data, again.data)
