"""Closed-loop scenario runner.

Fixed-step RK4 physics at dt (1 ms by default) with a two-rate controller
on top: the rotational loop every 2 ms, the translational loop every 10 ms,
a 5:1 tick ratio.  Controller outputs are zero-order-held between ticks.
Records are logged at a configurable decimation of the physics rate and
the tracking metrics are computed from the logged rows.

Runs are deterministic: the only randomness is the battery noise table,
which is seeded from the config.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .control import (CascadeController, ControlLimits, DegenerateThrustError,
                      RotationalGains, Setpoint, TranslationalGains)
from .geom import euler_from_rotation, orthonormalize
from .observers import GainConditionError
from .vehicle import (BatteryModel, BatteryParams, ConfigError, ControlInput,
                      VehicleParams, VehicleState, dynamics_deriv)

TRANS_PERIOD = 0.01    # s, translational loop
ROT_PERIOD = 0.002     # s, rotational loop
DIVERGE_RADIUS = 100.0  # m of position error that counts as lost


class NonFiniteError(FloatingPointError):
    """Integration produced NaN or infinity."""


class EmptySeriesError(ValueError):
    """Metrics requested over zero samples."""


class DivergedError(RuntimeError):
    """Position error left the divergence radius; carries the partial log."""

    def __init__(self, message: str, result: "ScenarioResult" = None):
        super().__init__(message)
        self.result = result

    def __reduce__(self):
        return (DivergedError, (self.args[0], self.result))


# ---------------------------------------------------------------------------
# reference trajectory

@dataclass
class TrajectoryParams:
    """Circular sweep with a vertical bob; radius 0 degenerates to hover."""

    radius: float = 2.0        # m
    period: float = 30.0       # s per revolution
    altitude: float = 2.0      # m above ground (z_d = -altitude)
    z_amplitude: float = 0.5   # m


def reference_trajectory(t: float, traj: TrajectoryParams) -> Setpoint:
    """Position, velocity and acceleration feedforward at time t."""
    w = 2.0 * math.pi / traj.period
    s, c = math.sin(w * t), math.cos(w * t)
    p_d = np.array([traj.radius * s,
                    traj.radius * c,
                    -traj.altitude - traj.z_amplitude * s])
    v_d = np.array([traj.radius * w * c,
                    -traj.radius * w * s,
                    -traj.z_amplitude * w * c])
    a_ff = np.array([-traj.radius * w * w * s,
                     -traj.radius * w * w * c,
                     traj.z_amplitude * w * w * s])
    return Setpoint(p_d=p_d, v_d=v_d, a_ff=a_ff, yaw_d=0.0)


# ---------------------------------------------------------------------------
# integrator

def rk4_step(state: VehicleState, u: ControlInput, t: float, dt: float,
             params: VehicleParams, battery: BatteryModel | None = None) -> VehicleState:
    """One RK4 step with zero-order-held input; R is re-orthonormalized."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    half = 0.5 * dt
    k1 = dynamics_deriv(state, u, t, params, battery)
    s2 = VehicleState(state.p + half * k1[0], state.v + half * k1[1],
                      state.R + half * k1[2], state.omega + half * k1[3])
    k2 = dynamics_deriv(s2, u, t + half, params, battery)
    s3 = VehicleState(state.p + half * k2[0], state.v + half * k2[1],
                      state.R + half * k2[2], state.omega + half * k2[3])
    k3 = dynamics_deriv(s3, u, t + half, params, battery)
    s4 = VehicleState(state.p + dt * k3[0], state.v + dt * k3[1],
                      state.R + dt * k3[2], state.omega + dt * k3[3])
    k4 = dynamics_deriv(s4, u, t + dt, params, battery)
    sixth = dt / 6.0
    p = state.p + sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0])
    v = state.v + sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1])
    R = orthonormalize(state.R + sixth * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2]))
    omega = state.omega + sixth * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3])
    if not math.isfinite(float(p.sum() + v.sum() + omega.sum() + R.sum())):
        raise NonFiniteError(f"state no longer finite at t = {t + dt:.4f} s")
    return VehicleState(p, v, R, omega)


# ---------------------------------------------------------------------------
# metrics

@dataclass
class Metrics:
    """Root-mean-square and mean-absolute tracking errors.

    Per-axis entries treat each scalar error series on its own; the _pos
    aggregates apply the same two formulas to the per-sample Euclidean
    distance series, which keeps mae <= rmse in every slot.
    """

    n: int
    rmse: np.ndarray     # (3,)
    mae: np.ndarray      # (3,)
    rmse_pos: float
    mae_pos: float


def series_metrics(errors) -> tuple:
    """(rmse, mae) of a scalar error series."""
    e = np.asarray(errors, dtype=float).ravel()
    if e.size == 0:
        raise EmptySeriesError("empty error series")
    return float(np.sqrt(np.mean(e * e))), float(np.mean(np.abs(e)))


def compute_metrics(desired, actual) -> Metrics:
    """Tracking metrics between (n, 3) desired and actual series."""
    d = np.asarray(desired, dtype=float)
    a = np.asarray(actual, dtype=float)
    if d.shape != a.shape:
        raise ValueError(f"shape mismatch {d.shape} vs {a.shape}")
    if d.ndim != 2 or d.shape[1] != 3:
        raise ValueError("expected (n, 3) series")
    if d.shape[0] == 0:
        raise EmptySeriesError("empty series")
    err = d - a
    rmse = np.sqrt(np.mean(err * err, axis=0))
    mae = np.mean(np.abs(err), axis=0)
    dist = np.sqrt(np.sum(err * err, axis=1))
    rmse_pos, mae_pos = series_metrics(dist)
    return Metrics(n=d.shape[0], rmse=rmse, mae=mae, rmse_pos=rmse_pos, mae_pos=mae_pos)


# ---------------------------------------------------------------------------
# scenario configuration and runner

@dataclass
class ObserverConfig:
    zeta: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 2.0]))
    vdo_initial: float = 0.0
    ndo_gain_diag: np.ndarray = field(default_factory=lambda: np.array([2.0, 2.0, 2.0]))
    ki_diag: np.ndarray = field(default_factory=lambda: np.array([0.5, 0.5, 0.5]))
    integrator_clamp: float = 2.0
    smo_l1: float = 6.0
    smo_l2: float = 4.0
    smo_l3: float = 2.0
    smo_t0: float = 1.0


@dataclass
class SimConfig:
    dt: float = 1e-3
    duration: float = 280.0
    seed: int = 42
    decimation: int = 10
    variant: str = "vdo"
    smo_mode: str = "on"
    omega_feedforward: str = "zero"
    initial_pos_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    battery: BatteryParams = field(default_factory=BatteryParams)
    trajectory: TrajectoryParams = field(default_factory=TrajectoryParams)
    translational: TranslationalGains = field(default_factory=TranslationalGains)
    rotational: RotationalGains = field(default_factory=RotationalGains)
    limits: ControlLimits = field(default_factory=ControlLimits)
    observers: ObserverConfig = field(default_factory=ObserverConfig)


RECORD_COLUMNS = (
    "t",
    "pd_x", "pd_y", "pd_z", "p_x", "p_y", "p_z",
    "vd_x", "vd_y", "vd_z", "v_x", "v_y", "v_z",
    "etad_roll", "etad_pitch", "etad_yaw", "eta_roll", "eta_pitch", "eta_yaw",
    "f", "tau_x", "tau_y", "tau_z",
    "dlf_true", "dlf_hat", "dFhat_x", "dFhat_y", "dFhat_z",
    "taudis_x", "taudis_y", "taudis_z", "tauhat_x", "tauhat_y", "tauhat_z",
    "sat",
)
_COL = {name: i for i, name in enumerate(RECORD_COLUMNS)}


@dataclass
class ScenarioResult:
    data: np.ndarray            # (rows, len(RECORD_COLUMNS))
    columns: tuple
    metrics: Metrics
    runtime_s: float
    max_ortho_defect: float
    saturated_ticks: int
    trans_ticks: int
    rot_ticks: int
    diverged: bool = False

    def col(self, name: str) -> np.ndarray:
        return self.data[:, _COL[name]]


def _check_schedule(cfg: SimConfig) -> tuple:
    dt = cfg.dt
    if dt <= 0.0:
        raise ConfigError("dt must be positive")
    if cfg.duration <= 0.0:
        raise ConfigError("duration must be positive")
    if cfg.decimation < 1 or int(cfg.decimation) != cfg.decimation:
        raise ConfigError("decimation must be a positive integer")
    steps_rot = round(ROT_PERIOD / dt)
    steps_trans = round(TRANS_PERIOD / dt)
    if steps_rot < 1 or abs(steps_rot * dt - ROT_PERIOD) > 1e-12:
        raise ConfigError(f"dt = {dt} must divide the {ROT_PERIOD} s rotational period")
    if abs(steps_trans * dt - TRANS_PERIOD) > 1e-12:
        raise ConfigError(f"dt = {dt} must divide the {TRANS_PERIOD} s translational period")
    n_steps = round(cfg.duration / dt)
    if abs(n_steps * dt - cfg.duration) > 1e-9:
        raise ConfigError("duration must be a multiple of dt")
    return n_steps, steps_trans, steps_rot


def run_scenario(cfg: SimConfig) -> ScenarioResult:
    """Run one closed-loop scenario and return the log plus metrics.

    Raises ConfigError before any work when the configuration is
    inconsistent, DivergedError (carrying the partial log) when tracking
    blows past the divergence radius.
    """
    n_steps, steps_trans, steps_rot = _check_schedule(cfg)
    params = cfg.vehicle
    battery = BatteryModel(cfg.battery, cfg.seed)
    obs_cfg = cfg.observers

    sp0 = reference_trajectory(0.0, cfg.trajectory)
    state = VehicleState.level(p=sp0.p_d + cfg.initial_pos_offset, v=sp0.v_d)

    ctrl = CascadeController(
        params, cfg.translational, cfg.rotational, cfg.limits,
        variant=cfg.variant, smo_mode=cfg.smo_mode,
        zeta=obs_cfg.zeta, vdo_initial=obs_cfg.vdo_initial,
        ndo_gain_diag=obs_cfg.ndo_gain_diag,
        ki_diag=obs_cfg.ki_diag, integrator_clamp=obs_cfg.integrator_clamp,
        smo_l1=obs_cfg.smo_l1, smo_l2=obs_cfg.smo_l2, smo_l3=obs_cfg.smo_l3,
        smo_t0=obs_cfg.smo_t0,
        omega_feedforward=cfg.omega_feedforward,
        initial_state=state,
        true_torque_dis=battery.torque_disturbance,
        dt_trans=TRANS_PERIOD, dt_rot=ROT_PERIOD)

    decim = int(cfg.decimation)
    n_rows = (n_steps + decim - 1) // decim
    data = np.empty((n_rows, len(RECORD_COLUMNS)))
    u = ControlInput.zero()
    sat = 0.0
    saturated_ticks = 0
    trans_ticks = 0
    rot_ticks = 0
    max_defect = 0.0
    eye = np.eye(3)
    row = 0
    t_wall = time.perf_counter()

    def _result(rows: int, diverged: bool) -> ScenarioResult:
        body = data[:rows]
        if rows > 0:
            metrics = compute_metrics(body[:, 1:4], body[:, 4:7])
        else:
            metrics = Metrics(0, np.full(3, np.nan), np.full(3, np.nan), np.nan, np.nan)
        return ScenarioResult(
            data=body.copy(), columns=RECORD_COLUMNS, metrics=metrics,
            runtime_s=time.perf_counter() - t_wall,
            max_ortho_defect=max_defect, saturated_ticks=saturated_ticks,
            trans_ticks=trans_ticks, rot_ticks=rot_ticks, diverged=diverged)

    for k in range(n_steps):
        t = k * cfg.dt
        try:
            if k % steps_trans == 0:
                ctrl.translational_tick(t, state, reference_trajectory(t, cfg.trajectory))
                trans_ticks += 1
            if k % steps_rot == 0:
                alloc = ctrl.rotational_tick(t, state)
                u = alloc.achieved
                sat = 1.0 if alloc.saturated else 0.0
                saturated_ticks += alloc.saturated
                rot_ticks += 1
        except (DegenerateThrustError, GainConditionError) as exc:
            # an attitude this far gone is unrecoverable; report it as a
            # divergence so the partial log still reaches the caller
            raise DivergedError(f"controller gave up at t = {t:.3f} s: {exc}",
                                _result(row, diverged=True)) from exc
        if k % decim == 0:
            sp = reference_trajectory(t, cfg.trajectory)
            eta = euler_from_rotation(state.R)
            defect = float(np.abs(state.R.T @ state.R - eye).max())
            if defect > max_defect:
                max_defect = defect
            d = ctrl.eta_d
            data[row] = (
                t,
                sp.p_d[0], sp.p_d[1], sp.p_d[2], state.p[0], state.p[1], state.p[2],
                sp.v_d[0], sp.v_d[1], sp.v_d[2], state.v[0], state.v[1], state.v[2],
                d.roll, d.pitch, d.yaw, eta.roll, eta.pitch, eta.yaw,
                u.thrust, u.torque[0], u.torque[1], u.torque[2],
                battery.delta_f(t), ctrl.delta_f_hat,
                ctrl.force_dis_hat[0], ctrl.force_dis_hat[1], ctrl.force_dis_hat[2],
                *battery.torque_disturbance(t),
                ctrl.tau_dis_hat[0], ctrl.tau_dis_hat[1], ctrl.tau_dis_hat[2],
                sat,
            )
            row += 1
        try:
            state = rk4_step(state, u, t, cfg.dt, params, battery)
        except NonFiniteError as exc:
            raise DivergedError(f"state went non-finite at t = {t + cfg.dt:.3f} s",
                                _result(row, diverged=True)) from exc
        e = state.p - ctrl.sp.p_d
        if not (float(e @ e) <= DIVERGE_RADIUS * DIVERGE_RADIUS):
            raise DivergedError(
                f"position error left the {DIVERGE_RADIUS:.0f} m radius at t = {t + cfg.dt:.3f} s",
                _result(row, diverged=True))

    return _result(row, diverged=False)


def run_many(cfgs, max_workers: int | None = None):
    """Run several scenarios concurrently (process pool), preserving order.

    Each worker gets only its own config; there is no shared mutable state,
    so results are identical to running sequentially.
    """
    cfgs = list(cfgs)
    if len(cfgs) == 1:
        return [run_scenario(cfgs[0])]
    import concurrent.futures as cf
    workers = max_workers or min(len(cfgs), 4)
    with cf.ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_scenario, c) for c in cfgs]
        out = []
        for f in futures:
            out.append(f.result())
    return out


# ---------------------------------------------------------------------------
# record persistence

def write_records_csv(result: ScenarioResult, path) -> None:
    """Write the log as CSV with a fixed header; output is byte-stable."""
    header = ",".join(result.columns)
    np.savetxt(path, result.data, fmt="%.17g", delimiter=",",
               header=header, comments="")


def load_records_csv(path) -> tuple:
    """Read back a records CSV, returning (columns, data)."""
    with open(path, "r") as fh:
        header = fh.readline().strip()
    cols = tuple(header.split(","))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return cols, data
