"""Cascade flight controller.

Outer translational loop (100 Hz): PD with acceleration feedforward,

    a_d = Kp e_p + Kv e_v - g e3 + a_ff
    F_d = m a_d - force_dis_hat

where force_dis_hat is whatever the configured variant believes the
disturbance force to be (zero for the plain baseline).  The desired force
is converted to a desired attitude and collective thrust by pointing the
body z axis against F_d, with the yaw degree of freedom fixed by the
setpoint.  Tilt and thrust magnitude are clamped to the flight envelope.

Inner rotational loop (500 Hz): PI on body rates seeded by an attitude
proportional term,

    q_d     = omega_d + C(eta)^-1 Keta e_eta
    e_q     = q_d - omega
    alpha_d = Kpp e_q + Kii * integral(e_q), integral gated on after t0
    tau_d   = J alpha_d - tau_dis_hat + omega x J omega

Outer-loop outputs are latched between its ticks, so the inner loop always
tracks the attitude computed at the most recent 100 Hz update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import observers as obs
from .geom import (EulerAngles, body_rate_matrix, euler_from_rotation,
                   theta_vector, wrap_angle)
from .vehicle import ControlInput, VehicleParams, VehicleState, allocate_rotors, _cross


class DegenerateThrustError(ValueError):
    """Requested force too small or pointing where no attitude can realize it."""


@dataclass
class TranslationalGains:
    kp_diag: np.ndarray = field(default_factory=lambda: np.array([4.0, 4.0, 4.0]))   # 1/s^2
    kv_diag: np.ndarray = field(default_factory=lambda: np.array([4.0, 4.0, 4.0]))   # 1/s


@dataclass
class RotationalGains:
    k_eta_diag: np.ndarray = field(default_factory=lambda: np.array([8.0, 8.0, 8.0]))    # 1/s
    k_pp_diag: np.ndarray = field(default_factory=lambda: np.array([40.0, 40.0, 40.0]))  # 1/s
    k_ii_diag: np.ndarray = field(default_factory=lambda: np.array([20.0, 20.0, 20.0]))  # 1/s^2


@dataclass
class ControlLimits:
    tilt_max: float = math.radians(45.0)   # rad
    f_min: float = 1e-3                    # N, below this the direction is meaningless
    thrust_min_frac: float = 0.1           # of hover weight
    thrust_max_frac: float = 2.5

    def thrust_bounds(self, mass: float, gravity: float) -> tuple:
        w = mass * gravity
        return self.thrust_min_frac * w, self.thrust_max_frac * w


@dataclass
class Setpoint:
    p_d: np.ndarray
    v_d: np.ndarray
    a_ff: np.ndarray
    yaw_d: float = 0.0


def translational_control(sp: Setpoint, p, v, force_dis_hat,
                          gains: TranslationalGains, mass: float, gravity: float) -> np.ndarray:
    """Desired earth-frame force for the outer loop."""
    e_p = sp.p_d - p
    e_v = sp.v_d - v
    a_d = gains.kp_diag * e_p + gains.kv_diag * e_v + sp.a_ff
    a_d = a_d - np.array([0.0, 0.0, gravity])
    return mass * a_d - force_dis_hat


def attitude_from_force(force_d, yaw_d: float, limits: ControlLimits,
                        thrust_min: float, thrust_max: float):
    """Desired attitude and collective thrust realizing force_d.

    The body z axis is pointed along -force_d (tilt-minimal choice for the
    given yaw), the tilt clamped to limits.tilt_max preserving azimuth, and
    the thrust magnitude clamped to [thrust_min, thrust_max].

    Returns (EulerAngles, thrust).  Raises DegenerateThrustError when the
    force is too small to define a direction, or points so far downward
    that no clamped attitude makes sense (fully inverted request).
    """
    fx, fy, fz = float(force_d[0]), float(force_d[1]), float(force_d[2])
    n = math.sqrt(fx * fx + fy * fy + fz * fz)
    if n < limits.f_min:
        raise DegenerateThrustError(f"|force_d| = {n:.3e} N below f_min")
    bx, by, bz = -fx / n, -fy / n, -fz / n      # desired body z axis, earth frame
    if bz < math.cos(limits.tilt_max):
        h = math.hypot(bx, by)
        if h < 1e-12:
            raise DegenerateThrustError("force request is straight down, no feasible attitude")
        s = math.sin(limits.tilt_max) / h
        bx, by, bz = bx * s, by * s, math.cos(limits.tilt_max)
    f_d = min(max(n, thrust_min), thrust_max)
    # rotate the axis into the yaw-aligned intermediate frame and solve ZYX
    cps, sps = math.cos(yaw_d), math.sin(yaw_d)
    bx_i = cps * bx + sps * by
    by_i = -sps * bx + cps * by
    roll = math.asin(min(1.0, max(-1.0, -by_i)))
    pitch = math.atan2(bx_i, bz)
    return EulerAngles(roll, pitch, yaw_d), f_d


def rotational_control(eta_d: EulerAngles, omega_d, eta: EulerAngles, omega,
                       tau_dis_hat, gains: RotationalGains, inertia_diag,
                       dt: float, e_q_integral, accumulate: bool):
    """Inner-loop torque command.  Returns (tau_d, updated integral).

    accumulate gates the integral term (off until the torque observer has
    had time to settle, or permanently in pure-P configurations).
    """
    e_eta = np.array([
        wrap_angle(eta_d.roll - eta.roll),
        eta_d.pitch - eta.pitch,
        wrap_angle(eta_d.yaw - eta.yaw),
    ])
    q_d = omega_d + body_rate_matrix(eta) @ (gains.k_eta_diag * e_eta)
    e_q = q_d - omega
    if accumulate:
        e_q_integral = e_q_integral + dt * e_q
    alpha_d = gains.k_pp_diag * e_q + gains.k_ii_diag * e_q_integral
    Jw = inertia_diag * omega
    tau_d = (inertia_diag * alpha_d - tau_dis_hat) + _cross(omega, Jw)
    return tau_d, e_q_integral


VARIANTS = ("baseline", "integrator", "vdo", "ndo")
SMO_MODES = ("off", "on", "oracle")


class CascadeController:
    """Holds observer states and outer-loop latches; the scenario loop calls
    translational_tick at 100 Hz and rotational_tick at 500 Hz."""

    def __init__(self, params: VehicleParams, trans_gains: TranslationalGains,
                 rot_gains: RotationalGains, limits: ControlLimits,
                 variant: str = "vdo", smo_mode: str = "on",
                 zeta=(0.0, 0.0, 2.0), vdo_initial: float = 0.0,
                 ndo_gain_diag=(2.0, 2.0, 2.0), ndo_initial=None,
                 ki_diag=(0.5, 0.5, 0.5), integrator_clamp: float = 2.0,
                 smo_l1: float = 6.0, smo_l2: float = 4.0, smo_l3: float = 2.0,
                 smo_t0: float = 1.0,
                 omega_feedforward: str = "zero",
                 initial_state: VehicleState | None = None,
                 true_torque_dis=None,
                 dt_trans: float = 0.01, dt_rot: float = 0.002):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        if smo_mode not in SMO_MODES:
            raise ValueError(f"unknown smo mode {smo_mode!r}")
        if smo_mode == "oracle" and true_torque_dis is None:
            raise ValueError("oracle smo mode needs the true disturbance callable")
        self.params = params
        self.tg = trans_gains
        self.rg = rot_gains
        self.limits = limits
        self.thrust_min, self.thrust_max = limits.thrust_bounds(params.mass, params.gravity)
        self.variant = variant
        self.smo_mode = smo_mode
        self.true_torque_dis = true_torque_dis
        self.omega_feedforward = omega_feedforward
        self.dt_trans = dt_trans
        self.dt_rot = dt_rot

        s0 = initial_state if initial_state is not None else VehicleState.level()
        v0 = s0.v
        self.vdo = obs.VdoState.initial(zeta, v0, params.mass, vdo_initial)
        self.ndo = obs.NdoState.initial(ndo_gain_diag, v0, params.mass, ndo_initial)
        self.integ = obs.IntegratorState(gain_diag=np.asarray(ki_diag, dtype=float),
                                         clamp=integrator_clamp)
        self.smo = obs.SmoState.initial(s0.omega, smo_l1, smo_l2, smo_l3, smo_t0)
        self.e_q_integral = np.zeros(3)

        # outer-loop latches, consumed by the inner loop until the next tick
        self.eta_d = EulerAngles(0.0, 0.0, 0.0)
        self.f_cmd = params.mass * params.gravity
        self.omega_d = np.zeros(3)
        self._eta_d_prev = None
        self._omega_d_filt = np.zeros(3)
        self.sp = None

        # telemetry for the logger
        self.force_dis_hat = np.zeros(3)
        self.delta_f_hat = 0.0
        self.tau_dis_hat = np.zeros(3)
        self.tau_cmd = np.zeros(3)

    # -- outer loop -------------------------------------------------------

    def translational_tick(self, t: float, state: VehicleState, sp: Setpoint) -> None:
        m = self.params.mass
        eta = euler_from_rotation(state.R)
        if self.variant == "vdo":
            est = obs.vdo_output(self.vdo, state.v, m)
            dF_hat = est * theta_vector(eta)
            self.delta_f_hat = est
        elif self.variant == "ndo":
            dF_hat = obs.ndo_output(self.ndo, state.v, m)
            self.delta_f_hat = float(dF_hat @ theta_vector(eta))
        elif self.variant == "integrator":
            dF_hat = -obs.integrator_force(self.integ)
            self.delta_f_hat = float(dF_hat @ theta_vector(eta))
        else:
            dF_hat = np.zeros(3)
            self.delta_f_hat = 0.0

        F_d = translational_control(sp, state.p, state.v, dF_hat, self.tg,
                                    m, self.params.gravity)
        eta_d, f_cmd = attitude_from_force(F_d, sp.yaw_d, self.limits,
                                           self.thrust_min, self.thrust_max)
        self._latch_omega_d(eta_d)
        self.eta_d = eta_d
        self.f_cmd = f_cmd
        self.sp = sp
        self.force_dis_hat = dF_hat

        # commit observer integrations using the force actually flown
        applied_force = -f_cmd * theta_vector(eta)
        if self.variant == "vdo":
            self.vdo = obs.vdo_update(self.vdo, state.v, applied_force,
                                      self.params.gravity_force, eta, m, self.dt_trans)
        elif self.variant == "ndo":
            self.ndo = obs.ndo_update(self.ndo, state.v, applied_force,
                                      self.params.gravity_force, m, self.dt_trans)
        elif self.variant == "integrator":
            self.integ = obs.integrator_update(self.integ, sp.p_d - state.p, self.dt_trans)

    def _latch_omega_d(self, eta_d: EulerAngles) -> None:
        if self.omega_feedforward != "diff":
            return
        if self._eta_d_prev is not None:
            de = np.array([
                wrap_angle(eta_d.roll - self._eta_d_prev.roll),
                eta_d.pitch - self._eta_d_prev.pitch,
                wrap_angle(eta_d.yaw - self._eta_d_prev.yaw),
            ]) / self.dt_trans
            raw = body_rate_matrix(eta_d) @ de
            alpha = self.dt_trans / (0.05 + self.dt_trans)   # 50 ms smoothing
            self._omega_d_filt = self._omega_d_filt + alpha * (raw - self._omega_d_filt)
            self.omega_d = self._omega_d_filt
        self._eta_d_prev = eta_d

    # -- inner loop -------------------------------------------------------

    def rotational_tick(self, t: float, state: VehicleState):
        eta = euler_from_rotation(state.R)
        if self.smo_mode == "on":
            tau_hat = obs.smo_torque_estimate(self.smo, self.params.inertia_diag)
        elif self.smo_mode == "oracle":
            tau_hat = self.true_torque_dis(t)
        else:
            tau_hat = np.zeros(3)
        self.tau_dis_hat = tau_hat

        tau_d, self.e_q_integral = rotational_control(
            self.eta_d, self.omega_d, eta, state.omega, tau_hat, self.rg,
            self.params.inertia_diag, self.dt_rot, self.e_q_integral,
            accumulate=(t >= self.smo.t0))
        self.tau_cmd = tau_d
        alloc = allocate_rotors(ControlInput(self.f_cmd, tau_d), self.params)
        if self.smo_mode == "on":
            self.smo = obs.smo_update(self.smo, state.omega, self.params.inertia_diag,
                                      alloc.achieved.torque, self.dt_rot)
        return alloc
