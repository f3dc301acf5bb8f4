"""Coaxial octocopter plant: rigid-body dynamics, battery-sag disturbance
model and rotor allocation.

Equations of motion in the NED earth frame (see geom for conventions):

    p_dot = v
    R_dot = R @ skew(omega)
    m v_dot = -f R e3 + m g e3 + delta_f(t) R e3
    J omega_dot = -omega x (J omega) + tau + tau_dis(t)

Thrust f >= 0 acts along the negative body z axis (up when level).  The
battery-sag thrust deficit delta_f(t) acts along the positive body z axis,
so a sagging battery pushes the vehicle toward the ground exactly opposite
to the thrust it is supposed to deliver.  tau_dis collects small constant
motor-mismatch torques plus band-limited noise.

The airframe is an X8: four arms at 45/135/225/315 deg azimuth, each with
an upper and a lower rotor spinning in opposite directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geom import EulerAngles, skew, theta_vector


class ConfigError(ValueError):
    """A physically inconsistent or out-of-contract parameter set."""


def _cross(a, b) -> np.ndarray:
    # hand-rolled: np.cross is surprisingly slow for single 3-vectors
    return np.array([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


@dataclass
class VehicleParams:
    """Airframe constants.  Inertia is diagonal in body axes."""

    mass: float = 2.0                   # kg
    gravity: float = 9.81               # m/s^2
    inertia_diag: np.ndarray = field(default_factory=lambda: np.array([0.02, 0.02, 0.035]))  # kg m^2
    arm_length: float = 0.25            # m, hub to rotor axis
    rotor_max_thrust: float = 8.0       # N per rotor
    yaw_torque_coeff: float = 0.016     # N m of drag torque per N of thrust
    coax_efficiency: float = 1.0        # delivered/commanded thrust; 0.85 emulates coaxial wake loss

    def __post_init__(self):
        self.inertia_diag = np.asarray(self.inertia_diag, dtype=float)
        self.validate()
        self.inertia = np.diag(self.inertia_diag)
        self.inertia_inv_diag = 1.0 / self.inertia_diag
        self.gravity_accel = np.array([0.0, 0.0, self.gravity])
        self.gravity_force = self.mass * self.gravity_accel
        self.allocation_matrix = _build_allocation(self.arm_length, self.yaw_torque_coeff)
        self.allocation_pinv = np.linalg.pinv(self.allocation_matrix)

    def validate(self) -> None:
        if self.mass <= 0.0:
            raise ConfigError("mass must be positive")
        if self.inertia_diag.shape != (3,) or np.any(self.inertia_diag <= 0.0):
            raise ConfigError("inertia_diag must be three positive entries")
        if self.arm_length <= 0.0 or self.rotor_max_thrust <= 0.0:
            raise ConfigError("arm_length and rotor_max_thrust must be positive")
        if not 0.0 < self.coax_efficiency <= 1.0:
            raise ConfigError("coax_efficiency must lie in (0, 1]")


def _build_allocation(arm: float, kappa: float) -> np.ndarray:
    """Map from 8 rotor thrusts to (f, tau_x, tau_y, tau_z).

    Rotor ordering is (upper, lower) per arm, arms counterclockwise from
    45 deg azimuth.  Upper rotors take spin direction +1, lowers -1, so a
    coaxial pair at equal thrust contributes no net drag torque.
    """
    azimuths = np.deg2rad([45.0, 135.0, 225.0, 315.0])
    A = np.zeros((4, 8))
    for pod, az in enumerate(azimuths):
        x, y = arm * math.cos(az), arm * math.sin(az)
        for j, spin in ((2 * pod, 1.0), (2 * pod + 1, -1.0)):
            A[0, j] = 1.0            # total thrust
            A[1, j] = -y             # roll torque from thrust at (x, y)
            A[2, j] = x              # pitch torque
            A[3, j] = spin * kappa   # yaw drag torque
    return A


@dataclass
class BatteryParams:
    """Voltage-sag curve and the disturbances derived from it.

    The pack voltage relaxes exponentially with time constant tau_b; the
    resulting thrust deficit is

        delta_f(t) = delta_f0 + k_d (1 - exp(-t / tau_b))

    whose rate is bounded by k_d / tau_b.  That bound must not exceed mu,
    the slew bound the translational observer is designed against.
    """

    nominal_voltage: float = 24.0       # V
    delta_f0: float = 3.0               # N, deficit already present at t=0
    k_d: float = 6.0                    # N, additional deficit as the pack sags
    tau_b: float = 90.0                 # s
    mu: float = 0.1                     # N/s, admissible |d(delta_f)/dt|
    torque_bias: np.ndarray = field(default_factory=lambda: np.array([0.01, -0.008, 0.012]))  # N m
    torque_noise_amp: float = 0.004     # N m per axis
    torque_noise_band: tuple = (0.1, 5.0)   # rad/s
    torque_noise_terms: int = 4
    eps_tau: float = 0.05               # N m, hard bound on ||tau_dis||
    voltage_sag_frac: float = 0.12      # fraction of nominal voltage lost as t -> inf

    def __post_init__(self):
        self.torque_bias = np.asarray(self.torque_bias, dtype=float)


class BatteryModel:
    """Deterministic realization of the sag curve and torque disturbance.

    The torque noise is a small random Fourier series (band-limited by
    construction) so it can be evaluated at arbitrary times, including
    integrator substeps, without any filter state.  Given the same params
    and seed the realization is bit-for-bit reproducible.
    """

    def __init__(self, params: BatteryParams, seed: int = 0):
        p = params
        if p.tau_b <= 0.0:
            raise ConfigError("tau_b must be positive")
        if p.delta_f0 < 0.0 or p.k_d < 0.0:
            raise ConfigError("delta_f0 and k_d must be nonnegative")
        if p.mu <= 0.0:
            raise ConfigError("mu must be positive")
        if p.k_d / p.tau_b > p.mu:
            raise ConfigError(
                f"sag rate bound k_d/tau_b = {p.k_d / p.tau_b:.4f} N/s exceeds mu = {p.mu:.4f} N/s")
        if p.torque_noise_amp < 0.0:
            raise ConfigError("torque_noise_amp must be nonnegative")
        worst = np.linalg.norm(np.abs(p.torque_bias) + p.torque_noise_amp)
        if worst >= p.eps_tau:
            raise ConfigError(
                f"worst-case torque disturbance {worst:.4f} N m not below eps_tau = {p.eps_tau:.4f}")
        self.params = p
        rng = np.random.default_rng(seed)
        n = p.torque_noise_terms
        lo, hi = p.torque_noise_band
        self._freq = rng.uniform(lo, hi, size=(3, n))
        self._phase = rng.uniform(0.0, 2.0 * math.pi, size=(3, n))
        w = np.abs(rng.standard_normal((3, n))) + 1e-3
        self._weight = w / w.sum(axis=1, keepdims=True)   # sum of |weights| = 1 per axis

    def delta_f(self, t: float) -> float:
        """Thrust deficit in N at time t."""
        p = self.params
        return p.delta_f0 + p.k_d * (1.0 - math.exp(-t / p.tau_b))

    def delta_f_rate(self, t: float) -> float:
        p = self.params
        return (p.k_d / p.tau_b) * math.exp(-t / p.tau_b)

    def voltage(self, t: float) -> float:
        """Pack voltage following the same exponential relaxation."""
        p = self.params
        return p.nominal_voltage * (1.0 - p.voltage_sag_frac * (1.0 - math.exp(-t / p.tau_b)))

    def torque_disturbance(self, t: float) -> np.ndarray:
        """Body torque disturbance in N m at time t, ||.|| < eps_tau."""
        p = self.params
        if p.torque_noise_amp == 0.0:
            return p.torque_bias.copy()
        noise = (self._weight * np.sin(self._freq * t + self._phase)).sum(axis=1)
        return p.torque_bias + p.torque_noise_amp * noise

    def worst_case_torque_norm(self) -> float:
        p = self.params
        return float(np.linalg.norm(np.abs(p.torque_bias) + p.torque_noise_amp))


def battery_delta_f(params: BatteryParams, t: float) -> float:
    """Thrust deficit of the sag curve without building a full model."""
    if params.tau_b <= 0.0:
        raise ConfigError("tau_b must be positive")
    if params.k_d / params.tau_b > params.mu:
        raise ConfigError("sag rate bound k_d/tau_b exceeds mu")
    return params.delta_f0 + params.k_d * (1.0 - math.exp(-t / params.tau_b))


def disturbance_force(battery: BatteryModel, t: float, eta: EulerAngles) -> np.ndarray:
    """Earth-frame force the thrust deficit applies, delta_f * theta_vector."""
    return battery.delta_f(t) * theta_vector(eta)


@dataclass
class VehicleState:
    """Rigid-body state: position, velocity (earth frame), attitude, body rates."""

    p: np.ndarray
    v: np.ndarray
    R: np.ndarray
    omega: np.ndarray

    @classmethod
    def level(cls, p=None, v=None) -> "VehicleState":
        return cls(
            p=np.zeros(3) if p is None else np.asarray(p, dtype=float).copy(),
            v=np.zeros(3) if v is None else np.asarray(v, dtype=float).copy(),
            R=np.eye(3),
            omega=np.zeros(3),
        )

    def copy(self) -> "VehicleState":
        return VehicleState(self.p.copy(), self.v.copy(), self.R.copy(), self.omega.copy())


@dataclass
class ControlInput:
    """Commanded total thrust (N) and body torque (N m)."""

    thrust: float
    torque: np.ndarray

    @classmethod
    def zero(cls) -> "ControlInput":
        return cls(0.0, np.zeros(3))


def dynamics_deriv(state: VehicleState, u: ControlInput, t: float,
                   params: VehicleParams, battery: BatteryModel | None = None):
    """Time derivative of the state under input u and the battery disturbances.

    Returns (p_dot, v_dot, R_dot, omega_dot).  battery=None runs the clean
    plant.  The commanded thrust is scaled by coax_efficiency before it acts.
    """
    body_z = state.R[:, 2]
    w = state.omega
    gyro = _cross(w, params.inertia_diag * w)
    if battery is not None:
        axial = battery.delta_f(t) - u.thrust * params.coax_efficiency
        torque = (u.torque - gyro) + battery.torque_disturbance(t)
    else:
        axial = -u.thrust * params.coax_efficiency
        torque = u.torque - gyro
    v_dot = (axial / params.mass) * body_z + params.gravity_accel
    omega_dot = params.inertia_inv_diag * torque
    R_dot = state.R @ skew(w)
    return state.v, v_dot, R_dot, omega_dot


@dataclass
class AllocationResult:
    rotor_thrusts: np.ndarray     # (8,) N
    achieved: ControlInput        # wrench the clipped rotor set actually produces
    saturated: bool


def allocate_rotors(u: ControlInput, params: VehicleParams) -> AllocationResult:
    """Distribute a wrench over the eight rotors.

    Minimum-norm (pseudo-inverse) allocation, then per-rotor clipping to
    [0, rotor_max_thrust].  When nothing clips, the requested wrench is
    returned as achieved unchanged; otherwise the achievable wrench is
    re-mixed from the clipped thrusts and the saturated flag set.
    """
    wrench = np.array([u.thrust, u.torque[0], u.torque[1], u.torque[2]])
    thrusts = params.allocation_pinv @ wrench
    clipped = np.clip(thrusts, 0.0, params.rotor_max_thrust)
    if np.array_equal(clipped, thrusts):
        return AllocationResult(thrusts, u, False)
    ach = params.allocation_matrix @ clipped
    return AllocationResult(clipped, ControlInput(float(ach[0]), ach[1:].copy()), True)
