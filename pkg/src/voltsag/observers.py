"""Disturbance observers and the integrator augmentation.

Translational side, estimating the battery-sag thrust deficit:

  VDO (scalar deficit along the body z axis):
      aux_dot    = -zeta (G + F + theta * delta_f_hat)
      delta_f_hat = aux + zeta m v
  stable whenever zeta @ theta(eta) > 0; with that product equal to c and
  |d(delta_f)/dt| <= mu the estimate error obeys
      |err(t)| <= |err(0)| exp(-c t) + mu / c.

  NDO (full 3-vector force, momentum based):
      z_dot = -L (z + L m v + F + G)
      force_hat = z + L m v

  Integrator fallback: clamped integral of position error, used as a force
  correction where the observers would plug in.

Rotational side, fixed-time sliding-mode observer for the disturbance
torque (runs at the rate-loop cadence):

      e1      = mu_hat - omega
      xi1     = -l1 e1 / ||e1||^(1/2) - l2 e1 ||e1|| + xi2
      mu_dot  = -Jinv (omega x J omega) + Jinv tau + xi1
      xi2_dot = -l3 e1 / ||e1||
      tau_dis_hat = J xi2

Denominators are smoothed with max(||e1||, 1e-9).  All updates are forward
Euler at the loop period of the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geom import EulerAngles, theta_vector

E1_EPS = 1e-9


class GainConditionError(RuntimeError):
    """The observability product zeta @ theta dropped to zero or below."""


# ---------------------------------------------------------------------------
# scalar thrust-deficit observer

@dataclass
class VdoState:
    zeta: np.ndarray                 # (3,) row gain, 1/s
    aux: float = 0.0                 # internal integrator, N
    delta_f_hat: float = 0.0         # latest deficit estimate, N

    @classmethod
    def initial(cls, zeta, v0, mass: float, estimate0: float = 0.0) -> "VdoState":
        zeta = np.asarray(zeta, dtype=float)
        aux = estimate0 - float(zeta @ (mass * np.asarray(v0, dtype=float)))
        return cls(zeta=zeta, aux=aux, delta_f_hat=estimate0)


def vdo_output(st: VdoState, v, mass: float) -> float:
    """Deficit estimate consistent with the current velocity measurement."""
    return st.aux + float(st.zeta @ (mass * v))


def vdo_update(st: VdoState, v, force_e, gravity_e, eta: EulerAngles,
               mass: float, dt: float) -> VdoState:
    """One forward-Euler step. force_e is the earth-frame thrust force applied
    over the upcoming interval, gravity_e the earth-frame weight vector."""
    theta = theta_vector(eta)
    c = float(st.zeta @ theta)
    if c <= 0.0:
        raise GainConditionError(f"zeta @ theta = {c:.4f} <= 0, observer unstable")
    est = st.aux + float(st.zeta @ (mass * v))
    aux = st.aux - dt * float(st.zeta @ (gravity_e + force_e + theta * est))
    return VdoState(zeta=st.zeta, aux=aux, delta_f_hat=est)


def vdo_force_estimate(st: VdoState, eta: EulerAngles) -> np.ndarray:
    """Earth-frame force the estimated deficit applies."""
    return st.delta_f_hat * theta_vector(eta)


# ---------------------------------------------------------------------------
# momentum-based full-vector force observer

@dataclass
class NdoState:
    gain_diag: np.ndarray            # (3,) positive, 1/s
    z: np.ndarray = field(default_factory=lambda: np.zeros(3))
    force_hat: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @classmethod
    def initial(cls, gain_diag, v0, mass: float, estimate0=None) -> "NdoState":
        gain_diag = np.asarray(gain_diag, dtype=float)
        est = np.zeros(3) if estimate0 is None else np.asarray(estimate0, dtype=float).copy()
        z = est - gain_diag * (mass * np.asarray(v0, dtype=float))
        return cls(gain_diag=gain_diag, z=z, force_hat=est)


def ndo_output(st: NdoState, v, mass: float) -> np.ndarray:
    return st.z + st.gain_diag * (mass * v)


def ndo_update(st: NdoState, v, force_e, gravity_e, mass: float, dt: float) -> NdoState:
    est = st.z + st.gain_diag * (mass * v)
    z = st.z - dt * (st.gain_diag * (st.z + st.gain_diag * (mass * v) + force_e + gravity_e))
    return NdoState(gain_diag=st.gain_diag, z=z, force_hat=est)


# ---------------------------------------------------------------------------
# clamped position-error integrator (classical augmentation)

@dataclass
class IntegratorState:
    gain_diag: np.ndarray            # (3,) N per (m s)
    clamp: float = 2.0               # m s, per-axis bound on the integral
    integral: np.ndarray = field(default_factory=lambda: np.zeros(3))


def integrator_update(st: IntegratorState, e_p, dt: float) -> IntegratorState:
    integral = np.clip(st.integral + dt * e_p, -st.clamp, st.clamp)
    return IntegratorState(gain_diag=st.gain_diag, clamp=st.clamp, integral=integral)


def integrator_force(st: IntegratorState) -> np.ndarray:
    """Compensation force added on top of the nominal command."""
    return st.gain_diag * st.integral


# ---------------------------------------------------------------------------
# sliding-mode torque-disturbance observer

@dataclass
class SmoState:
    l1: float = 6.0
    l2: float = 4.0
    l3: float = 2.0
    t0: float = 1.0                  # s, settling time budget the consumers gate on
    mu_hat: np.ndarray = field(default_factory=lambda: np.zeros(3))
    xi2: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @classmethod
    def initial(cls, omega0, l1=6.0, l2=4.0, l3=2.0, t0=1.0) -> "SmoState":
        return cls(l1=l1, l2=l2, l3=l3, t0=t0,
                   mu_hat=np.asarray(omega0, dtype=float).copy(), xi2=np.zeros(3))


def smo_update(st: SmoState, omega, inertia_diag, tau, dt: float) -> SmoState:
    """One forward-Euler step of the sliding-mode observer.

    tau is the torque actually applied to the plant over the interval.
    """
    e1 = st.mu_hat - omega
    n = max(math.sqrt(float(e1 @ e1)), E1_EPS)
    xi1 = -st.l1 * e1 / math.sqrt(n) - st.l2 * e1 * n + st.xi2
    Jw = inertia_diag * omega
    gyro = np.array([
        omega[1] * Jw[2] - omega[2] * Jw[1],
        omega[2] * Jw[0] - omega[0] * Jw[2],
        omega[0] * Jw[1] - omega[1] * Jw[0],
    ])
    mu_dot = (-gyro + tau) / inertia_diag + xi1
    mu_hat = st.mu_hat + dt * mu_dot
    xi2 = st.xi2 + dt * (-st.l3 * e1 / n)
    return replace(st, mu_hat=mu_hat, xi2=xi2)


def smo_torque_estimate(st: SmoState, inertia_diag) -> np.ndarray:
    """Disturbance torque estimate, J @ xi2."""
    return inertia_diag * st.xi2
