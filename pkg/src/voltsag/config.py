"""Config file loading and static validation.

One YAML file drives everything; see configs/default.yaml for the
commented reference.  Every section and key is optional (defaults apply)
but unknown keys are rejected, and schema_version must be present and
supported so stale files fail loudly instead of silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import yaml

from .control import VARIANTS, SMO_MODES, ControlLimits, RotationalGains, TranslationalGains
from .geom import EulerAngles, theta_vector
from .sim import ObserverConfig, SimConfig, TrajectoryParams, _check_schedule
from .vehicle import BatteryParams, ConfigError, VehicleParams

SCHEMA_VERSION = 1


def _require_mapping(doc, name: str) -> dict:
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    return doc


def _take(section: dict, name: str, key: str, default, kind=float):
    if key not in section:
        return default
    val = section.pop(key)
    try:
        if kind is float:
            return float(val)
        if kind is int:
            iv = int(val)
            if iv != val:
                raise ValueError
            return iv
        if kind is str:
            # YAML 1.1 reads bare on/off as booleans; map them back
            if isinstance(val, bool):
                return "on" if val else "off"
            return str(val)
        if kind == "vec3":
            arr = np.asarray(val, dtype=float)
            if arr.shape != (3,):
                raise ValueError
            return arr
        if kind == "pair":
            t = tuple(float(x) for x in val)
            if len(t) != 2:
                raise ValueError
            return t
    except (TypeError, ValueError):
        raise ConfigError(f"{name}.{key} has invalid value {val!r}") from None
    raise AssertionError(kind)


def _reject_leftovers(section: dict, name: str) -> None:
    if section:
        raise ConfigError(f"unknown keys in section '{name}': {sorted(section)}")


def config_from_dict(doc: dict) -> SimConfig:
    """Build a SimConfig from a parsed YAML document."""
    doc = dict(_require_mapping(doc, "<root>"))
    version = doc.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")

    sim = _require_mapping(doc.pop("sim", {}), "sim")
    traj = _require_mapping(doc.pop("trajectory", {}), "trajectory")
    veh = _require_mapping(doc.pop("vehicle", {}), "vehicle")
    bat = _require_mapping(doc.pop("battery", {}), "battery")
    ctl = _require_mapping(doc.pop("control", {}), "control")
    ob = _require_mapping(doc.pop("observers", {}), "observers")
    _reject_leftovers(doc, "<root>")

    cfg = SimConfig(
        dt=_take(sim, "sim", "dt", 1e-3),
        duration=_take(sim, "sim", "duration", 280.0),
        seed=_take(sim, "sim", "seed", 42, int),
        decimation=_take(sim, "sim", "decimation", 10, int),
        variant=_take(sim, "sim", "variant", "vdo", str),
        smo_mode=_take(sim, "sim", "smo", "on", str),
        omega_feedforward=_take(sim, "sim", "omega_feedforward", "zero", str),
        initial_pos_offset=_take(sim, "sim", "initial_pos_offset", np.zeros(3), "vec3"),
        trajectory=TrajectoryParams(
            radius=_take(traj, "trajectory", "radius", 2.0),
            period=_take(traj, "trajectory", "period", 30.0),
            altitude=_take(traj, "trajectory", "altitude", 2.0),
            z_amplitude=_take(traj, "trajectory", "z_amplitude", 0.5),
        ),
        vehicle=VehicleParams(
            mass=_take(veh, "vehicle", "mass", 2.0),
            gravity=_take(veh, "vehicle", "gravity", 9.81),
            inertia_diag=_take(veh, "vehicle", "inertia", np.array([0.02, 0.02, 0.035]), "vec3"),
            arm_length=_take(veh, "vehicle", "arm_length", 0.25),
            rotor_max_thrust=_take(veh, "vehicle", "rotor_max_thrust", 8.0),
            yaw_torque_coeff=_take(veh, "vehicle", "yaw_torque_coeff", 0.016),
            coax_efficiency=_take(veh, "vehicle", "coax_efficiency", 1.0),
        ),
        battery=BatteryParams(
            nominal_voltage=_take(bat, "battery", "nominal_voltage", 24.0),
            delta_f0=_take(bat, "battery", "delta_f0", 3.0),
            k_d=_take(bat, "battery", "k_d", 6.0),
            tau_b=_take(bat, "battery", "tau_b", 90.0),
            mu=_take(bat, "battery", "mu", 0.1),
            torque_bias=_take(bat, "battery", "torque_bias", np.array([0.01, -0.008, 0.012]), "vec3"),
            torque_noise_amp=_take(bat, "battery", "torque_noise_amp", 0.004),
            torque_noise_band=_take(bat, "battery", "torque_noise_band", (0.1, 5.0), "pair"),
            torque_noise_terms=_take(bat, "battery", "torque_noise_terms", 4, int),
            eps_tau=_take(bat, "battery", "eps_tau", 0.05),
            voltage_sag_frac=_take(bat, "battery", "voltage_sag_frac", 0.12),
        ),
        translational=TranslationalGains(
            kp_diag=_take(ctl, "control", "kp", np.array([4.0, 4.0, 4.0]), "vec3"),
            kv_diag=_take(ctl, "control", "kv", np.array([4.0, 4.0, 4.0]), "vec3"),
        ),
        rotational=RotationalGains(
            k_eta_diag=_take(ctl, "control", "k_eta", np.array([8.0, 8.0, 8.0]), "vec3"),
            k_pp_diag=_take(ctl, "control", "k_pp", np.array([40.0, 40.0, 40.0]), "vec3"),
            k_ii_diag=_take(ctl, "control", "k_ii", np.array([20.0, 20.0, 20.0]), "vec3"),
        ),
        limits=ControlLimits(
            tilt_max=math.radians(_take(ctl, "control", "tilt_max_deg", 45.0)),
            f_min=_take(ctl, "control", "f_min", 1e-3),
            thrust_min_frac=_take(ctl, "control", "thrust_min_frac", 0.1),
            thrust_max_frac=_take(ctl, "control", "thrust_max_frac", 2.5),
        ),
        observers=ObserverConfig(
            zeta=_take(ob, "observers", "zeta", np.array([0.0, 0.0, 2.0]), "vec3"),
            vdo_initial=_take(ob, "observers", "vdo_initial", 0.0),
            ndo_gain_diag=_take(ob, "observers", "ndo_gain", np.array([2.0, 2.0, 2.0]), "vec3"),
            ki_diag=_take(ob, "observers", "ki", np.array([0.5, 0.5, 0.5]), "vec3"),
            integrator_clamp=_take(ob, "observers", "integrator_clamp", 2.0),
            smo_l1=_take(ob, "observers", "smo_l1", 6.0),
            smo_l2=_take(ob, "observers", "smo_l2", 4.0),
            smo_l3=_take(ob, "observers", "smo_l3", 2.0),
            smo_t0=_take(ob, "observers", "smo_t0", 1.0),
        ),
    )
    _reject_leftovers(sim, "sim")
    _reject_leftovers(traj, "trajectory")
    _reject_leftovers(veh, "vehicle")
    _reject_leftovers(bat, "battery")
    _reject_leftovers(ctl, "control")
    _reject_leftovers(ob, "observers")
    return cfg


def load_config(path) -> SimConfig:
    """Parse and build a SimConfig; raises ConfigError on any problem."""
    try:
        with open(path, "r") as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file is not valid YAML: {exc}") from None
    return config_from_dict(doc if doc is not None else {})


def default_config() -> SimConfig:
    return config_from_dict({"schema_version": SCHEMA_VERSION})


# ---------------------------------------------------------------------------
# static validation rules

@dataclass
class RuleResult:
    name: str
    passed: bool
    detail: str


def _envelope_min_zeta_theta(zeta, tilt: float = math.radians(45.0)) -> float:
    """Worst observability product over the commanded attitude envelope."""
    grid = np.linspace(-tilt, tilt, 31)
    yaws = np.linspace(-math.pi, math.pi, 25)
    worst = math.inf
    for roll in grid:
        for pitch in grid:
            for yaw in yaws:
                c = float(zeta @ theta_vector(EulerAngles(roll, pitch, yaw)))
                if c < worst:
                    worst = c
    return worst


def validate_config(cfg: SimConfig) -> list:
    """Static checks a scenario must pass before it is worth running."""
    rules = []

    def rule(name: str, passed: bool, detail: str):
        rules.append(RuleResult(name, bool(passed), detail))

    try:
        _check_schedule(cfg)
        rule("schedule", True,
             f"dt = {cfg.dt} divides both loop periods, duration = {cfg.duration}")
    except ConfigError as exc:
        rule("schedule", False, str(exc))

    v = cfg.vehicle
    rule("mass_inertia", v.mass > 0.0 and np.all(v.inertia_diag > 0.0),
         f"mass = {v.mass}, inertia = {v.inertia_diag.tolist()}")

    tg, rg = cfg.translational, cfg.rotational
    gains_ok = (np.all(tg.kp_diag > 0) and np.all(tg.kv_diag > 0)
                and np.all(rg.k_eta_diag > 0) and np.all(rg.k_pp_diag > 0)
                and np.all(rg.k_ii_diag >= 0))
    rule("gains_positive", gains_ok,
         "kp, kv, k_eta, k_pp positive and k_ii nonnegative" if gains_ok
         else "a gain diagonal is nonpositive")

    worst = _envelope_min_zeta_theta(cfg.observers.zeta, cfg.limits.tilt_max)
    rule("observability_envelope", worst > 0.0,
         f"min zeta @ theta over the tilt envelope = {worst:.4f} 1/s")

    b = cfg.battery
    slew = b.k_d / b.tau_b if b.tau_b > 0 else math.inf
    rule("sag_slew_bound", b.tau_b > 0 and slew <= b.mu,
         f"k_d/tau_b = {slew:.4f} N/s vs mu = {b.mu} N/s")

    worst_tau = float(np.linalg.norm(np.abs(b.torque_bias) + b.torque_noise_amp))
    rule("torque_disturbance_bound", worst_tau < b.eps_tau,
         f"worst-case ||tau_dis|| = {worst_tau:.4f} N m vs eps_tau = {b.eps_tau}")

    rank = np.linalg.matrix_rank(v.allocation_matrix)
    rule("allocation_rank", rank == 4, f"allocation matrix rank = {rank}")

    lim = cfg.limits
    lim_ok = (0.0 < lim.tilt_max <= math.radians(60.0)
              and 0.0 < lim.thrust_min_frac < 1.0 < lim.thrust_max_frac
              and lim.f_min > 0.0)
    rule("limits", lim_ok,
         f"tilt_max = {math.degrees(lim.tilt_max):.1f} deg, "
         f"thrust [{lim.thrust_min_frac}, {lim.thrust_max_frac}] x hover")

    ob = cfg.observers
    ob_ok = (np.all(ob.ndo_gain_diag > 0) and np.all(ob.ki_diag >= 0)
             and ob.integrator_clamp > 0 and ob.smo_l1 > 0 and ob.smo_l2 > 0
             and ob.smo_l3 > 0 and ob.smo_t0 >= 0)
    rule("observer_gains", ob_ok,
         "ndo gain, smo l1..l3 positive, clamp positive, t0 nonnegative" if ob_ok
         else "an observer gain is out of range")

    rule("enums", cfg.variant in VARIANTS and cfg.smo_mode in SMO_MODES,
         f"variant = {cfg.variant}, smo = {cfg.smo_mode}")

    return rules
