"""Disturbance-rejecting flight control for a coaxial octocopter.

The package simulates a cascade position/attitude controller whose inner
and outer loops are each paired with a disturbance observer: a scalar
voltage-sag observer for the thrust deficit that grows as the battery
drains, and a fixed-time sliding-mode observer for body torque offsets.
Plain and integrator-augmented cascades are included as baselines.
"""

from .geom import (EulerAngles, GimbalLockError, body_rate_matrix,
                   euler_from_rotation, euler_rate_matrix, orthonormalize,
                   rotation_from_euler, skew, theta_vector, wrap_angle)
from .vehicle import (AllocationResult, BatteryModel, BatteryParams,
                      ConfigError, ControlInput, VehicleParams, VehicleState,
                      allocate_rotors, battery_delta_f, disturbance_force,
                      dynamics_deriv)
from .observers import (GainConditionError, IntegratorState, NdoState,
                        SmoState, VdoState, integrator_force,
                        integrator_update, ndo_output, ndo_update,
                        smo_torque_estimate, smo_update, vdo_force_estimate,
                        vdo_output, vdo_update)
from .control import (CascadeController, ControlLimits, DegenerateThrustError,
                      RotationalGains, Setpoint, TranslationalGains,
                      attitude_from_force, rotational_control,
                      translational_control)
from .sim import (DivergedError, Metrics, NonFiniteError, ObserverConfig,
                  ScenarioResult, SimConfig, TrajectoryParams, compute_metrics,
                  load_records_csv, reference_trajectory, rk4_step, run_many,
                  run_scenario, write_records_csv)
from .config import (RuleResult, config_from_dict, default_config,
                     load_config, validate_config)

__version__ = "0.1.0"

__all__ = [
    "EulerAngles", "GimbalLockError", "body_rate_matrix", "euler_from_rotation",
    "euler_rate_matrix", "orthonormalize", "rotation_from_euler", "skew",
    "theta_vector", "wrap_angle",
    "AllocationResult", "BatteryModel", "BatteryParams", "ConfigError",
    "ControlInput", "VehicleParams", "VehicleState", "allocate_rotors",
    "battery_delta_f", "disturbance_force", "dynamics_deriv",
    "GainConditionError", "IntegratorState", "NdoState", "SmoState", "VdoState",
    "integrator_force", "integrator_update", "ndo_output", "ndo_update",
    "smo_torque_estimate", "smo_update", "vdo_force_estimate", "vdo_output",
    "vdo_update",
    "CascadeController", "ControlLimits", "DegenerateThrustError",
    "RotationalGains", "Setpoint", "TranslationalGains", "attitude_from_force",
    "rotational_control", "translational_control",
    "DivergedError", "Metrics", "NonFiniteError", "ObserverConfig",
    "ScenarioResult", "SimConfig", "TrajectoryParams", "compute_metrics",
    "load_records_csv", "reference_trajectory", "rk4_step", "run_many",
    "run_scenario", "write_records_csv",
    "RuleResult", "config_from_dict", "default_config", "load_config",
    "validate_config",
    "__version__",
]
