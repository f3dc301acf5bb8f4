"""
The pack model: thrust deficit, terminal voltage, torque wander
===============================================================

The deliverable-thrust deficit starts at delta_f0, saturates at
delta_f0 + k_d with time constant tau_b, and its slew never exceeds
k_d / tau_b.  Terminal voltage sags along a matching exponential.  The
torque channel carries a seeded band-limited wander around a fixed bias,
capped in norm.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from voltsag.vehicle import BatteryModel, BatteryParams

params = BatteryParams()
pack = BatteryModel(params, seed=42)
t = np.linspace(0.0, 280.0, 2801)

deficit = np.array([pack.delta_f(tk) for tk in t])
volts = np.array([pack.voltage(tk) for tk in t])
tau = np.stack([pack.torque_disturbance(tk) for tk in t])

print(f"deficit: {deficit[0]:.2f} N at start, "
      f"{deficit[-1]:.2f} N at 280 s "
      f"(asymptote {params.delta_f0 + params.k_d:.2f} N)")
print(f"voltage: {volts[0]:.2f} V -> {volts[-1]:.2f} V")
print(f"worst torque wander norm: {np.linalg.norm(tau, axis=1).max():.4f} N m "
      f"(cap {params.eps_tau})")

fig, axes = plt.subplots(3, 1, figsize=(8, 8), sharex=True)
axes[0].plot(t, deficit, "C3-")
axes[0].axhline(params.delta_f0 + params.k_d, color="k", ls=":", lw=1.0)
axes[0].set_ylabel("thrust deficit [N]")
axes[0].grid(alpha=0.3)

axes[1].plot(t, volts, "C0-")
axes[1].set_ylabel("terminal voltage [V]")
axes[1].grid(alpha=0.3)

for i, name in enumerate("xyz"):
    axes[2].plot(t, tau[:, i], lw=0.8, label=f"tau_{name}")
axes[2].set_xlabel("time [s]")
axes[2].set_ylabel("torque wander [N m]")
axes[2].legend(loc="upper right")
axes[2].grid(alpha=0.3)

os.makedirs("demos/out", exist_ok=True)
out = "demos/out/05_battery_curve.png"
fig.tight_layout()
fig.savefig(out, dpi=120)
print("wrote", out)
