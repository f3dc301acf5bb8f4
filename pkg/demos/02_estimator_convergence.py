"""
Voltage-drop estimator: decay rate and ramp floor
=================================================

The estimator error decays at the gain product c = zeta . theta and a
deficit ramp of slope mu leaves a steady floor of mu / c.  Both facts
show up cleanly in an open-loop rig where the fed velocity is the exact
integral of the deficit.
"""

import math
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from voltsag.geom import EulerAngles, theta_vector
from voltsag.observers import VdoState, vdo_update

MASS = 2.0
ZETA = np.array([0.0, 0.0, 2.0])
LEVEL = EulerAngles(0.0, 0.0, 0.0)
THETA = theta_vector(LEVEL)
C = float(ZETA @ THETA)
DT = 1e-3
ZERO = np.zeros(3)


def run(deficit_fn, integral_fn, n):
    st = VdoState.initial(ZETA, np.zeros(3), MASS)
    t = np.arange(n) * DT
    est = np.empty(n)
    for k in range(n):
        v = THETA * (integral_fn(t[k]) / MASS)
        st = vdo_update(st, v, ZERO, ZERO, LEVEL, MASS, DT)
        est[k] = st.delta_f_hat
    return t, est, deficit_fn(t)


# constant deficit: pure exponential decay of the error
t1, est1, true1 = run(lambda t: np.full_like(t, 5.0), lambda t: 5.0 * t, 4000)
print(f"constant deficit: error after 1/c s = {5.0 - est1[int(1 / C / DT)]:.3f} N "
      f"(e^-1 of 5 is {5.0 / math.e:.3f})")

# ramp deficit: the estimate trails by mu / c
mu = 0.5
t2, est2, true2 = run(lambda t: mu * t, lambda t: 0.5 * mu * t * t, 8000)
print(f"ramp deficit:     steady error = {true2[-1] - est2[-1]:.4f} N "
      f"(mu / c = {mu / C:.4f})")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
ax1.plot(t1, true1, "k-", label="true")
ax1.plot(t1, est1, "C0--", label="estimate")
ax1.plot(t1, 5.0 - 5.0 * np.exp(-C * t1), "C2:", label="exp envelope")
ax1.set_title("constant deficit")
ax1.set_xlabel("time [s]")
ax1.set_ylabel("deficit [N]")
ax1.legend()
ax1.grid(alpha=0.3)

ax2.plot(t2, true2, "k-", label="true")
ax2.plot(t2, est2, "C0--", label="estimate")
ax2.set_title(f"ramp: floor = mu/c = {mu / C:.3f} N")
ax2.set_xlabel("time [s]")
ax2.legend()
ax2.grid(alpha=0.3)

os.makedirs("demos/out", exist_ok=True)
out = "demos/out/02_estimator_convergence.png"
fig.tight_layout()
fig.savefig(out, dpi=120)
print("wrote", out)
