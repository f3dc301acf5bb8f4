"""
Altitude loss under a sagging pack, with and without compensation
=================================================================

A plain cascade controller slowly sinks as the battery's deliverable
thrust drops away from the commanded value.  Feeding the voltage-drop
estimate back into the outer loop removes the offset.  This script runs
both variants on a fast-sag pack so the whole story fits in 60 seconds.
"""

import os
from dataclasses import replace

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from voltsag.config import config_from_dict
from voltsag.sim import run_scenario

# a pack that loses most of its headroom within a minute; mu is the
# declared slew budget and must cover k_d / tau_b
doc = {
    "schema_version": 1,
    "sim": {"duration": 60.0, "variant": "baseline"},
    "battery": {"tau_b": 15.0, "mu": 0.5},
}
base_cfg = config_from_dict(doc)

runs = {}
for variant in ("baseline", "vdo"):
    runs[variant] = run_scenario(replace(base_cfg, variant=variant))
    m = runs[variant].metrics
    print(f"{variant:<10} rmse_z = {m.rmse[2]:.4f} m   mae_z = {m.mae[2]:.4f} m")

# altitude error; +z points down, so positive means the vehicle sits low
fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
for variant, style in (("baseline", "C3-"), ("vdo", "C0-")):
    r = runs[variant]
    ax1.plot(r.col("t"), r.col("p_z") - r.col("pd_z"), style, label=variant)
ax1.set_ylabel("altitude error [m]")
ax1.legend()
ax1.grid(alpha=0.3)

# the deficit the pack actually imposed, and what the observer saw
r = runs["vdo"]
ax2.plot(r.col("t"), r.col("dlf_true"), "k-", label="true deficit")
ax2.plot(r.col("t"), r.col("dlf_hat"), "C0--", label="estimate")
ax2.set_xlabel("time [s]")
ax2.set_ylabel("thrust deficit [N]")
ax2.legend()
ax2.grid(alpha=0.3)

os.makedirs("demos/out", exist_ok=True)
out = "demos/out/01_descent_vs_compensation.png"
fig.tight_layout()
fig.savefig(out, dpi=120)
print("wrote", out)
