"""
Four outer-loop variants on the same sagging pack
=================================================

baseline    no deficit feedback at all
integrator  clamped integral action on the velocity error
ndo         momentum-style disturbance observer, vector force estimate
vdo         scalar voltage-drop observer along the thrust axis

Same seed, same trajectory, same pack; only the compensation differs.
"""

import os
from dataclasses import replace

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from voltsag.config import config_from_dict
from voltsag.sim import run_many

VARIANTS = ("baseline", "integrator", "ndo", "vdo")

# a 60 s fast-sag scenario keeps the demo quick while still separating
# the variants clearly
base = config_from_dict({
    "schema_version": 1,
    "sim": {"duration": 60.0},
    "battery": {"tau_b": 15.0, "mu": 0.5},
})
results = run_many([replace(base, variant=v) for v in VARIANTS])

print(f"{'variant':<12}{'rmse_z':>10}{'mae_z':>10}{'rmse_pos':>10}")
for v, r in zip(VARIANTS, results):
    m = r.metrics
    print(f"{v:<12}{m.rmse[2]:>10.4f}{m.mae[2]:>10.4f}{m.rmse_pos:>10.4f}")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
ax1.bar(VARIANTS, [r.metrics.rmse[2] for r in results], color="C0")
ax1.set_ylabel("rmse_z [m]")
ax1.set_yscale("log")
ax1.grid(alpha=0.3, axis="y")

for v, r in zip(VARIANTS, results):
    ax2.plot(r.col("t"), r.col("p_z") - r.col("pd_z"), label=v, lw=1.0)
ax2.set_xlabel("time [s]")
ax2.set_ylabel("altitude error [m]")
ax2.legend()
ax2.grid(alpha=0.3)

os.makedirs("demos/out", exist_ok=True)
out = "demos/out/04_variant_comparison.png"
fig.tight_layout()
fig.savefig(out, dpi=120)
print("wrote", out)
