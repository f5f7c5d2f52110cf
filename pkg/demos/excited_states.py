"""The same protocols for the first excited vibrational level, which only the
full solver can follow."""
import numpy as np

from threewell import preset
from threewell.harness import Policy, simulate

for level in (1, 0):
    r = simulate(preset("stirap_excited", level=level), Policy())
    print(f"transport at level {level}: efficiency {r.p_R[-1]:.4f}")

r = simulate(preset("split_excited"), Policy())
even = (np.abs(r.p_L - 0.5) < 0.07) & (np.abs(r.p_M - 0.5) < 0.07)
print(f"|1>_L / |1>_M split: 50/50 from t={r.times[even][0]:g} to {r.times[even][-1]:g}")
for t in range(0, int(r.times[-1]) + 1, 125):
    a = r.at(t)
    print(f"  t={t:5d}  p_L={a['p_L']:.3f} p_M={a['p_M']:.3f} p_R={a['p_R']:.3f}")
