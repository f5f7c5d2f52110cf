"""2D propagation with a transverse trap of the same frequency.  The motion
separates, so the trap populations follow the 1D run; density snapshots are
written as CSV files for plotting."""
import numpy as np

from threewell import preset
from threewell.harness import Policy, simulate, write_run

spec = preset("stirap", dims=2)
times = (0.0, 120.0, 180.0, 240.0, 360.0)
r2 = simulate(spec, Policy("grid_2d"), snapshot_times=times)
r1 = simulate(preset("stirap"), Policy())
diff = max(np.abs(getattr(r1, k) - getattr(r2, k)).max() for k in ("p_L", "p_M", "p_R"))
print(f"final p_R 2D {r2.p_R[-1]:.5f}, 1D {r1.p_R[-1]:.5f}; max difference {diff:.1e}")
for path in write_run(r2, "stirap_2d", "stirap", spec, Policy("grid_2d")):
    print("wrote", path)
