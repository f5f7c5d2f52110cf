"""Robustness of the transfer to the delay, ramp time and closest approach,
a resolution ladder for the full solver, and the physical time scale."""
from threewell import preset
from threewell.core_model import UnitSystem, to_physical_time
from threewell.harness import (Policy, SweepSpec, convergence_report, resolution_ladder, sweep)

tm = Policy("three_mode")
for name, values in (("delay", [-60, 0, 30, 60, 90, 120]), ("t_ramp", [120, 150, 180]),
                     ("d_min", [1.0, 1.5, 2.0])):
    res = sweep(SweepSpec(preset("stirap"), name, values, tm))
    print(name, " ".join(f"{v:g}:{e:.3f}" for v, e in zip(res.values, res.column("efficiency"))))

report = convergence_report(preset("stirap"), resolution_ladder(3, Policy(dt=0.02, spacing=0.1)))
print(report.summary())

for omega in (1e4, 1e5):
    t = to_physical_time(preset("stirap").duration, UnitSystem(omega))
    print(f"omega_x = {omega:.0e} rad/s: transport takes {t * 1e3:.1f} ms")
