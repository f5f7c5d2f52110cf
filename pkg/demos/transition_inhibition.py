"""Inhibited transfer: the left and middle traps come close, but driving the
middle-right pair keeps the atom in the left trap.  The delay scan uses the
fast three-mode model; pass --grid to use the full solver instead."""
import sys

from threewell import preset
from threewell.harness import Policy, delay_scan, plateau

solver = "grid_1d" if "--grid" in sys.argv else "three_mode"
scan = delay_scan(preset("eit"), range(0, 151, 10), Policy(solver))
for v, row in zip(scan.values, scan.rows):
    bar = "#" * int(40 * row["p_L"])
    print(f"delay {v:5.0f}  p_L={row['p_L']:.4f} {bar}")
print("p_L >= 0.95 for delays", plateau(scan.values, scan.column("p_L"), 0.95, include=60))
