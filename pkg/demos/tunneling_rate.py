"""Tunneling rate between two harmonic traps: closed form against brute force.

The closed-form Rabi frequency is compared with two independent numbers for
the same pair of traps: the ground-doublet splitting from imaginary-time
relaxation in each parity sector, and the half period of the full wavepacket
oscillation.
"""
import math

import numpy as np

from threewell import Grid, WaveFunction, rabi, relax
from threewell.grid_solver import energy, tunneling_half_period, two_trap_positions

print(" alpha*d   rabi        E1-E0       pi/T_half")
for ad in (2.0, 3.0, 4.0, 5.0):
    grid = Grid(-(ad + 9), ad + 9, 512)
    traps = two_trap_positions(ad)  # centres at -ad and +ad
    guess = WaveFunction(grid, np.exp(-0.5 * (grid.x - ad) ** 2) + 0j)
    e0 = energy(relax(traps, guess, dtau=0.05, tol=1e-15, parity="even"), traps)
    e1 = energy(relax(traps, guess, dtau=0.05, tol=1e-15, parity="odd"), traps)
    t_half = tunneling_half_period(traps, grid)
    print(f"{ad:7.1f}  {rabi(ad):.4e}  {e1 - e0:.4e}  {math.pi / t_half:.4e}")
