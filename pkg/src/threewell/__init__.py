"""Coherent transport of a single atom among three tunnel-coupled traps."""
from .analysis import (RunResult, coherence, compare_models, dark_population, populations,
                       transfer_efficiency)
from .core_model import (PRESETS, PairSchedule, ProtocolSpec, Stage, TrapPositions, UnitSystem,
                         pair_distance, preset, to_physical_time, trap_positions)
from .grid_solver import Grid, WaveFunction, eigenstate, potential, relax, run, run_2d, step
from .three_mode import (CouplingPair, ThreeModeState, couplings, dark_state, evolve_three_mode,
                         hamiltonian, mixing_angle, rabi, tunneling_rate)

__version__ = "0.1.0"
