"""Trap-resolved observables of a wavefunction and of a whole run.

Populations are raw overlaps with displaced harmonic-oscillator eigenfunctions.
No orthogonalization is applied, so when two traps are close the three
populations can add up to slightly more than one.  The dark-state projector is
normalized by its own norm, which differs from one only while the outer traps
overlap.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import eval_hermite, eval_laguerre, factorial

from .core_model import ProtocolSpec, TrapPositions

CSV_COLUMNS = ("t", "p_L", "p_M", "p_R", "p_dark", "coherence", "norm")
_FMT = "{:.15g}"


def oscillator_mode(n: int, x, center: float = 0.0, ratio: float = 1.0):
    """n-th eigenfunction of a harmonic trap with frequency ``ratio`` (units of omega_x)."""
    xi = math.sqrt(ratio) * (np.asarray(x, dtype=float) - center)
    norm = (ratio / math.pi) ** 0.25 / math.sqrt(2.0**n * factorial(n))
    return norm * eval_hermite(n, xi) * np.exp(-0.5 * xi**2)


def trap_overlaps(psi, positions: TrapPositions, n: int = 0) -> np.ndarray:
    """Complex overlaps <phi_n(x - x_i)|psi> for i = L, M, R.

    For a 2D wavefunction the y factor is the ground state of the transverse
    trap, ``psi.grid.omega_y_ratio`` giving its frequency.
    """
    grid = psi.grid
    amps = psi.amplitudes
    if amps.ndim == 2:
        phi_y = oscillator_mode(0, grid.y, 0.0, grid.omega_y_ratio)
        amps = amps @ phi_y * grid.dy
    x = grid.x
    return np.array([np.vdot(oscillator_mode(n, x, c), amps) * grid.dx for c in positions])


def populations(psi, positions: TrapPositions, n: int = 0) -> tuple[float, float, float]:
    p = np.abs(trap_overlaps(psi, positions, n)) ** 2
    return float(p[0]), float(p[1]), float(p[2])


def mode_overlap(n: int, separation: float) -> float:
    """<phi_n(x - a)|phi_n(x - b)> for |a - b| = separation (analytic)."""
    s2 = float(separation) ** 2
    if s2 > 4e3:
        return 0.0
    return float(math.exp(-0.25 * s2) * eval_laguerre(n, 0.5 * s2))


def dark_projection(overlaps, theta: float, gram: float = 0.0) -> float:
    """|<D|psi>|^2 / <D|D> with D = cos(theta) phi_L - sin(theta) phi_R.

    ``gram`` is <phi_L|phi_R>; zero for well separated traps.
    """
    amp = math.cos(theta) * overlaps[0] - math.sin(theta) * overlaps[2]
    return float(abs(amp) ** 2 / (1.0 - math.sin(2 * theta) * gram))


def dark_population(psi, positions: TrapPositions, theta: float, n: int = 0) -> float:
    """Probability in the normalized state cos(theta)|n>_L - sin(theta)|n>_R."""
    gram = mode_overlap(n, positions.x_R - positions.x_L)
    return dark_projection(trap_overlaps(psi, positions, n), theta, gram)


def coherence(psi, positions: TrapPositions, n: int = 0) -> float:
    """|c_L c_R*| from the trap overlaps; bounded by 1/2 for a normalized state."""
    c = trap_overlaps(psi, positions, n)
    return float(abs(c[0]) * abs(c[2]))


@dataclass(frozen=True)
class PopulationSample:
    time: float
    p_L: float
    p_M: float
    p_R: float
    p_dark: float
    coherence: float
    norm: float

    @classmethod
    def from_overlaps(cls, time, overlaps, theta, norm, gram=0.0) -> "PopulationSample":
        p = np.abs(overlaps) ** 2
        return cls(float(time), float(p[0]), float(p[1]), float(p[2]),
                   dark_projection(overlaps, theta, gram), float(abs(overlaps[0]) * abs(overlaps[2])),
                   float(norm))

    def as_tuple(self) -> tuple:
        return (self.time, self.p_L, self.p_M, self.p_R, self.p_dark, self.coherence, self.norm)


@dataclass
class Snapshot:
    """|psi|^2 on the grid at one instant, plus the trap layout."""

    time: float
    positions: TrapPositions
    density: np.ndarray
    x: np.ndarray
    y: np.ndarray | None
    norm: float

    def write(self, path) -> tuple[Path, Path]:
        """Write ``<path>.csv`` (x,density or x,y,density) and ``<path>.json``."""
        import json

        path = Path(path)
        csv_path, meta_path = path.with_suffix(".csv"), path.with_suffix(".json")
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            if self.y is None:
                w.writerow(("x", "density"))
                for xi, di in zip(self.x, self.density):
                    w.writerow((_FMT.format(xi), _FMT.format(di)))
            else:
                w.writerow(("x", "y", "density"))
                for i, xi in enumerate(self.x):
                    for j, yj in enumerate(self.y):
                        w.writerow((_FMT.format(xi), _FMT.format(yj), _FMT.format(self.density[i, j])))
        meta = {"time": self.time, "positions": list(self.positions), "norm": self.norm}
        meta_path.write_text(json.dumps(meta, indent=2))
        return csv_path, meta_path


@dataclass
class RunResult:
    """Sampled observables of one protocol run."""

    times: np.ndarray
    p_L: np.ndarray
    p_M: np.ndarray
    p_R: np.ndarray
    p_dark: np.ndarray
    coherence: np.ndarray
    norm: np.ndarray
    amplitudes: np.ndarray | None = None
    snapshots: list[Snapshot] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_samples(cls, samples, **kwargs) -> "RunResult":
        cols = np.array([s.as_tuple() for s in samples], dtype=float).T
        return cls(*cols, **kwargs)

    @classmethod
    def from_amplitudes(cls, times, amps, theta, **kwargs) -> "RunResult":
        amps = np.asarray(amps, dtype=complex)
        p = np.abs(amps) ** 2
        dark = np.abs(math.cos(theta) * amps[:, 0] - math.sin(theta) * amps[:, 2]) ** 2
        coh = np.abs(amps[:, 0]) * np.abs(amps[:, 2])
        return cls(np.asarray(times, dtype=float), p[:, 0], p[:, 1], p[:, 2], dark, coh,
                   p.sum(axis=1), amplitudes=amps, **kwargs)

    def __len__(self):
        return len(self.times)

    def table(self) -> np.ndarray:
        """Samples as an (n, 7) array in CSV column order."""
        return np.column_stack([getattr(self, _attr(c)) for c in CSV_COLUMNS])

    def final(self) -> dict:
        """Terminal observables keyed by CSV column name."""
        return {c: float(getattr(self, _attr(c))[-1]) for c in CSV_COLUMNS}

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - self.norm[0]))) if len(self.norm) else 0.0

    def at(self, t: float) -> dict:
        """Observables at the sample nearest to time ``t``."""
        i = int(np.argmin(np.abs(self.times - t)))
        return {c: float(getattr(self, _attr(c))[i]) for c in CSV_COLUMNS}

    def window(self, t0: float, t1: float) -> np.ndarray:
        """Boolean mask of samples with t0 <= t <= t1."""
        return (self.times >= t0 - 1e-9) & (self.times <= t1 + 1e-9)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.table():
            w.writerow([_FMT.format(v) for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def read_csv(cls, path) -> "RunResult":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if tuple(rows[0]) != CSV_COLUMNS:
            raise ValueError(f"unexpected header {rows[0]}")
        cols = np.array(rows[1:], dtype=float).T
        return cls(*cols)


def _attr(column: str) -> str:
    return "times" if column == "t" else column


def transfer_efficiency(result: RunResult, target: str = "R") -> float:
    """Population of the target trap at the last sample."""
    return float(getattr(result, f"p_{target}")[-1])


@dataclass
class ModelComparison:
    three_mode: RunResult
    grid: RunResult
    max_diff: dict
    final_diff: dict


def compare_models(spec: ProtocolSpec, *, grid=None, dt: float = 0.005,
                   three_mode_dt: float = 0.01, sample_time: float = 1.0) -> ModelComparison:
    """Run the reduced and the full model on the same schedule and
    report absolute population differences at matching sample times."""
    from .grid_solver import Grid, run
    from .three_mode import evolve_three_mode

    if spec.level != 0 or spec.dims != 1:
        raise ValueError("model comparison needs a 1D ground-level protocol")
    grid = grid or Grid.for_protocol(spec)
    full = run(spec, grid, dt=dt, sample_every=max(1, int(round(sample_time / dt))))
    reduced = evolve_three_mode(spec, dt=three_mode_dt,
                                sample_every=max(1, int(round(sample_time / three_mode_dt))))
    max_diff, final_diff = {}, {}
    for trap in ("L", "M", "R"):
        f = np.interp(reduced.times, full.times, getattr(full, f"p_{trap}"))
        diff = np.abs(getattr(reduced, f"p_{trap}") - f)
        max_diff[trap] = float(diff.max())
        final_diff[trap] = float(diff[-1])
    return ModelComparison(reduced, full, max_diff, final_diff)
