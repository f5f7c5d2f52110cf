"""Split-step Fourier propagation of one atom in three moving
piecewise-harmonic traps, in one or two dimensions."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft, linalg, optimize

from .analysis import (PopulationSample, RunResult, Snapshot, mode_overlap, oscillator_mode,
                       trap_overlaps)
from .core_model import TRAPS, ProtocolSpec, TrapPositions, trap_positions

DEFAULT_DT = 0.005
DEFAULT_SPACING = 0.05
DEFAULT_MARGIN = 6.0
EDGE_FRACTION = 0.05
LEAK_LIMIT = 1e-4


class ContainmentError(RuntimeError):
    """Probability reached the outer edge of the grid."""


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid; ``n_points`` must be a power of two.

    The optional transverse axis (``y_min``, ``y_max``, ``ny``) makes the grid 2D.
    """

    x_min: float
    x_max: float
    n_points: int
    y_min: float | None = None
    y_max: float | None = None
    ny: int | None = None
    omega_y_ratio: float = 1.0

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be below x_max")
        n = self.n_points
        if n < 256 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 256, got {n}")
        if self.ny is not None and (self.ny < 8 or self.ny & (self.ny - 1)):
            raise ValueError(f"ny must be a power of two >= 8, got {self.ny}")

    @classmethod
    def for_protocol(cls, spec: ProtocolSpec, spacing: float = DEFAULT_SPACING,
                     margin: float = DEFAULT_MARGIN, y_spacing: float = 0.5,
                     y_half_width: float = 8.0) -> "Grid":
        """Smallest power-of-two grid with the requested spacing covering
        [-d_max - margin, d_max + margin]."""
        span = 2 * (spec.d_max + margin)
        n = max(256, 1 << math.ceil(math.log2(span / spacing - 1e-9)))
        half = 0.5 * n * spacing
        kwargs = {}
        if spec.dims == 2:
            half_y = y_half_width / math.sqrt(spec.omega_y_ratio)
            ny = max(8, 1 << math.ceil(math.log2(2 * half_y / y_spacing - 1e-9)))
            half_y = 0.5 * ny * y_spacing
            kwargs = dict(y_min=-half_y, y_max=half_y, ny=ny, omega_y_ratio=spec.omega_y_ratio)
        return cls(-half, half, n, **kwargs)

    @property
    def dims(self) -> int:
        return 1 if self.ny is None else 2

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def dy(self) -> float:
        return 1.0 if self.ny is None else (self.y_max - self.y_min) / self.ny

    @property
    def y(self) -> np.ndarray | None:
        return None if self.ny is None else self.y_min + self.dy * np.arange(self.ny)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_points,) if self.ny is None else (self.n_points, self.ny)

    @property
    def cell(self) -> float:
        return self.dx * self.dy

    def kinetic(self) -> np.ndarray:
        """k^2/2 on the FFT frequency layout."""
        kx = 2 * np.pi * fft.fftfreq(self.n_points, self.dx)
        if self.ny is None:
            return 0.5 * kx**2
        ky = 2 * np.pi * fft.fftfreq(self.ny, self.dy)
        return 0.5 * (kx[:, None] ** 2 + ky[None, :] ** 2)

    def refined(self, factor: int = 2) -> "Grid":
        """Same extent with ``factor`` times more points along x."""
        return Grid(self.x_min, self.x_max, self.n_points * factor, self.y_min, self.y_max,
                    self.ny, self.omega_y_ratio)

    def edge_mask(self) -> np.ndarray:
        n_edge = max(1, int(round(EDGE_FRACTION * self.n_points)))
        mask = np.zeros(self.n_points, bool)
        mask[:n_edge] = mask[-n_edge:] = True
        return mask


@dataclass
class WaveFunction:
    grid: Grid
    amplitudes: np.ndarray
    time: float = 0.0

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.cell)

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.amplitudes / math.sqrt(self.norm()), self.time)

    def edge_probability(self) -> float:
        rho = self.density()
        if rho.ndim == 2:
            rho = rho.sum(axis=1) * self.grid.dy
        return float(rho[self.grid.edge_mask()].sum() * self.grid.dx)


def potential(positions: TrapPositions, x, y=None, omega_y_ratio: float = 1.0):
    """min_i (x - x_i)^2 / 2, plus (omega_y_ratio y)^2 / 2 when ``y`` is given
    (returned as an outer sum over the x and y axes)."""
    x = np.asarray(x, dtype=float)
    xl, xm, xr = positions
    v = 0.5 * np.minimum(np.minimum((x - xl) ** 2, (x - xm) ** 2), (x - xr) ** 2)
    if y is None:
        return v
    return v[:, None] + 0.5 * omega_y_ratio**2 * np.asarray(y, dtype=float)[None, :] ** 2


def eigenstate(n: int, center: float, grid: Grid, margin: float = 6.0) -> WaveFunction:
    """Harmonic-oscillator eigenstate |n> centred at ``center``; for a 2D grid
    the transverse factor is the y ground state."""
    if n not in (0, 1):
        raise ValueError(f"vibrational level must be 0 or 1, got {n}")
    if not grid.x_min + margin <= center <= grid.x_max - margin:
        raise ValueError(f"centre {center} lies within {margin} of the grid boundary")
    psi = oscillator_mode(n, grid.x, center).astype(complex)
    if grid.ny is not None:
        psi = psi[:, None] * oscillator_mode(0, grid.y, 0.0, grid.omega_y_ratio)[None, :]
    return WaveFunction(grid, psi).normalized()


def energy(psi: WaveFunction, positions: TrapPositions) -> float:
    """<H> evaluated spectrally (kinetic in momentum space)."""
    grid = psi.grid
    amps = psi.amplitudes
    phi_k = fft.fftn(amps)
    kin = np.sum(grid.kinetic() * np.abs(phi_k) ** 2) / amps.size
    pot = np.sum(potential(positions, grid.x, grid.y, grid.omega_y_ratio) * np.abs(amps) ** 2)
    return float((kin + pot) / np.sum(np.abs(amps) ** 2))


def _reflect(amps: np.ndarray) -> np.ndarray:
    # x -> -x on the grid x_i = -n dx/2 + i dx
    return np.roll(amps[::-1], 1, axis=0)


def relax(positions: TrapPositions, guess: WaveFunction, steps: int = 200_000,
          dtau: float = 0.01, tol: float = 1e-10, parity: str | None = None) -> WaveFunction:
    """Lowest state of the static potential by imaginary-time propagation.

    ``parity`` ("even" or "odd") restricts the search to one reflection
    sector about x = 0, which needs a grid symmetric about the origin.
    Converged when the energy changes by less than ``tol`` in one step.
    """
    grid = guess.grid
    if not np.any(guess.amplitudes):
        raise ValueError("initial guess is identically zero")
    if parity not in (None, "even", "odd"):
        raise ValueError(f"parity must be 'even', 'odd' or None, got {parity!r}")
    if parity is not None and not math.isclose(grid.x_min, -grid.x_max):
        raise ValueError("parity projection needs a grid centred on the origin")
    sign = {"even": 1.0, "odd": -1.0, None: 0.0}[parity]
    half_v = np.exp(-0.5 * dtau * potential(positions, grid.x, grid.y, grid.omega_y_ratio))
    kin = np.exp(-dtau * grid.kinetic())
    amps = guess.amplitudes.astype(complex)
    e_old = math.inf
    for _ in range(steps):
        amps = half_v * fft.ifftn(kin * fft.fftn(half_v * amps))
        if parity is not None:
            amps = 0.5 * (amps + sign * _reflect(amps))
        amps /= math.sqrt(np.sum(np.abs(amps) ** 2) * grid.cell)
        e = energy(WaveFunction(grid, amps), positions)
        if abs(e - e_old) < tol:
            return WaveFunction(grid, amps)
        e_old = e
    raise ConvergenceError(f"relaxation did not reach dE < {tol} in {steps} steps")


def step(psi: WaveFunction, positions: TrapPositions, dt: float) -> WaveFunction:
    """One Strang step: half potential kick, free flight, half potential kick."""
    grid = psi.grid
    half_v = np.exp(-0.5j * dt * potential(positions, grid.x, grid.y, grid.omega_y_ratio))
    kin = np.exp(-1j * dt * grid.kinetic())
    amps = half_v * fft.ifftn(kin * fft.fftn(half_v * psi.amplitudes))
    return WaveFunction(grid, amps, psi.time + dt)


def initial_state(spec: ProtocolSpec, grid: Grid, offset: float = 0.0) -> WaveFunction:
    pos = trap_positions(spec, 0.0).shifted(offset)
    return eigenstate(spec.level, list(pos)[TRAPS.index(spec.initial_trap)], grid)


def two_trap_positions(alpha_d: float) -> TrapPositions:
    """Only two traps, at -alpha_d and +alpha_d (the third is pushed to infinity)."""
    return TrapPositions(-alpha_d, alpha_d, math.inf)


def run(spec: ProtocolSpec, grid: Grid | None = None, dt: float = DEFAULT_DT,
        sample_every: int = 200, snapshot_times=(), psi0: WaveFunction | None = None,
        offset: float = 0.0) -> RunResult:
    """Propagate ``spec`` from its initial trap state and sample observables.

    ``offset`` rigidly shifts all traps (and the default initial state).
    Raises :class:`ContainmentError` if more than 1e-4 of the probability
    reaches the outer 5% of the grid.
    """
    grid = grid or Grid.for_protocol(spec)
    if grid.dims != spec.dims:
        raise ValueError(f"grid is {grid.dims}D but the protocol asks for {spec.dims}D")
    if sample_every < 1:
        raise ValueError("sample_every must be a positive integer")
    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt}")
    n_steps = max(1, int(round(spec.duration / dt)))
    dt = spec.duration / n_steps

    if psi0 is None:
        psi0 = initial_state(spec, grid, offset)
    amps = psi0.amplitudes.astype(complex)

    x = grid.x
    kin = np.exp(-1j * dt * grid.kinetic())
    vy_half = None
    if grid.ny is not None:
        vy_half = np.exp(-0.25j * dt * grid.omega_y_ratio**2 * grid.y**2)[None, :]
    # trap coordinates at every step midpoint
    d_lm, d_mr = spec.distances((np.arange(n_steps) + 0.5) * dt)
    xl_all = offset - d_lm
    xr_all = offset + d_mr
    snap_steps = {int(round(t / dt)): t for t in snapshot_times}

    samples, snapshots = [], []
    theta, level = spec.dark_angle, spec.level

    def record(k):
        t = k * dt
        pos = trap_positions(spec, t).shifted(offset)
        wf = WaveFunction(grid, amps, t)
        norm = wf.norm()
        if wf.edge_probability() > LEAK_LIMIT:
            raise ContainmentError(
                f"{wf.edge_probability():.3g} of the probability reached the grid edge at "
                f"t={t:g}; enlarge the grid margin")
        gram = mode_overlap(level, pos.x_R - pos.x_L)
        samples.append(PopulationSample.from_overlaps(t, trap_overlaps(wf, pos, level), theta, norm,
                                                      gram))
        if k in snap_steps:
            snapshots.append(Snapshot(t, pos, wf.density(), x, grid.y, norm))

    def kick(k, weight):
        xl, xr = xl_all[k], xr_all[k]
        v = 0.5 * np.minimum(np.minimum((x - xl) ** 2, (x - offset) ** 2), (x - xr) ** 2)
        return v * weight

    record(0)
    # Strang steps with the closing half kick of step k fused into the
    # opening half kick of step k+1 unless the state is sampled in between
    phase = kick(0, 0.5)
    for k in range(n_steps):
        half = np.exp(-1j * dt * phase)
        amps = (half if vy_half is None else half[:, None] * vy_half) * amps
        amps = fft.ifftn(kin * fft.fftn(amps))
        sample_here = (k + 1) % sample_every == 0 or k + 1 == n_steps or (k + 1) in snap_steps
        if sample_here or k + 1 == n_steps:
            half = np.exp(-1j * dt * kick(k, 0.5))
            amps = (half if vy_half is None else half[:, None] * vy_half) * amps
            record(k + 1)
            if k + 1 < n_steps:
                phase = kick(k + 1, 0.5)
        else:
            phase = kick(k, 0.5) + kick(k + 1, 0.5)
            if vy_half is not None:
                # closing transverse half kick; the opening one comes with `half`
                amps = vy_half * amps

    # snapshot-only samples would break uniform sampling; keep them out of the series
    keep = [i for i, s in enumerate(samples)
            if round(s.time / dt) % sample_every == 0 or i == len(samples) - 1]
    samples = [samples[i] for i in keep]
    meta = {"solver": f"grid_{grid.dims}d", "dt": dt, "sample_every": sample_every,
            "protocol": spec.name, "n_points": grid.n_points, "x_min": grid.x_min,
            "x_max": grid.x_max, "ny": grid.ny, "y_min": grid.y_min, "y_max": grid.y_max}
    return RunResult.from_samples(samples, snapshots=snapshots, meta=meta)


def run_2d(spec: ProtocolSpec, grid: Grid | None = None, dt: float = DEFAULT_DT,
           sample_every: int = 200, snapshot_times=()) -> RunResult:
    if spec.dims != 2:
        raise ValueError("run_2d needs a protocol with dims=2")
    return run(spec, grid or Grid.for_protocol(spec), dt, sample_every, snapshot_times)


def tunneling_half_period(positions: TrapPositions, grid: Grid, dt: float = 0.05,
                          source: str = "L", target: str = "M") -> float:
    """Time for the atom to move from ``source`` to ``target`` under static traps.

    The one-step split-step propagator is built as a dense matrix and
    diagonalized once, so arbitrarily long propagation times cost nothing
    extra.  The half period is the first maximum of the target population.
    """
    if grid.ny is not None:
        raise ValueError("tunneling_half_period is 1D only")
    n = grid.n_points
    half_v = np.exp(-0.5j * dt * potential(positions, grid.x))
    kin = np.exp(-1j * dt * grid.kinetic())
    u = half_v[:, None] * fft.ifft(kin[:, None] * fft.fft(np.diag(half_v), axis=0), axis=0)
    lam, vecs = linalg.eig(u)
    phases = np.angle(lam)
    psi0 = oscillator_mode(0, grid.x, list(positions)[TRAPS.index(source)]).astype(complex)
    coeff = linalg.solve(vecs, psi0)
    probe = oscillator_mode(0, grid.x, list(positions)[TRAPS.index(target)]) * grid.dx
    weights = (probe @ vecs) * coeff
    psi_norm = np.sum(np.abs(psi0) ** 2) * grid.dx

    def p_target(t):
        return float(np.abs(np.sum(weights * np.exp(1j * phases * (t / dt)))) ** 2 / psi_norm)

    # grow t geometrically until half the population has arrived, then bracket the maximum
    t = 1.0
    while p_target(t) < 0.5:
        t *= 2 ** 0.125
        if t > 1e16:
            raise ConvergenceError("no tunneling observed")
    lo, hi = t / 2 ** 0.125, 3 * t
    ts = np.linspace(lo, hi, 4001)
    ps = np.array([p_target(s) for s in ts])
    i = int(np.argmax(ps))
    res = optimize.minimize_scalar(lambda s: -p_target(s),
                                   bounds=(ts[max(i - 1, 0)], ts[min(i + 1, len(ts) - 1)]),
                                   method="bounded", options={"xatol": 1e-10 * ts[i]})
    return float(res.x)
