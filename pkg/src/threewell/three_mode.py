"""Reduced three-mode model: one localized vibrational state per trap,
coupled by nearest-neighbour tunneling."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx

from .core_model import ProtocolSpec, TRAPS

_SQRT_PI = math.sqrt(math.pi)
_SERIES_MAX = 1e-3
_ASYMPTOTIC_MIN = 6.0


@dataclass(frozen=True)
class ThreeModeState:
    c_L: complex
    c_M: complex
    c_R: complex

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([self.c_L, self.c_M, self.c_R], dtype=complex)

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norm(self) -> float:
        return float(self.populations.sum())

    @classmethod
    def localized(cls, trap: str) -> "ThreeModeState":
        c = [0j, 0j, 0j]
        c[TRAPS.index(trap)] = 1.0 + 0j
        return cls(*c)


@dataclass(frozen=True)
class CouplingPair:
    omega_lm: float
    omega_mr: float

    def __post_init__(self):
        if self.omega_lm < 0 or self.omega_mr < 0:
            raise ValueError("tunneling couplings must be non-negative")


def _rabi_scalar(x: float) -> float:
    if x < _SERIES_MAX:
        return (1 / _SQRT_PI + x * (1 / _SQRT_PI - 2 / math.pi)
                + x**3 * (2 / (3 * math.pi) - 1 / (2 * _SQRT_PI)))
    if x <= _ASYMPTOTIC_MIN:
        # expm1 avoids the cancellation in -1 + e^(x^2) and e^(2x^2) - 1 at small x
        num = math.expm1(x * x) + math.exp(x * x) * x * math.erfc(x)
        return num / (_SQRT_PI * math.expm1(2.0 * x * x) / (2.0 * x))
    # numerator and denominator scaled by exp(-2x^2); erfc via the scaled erfcx
    g = math.exp(-x * x)
    bracket = 1.0 - g * (1.0 - x * float(erfcx(x)))
    return 2.0 * x * g * bracket / (_SQRT_PI * -math.expm1(-2.0 * x * x))


_rabi_vec = np.vectorize(_rabi_scalar, otypes=[float])


def rabi(alpha_d):
    """Tunneling Rabi frequency (units of omega_x) between the vibrational
    ground states of two identical harmonic traps.

    ``alpha_d`` is the displacement of each trap centre from the barrier
    between them, in oscillator lengths, so the trap centres are ``2*alpha_d``
    apart.  The result equals the ground-doublet splitting of the
    piecewise-harmonic double well to within a few percent for alpha_d >= 1.5.
    """
    x = np.asarray(alpha_d, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("rabi frequency is defined for non-negative separations only")
    if x.ndim == 0:
        return _rabi_scalar(float(x))
    return _rabi_vec(x)


def tunneling_rate(separation):
    """Rabi frequency for two traps whose centres are ``separation`` apart."""
    return rabi(0.5 * np.asarray(separation, dtype=float))


def couplings(spec: ProtocolSpec, t) -> CouplingPair:
    d_lm, d_mr = spec.distances(t)
    return CouplingPair(float(tunneling_rate(d_lm)), float(tunneling_rate(d_mr)))


def hamiltonian(c: CouplingPair) -> np.ndarray:
    """3x3 tunneling Hamiltonian in units of hbar*omega_x, basis (L, M, R)."""
    a, b = c.omega_lm, c.omega_mr
    return -0.5 * np.array([[0.0, a, 0.0], [a, 0.0, b], [0.0, b, 0.0]])


def mixing_angle(c: CouplingPair) -> float:
    if c.omega_lm == 0 and c.omega_mr == 0:
        raise ValueError("mixing angle is undefined when both couplings vanish")
    return math.atan2(c.omega_lm, c.omega_mr)


def dark_state(theta: float) -> ThreeModeState:
    return ThreeModeState(complex(math.cos(theta)), 0j, complex(-math.sin(theta)))


def evolve_three_mode(spec: ProtocolSpec, dt: float = 0.01, sample_every: int = 100,
                      initial: ThreeModeState | None = None, coupling_fn=None):
    """Integrate i dc/dt = H(t) c with classical fixed-step RK4.

    Returns a :class:`~threewell.analysis.RunResult` whose ``amplitudes``
    attribute holds the sampled (c_L, c_M, c_R).  ``coupling_fn(t_array)`` may
    replace the protocol-derived couplings; it must return two arrays
    (omega_lm, omega_mr).
    """
    from .analysis import RunResult

    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt}")
    if sample_every < 1:
        raise ValueError("sample_every must be a positive integer")
    n_steps = int(round(spec.duration / dt))
    if n_steps < 1:
        raise ValueError(f"time step {dt} exceeds the protocol duration {spec.duration}")
    dt = spec.duration / n_steps

    # couplings at every full and half step
    t_half = 0.5 * dt * np.arange(2 * n_steps + 1)
    if coupling_fn is None:
        d_lm, d_mr = spec.distances(t_half)
        a_all, b_all = tunneling_rate(d_lm), tunneling_rate(d_mr)
    else:
        a_all, b_all = (np.broadcast_to(np.asarray(v, dtype=float), t_half.shape)
                        for v in coupling_fn(t_half))
    a_all = (0.5 * a_all).tolist()
    b_all = (0.5 * b_all).tolist()

    state = initial if initial is not None else ThreeModeState.localized(spec.initial_trap)
    cl, cm, cr = complex(state.c_L), complex(state.c_M), complex(state.c_R)

    def deriv(a, b, l, m, r):
        # -i H c with H = -(a (|L><M| + h.c.) + b (|M><R| + h.c.))
        return 1j * a * m, 1j * (a * l + b * r), 1j * b * m

    samples = [(0.0, cl, cm, cr)]
    h = dt
    for k in range(n_steps):
        a0, b0 = a_all[2 * k], b_all[2 * k]
        a1, b1 = a_all[2 * k + 1], b_all[2 * k + 1]
        a2, b2 = a_all[2 * k + 2], b_all[2 * k + 2]
        k1 = deriv(a0, b0, cl, cm, cr)
        k2 = deriv(a1, b1, cl + 0.5 * h * k1[0], cm + 0.5 * h * k1[1], cr + 0.5 * h * k1[2])
        k3 = deriv(a1, b1, cl + 0.5 * h * k2[0], cm + 0.5 * h * k2[1], cr + 0.5 * h * k2[2])
        k4 = deriv(a2, b2, cl + h * k3[0], cm + h * k3[1], cr + h * k3[2])
        cl += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        cm += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        cr += h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        if (k + 1) % sample_every == 0 or k + 1 == n_steps:
            samples.append(((k + 1) * dt, cl, cm, cr))

    times = np.array([s[0] for s in samples])
    amps = np.array([s[1:] for s in samples], dtype=complex)
    return RunResult.from_amplitudes(times, amps, spec.dark_angle,
                                     meta={"solver": "three_mode", "dt": dt,
                                           "sample_every": sample_every, "protocol": spec.name})
