import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import eigh_tridiagonal

from threewell import (CouplingPair, Stage, ThreeModeState, couplings, dark_state,
                       evolve_three_mode, hamiltonian, mixing_angle, preset, rabi, tunneling_rate)
from threewell.three_mode import _rabi_scalar

couplings_st = st.builds(CouplingPair, st.floats(0, 2), st.floats(0, 2))


def fd_splitting(alpha_d: float, dx: float = 0.02) -> float:
    """E1 - E0 of two traps at +-alpha_d from a second-order finite-difference
    Hamiltonian (independent of the spectral solver)."""
    x = np.arange(-alpha_d - 10, alpha_d + 10, dx)
    v = 0.5 * np.minimum((x - alpha_d) ** 2, (x + alpha_d) ** 2)
    e = eigh_tridiagonal(1 / dx**2 + v, -0.5 / dx**2 * np.ones(len(x) - 1),
                         select="i", select_range=(0, 1))[0]
    return e[1] - e[0]


def test_rabi_limits():
    assert rabi(0.0) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-12)
    assert rabi(1e-4) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-3)
    assert 0 <= rabi(12.0) < 1e-30


@pytest.mark.parametrize("x", [1e-3, 6.0])
def test_rabi_branch_seams_continuous(x):
    # evaluate the neighbouring branches right at the crossover
    assert abs(_rabi_scalar(np.nextafter(x, 0)) - _rabi_scalar(x)) < 1e-12


def test_rabi_positive_and_monotone():
    x = np.arange(0.5, 8.0 + 1e-9, 0.01)
    r = rabi(x)
    assert np.all(r > 0)
    assert np.all(np.diff(r) < 0)
    assert np.all(rabi(np.linspace(0, 8, 50)) > 0)


def test_rabi_finite_for_huge_argument():
    assert np.isfinite(rabi(1e3)) and rabi(1e3) >= 0


def test_rabi_rejects_negative():
    with pytest.raises(ValueError):
        rabi(-0.1)
    with pytest.raises(ValueError):
        rabi(np.array([1.0, -1.0]))


@pytest.mark.parametrize("alpha_d", [3.0, 4.0, 5.0])
def test_rabi_matches_finite_difference_splitting(alpha_d):
    assert rabi(alpha_d) == pytest.approx(fd_splitting(alpha_d), rel=0.10)


def test_tunneling_rate_uses_half_separation():
    assert tunneling_rate(6.0) == rabi(3.0)


def test_couplings_from_protocol():
    s = preset("stirap")
    c = couplings(s, 150.0)
    assert c.omega_mr == pytest.approx(float(tunneling_rate(1.5)))
    d_lm = s.stages[0].lm(150.0)
    assert c.omega_lm == pytest.approx(float(tunneling_rate(d_lm)))
    far = couplings(preset("cpt_split"), 0.0)
    assert far.omega_lm == far.omega_mr < 1e-4


def test_hamiltonian_spectrum_and_dark_state():
    assert np.all(hamiltonian(CouplingPair(0, 0)) == 0)
    c = CouplingPair(0.3, 0.7)
    h = hamiltonian(c)
    assert np.allclose(h, h.conj().T)
    ev = np.linalg.eigvalsh(h)
    w = 0.5 * math.hypot(0.3, 0.7)
    assert np.allclose(ev, [-w, 0, w])
    d = dark_state(mixing_angle(c)).amplitudes
    assert np.allclose(h @ d, 0, atol=1e-15)


@given(couplings_st.filter(lambda c: c.omega_lm + c.omega_mr > 0))
def test_dark_state_is_null_vector(c):
    d = dark_state(mixing_angle(c))
    assert d.norm == pytest.approx(1)
    assert d.c_M == 0
    assert np.allclose(hamiltonian(c) @ d.amplitudes, 0, atol=1e-14)


def test_mixing_angle():
    assert mixing_angle(CouplingPair(0, 1)) == 0
    assert mixing_angle(CouplingPair(1, 1)) == pytest.approx(math.pi / 4)
    assert mixing_angle(CouplingPair(1, 0)) == pytest.approx(math.pi / 2)
    with pytest.raises(ValueError):
        mixing_angle(CouplingPair(0, 0))
    with pytest.raises(ValueError):
        CouplingPair(-1, 0)


def test_dark_state_examples():
    assert np.allclose(dark_state(0).amplitudes, [1, 0, 0])
    assert np.allclose(dark_state(math.pi / 2).amplitudes, [0, 0, -1])
    d = dark_state(math.pi / 4)
    assert abs(d.c_L * np.conj(d.c_R)) == pytest.approx(0.5)


def test_zero_coupling_keeps_state():
    s = preset("stirap")
    r = evolve_three_mode(s, coupling_fn=lambda t: (0.0, 0.0))
    assert np.all(r.p_L == 1) and np.all(r.p_R == 0)


def test_two_level_rabi_oscillation():
    s = preset("stirap")
    om = 0.05
    r = evolve_three_mode(s, dt=0.01, sample_every=10, coupling_fn=lambda t: (om, 0.0))
    assert np.allclose(r.p_M, np.sin(om * r.times / 2) ** 2, atol=1e-8)


def test_stirap_transfer_and_norm():
    r = evolve_three_mode(preset("stirap"))
    assert r.p_R[-1] >= 0.99
    assert r.norm_drift < 1e-8


@pytest.mark.parametrize("name", ["stirap", "cpt_split", "cpt_darktest", "eit"])
def test_norm_conserved(name):
    assert evolve_three_mode(preset(name)).norm_drift < 1e-8


def test_step_refinement_converged():
    s = preset("stirap")
    a = evolve_three_mode(s, dt=0.01).final()
    b = evolve_three_mode(s, dt=0.005).final()
    for k in ("p_L", "p_M", "p_R"):
        assert abs(a[k] - b[k]) < 1e-6


@given(st.floats(0.05, 1.2), st.floats(0.001, 0.2))
def test_dark_state_stationary_for_fixed_ratio(theta, scale):
    s = preset("stirap")
    ratio = math.tan(theta)
    fn = lambda t: (scale * ratio * (1 + np.sin(0.01 * t)), scale * (1 + np.sin(0.01 * t)))
    r = evolve_three_mode(s, dt=0.05, sample_every=50, initial=dark_state(theta), coupling_fn=fn)
    assert np.allclose(r.p_L, math.cos(theta) ** 2, atol=1e-6)
    assert np.allclose(r.p_R, math.sin(theta) ** 2, atol=1e-6)


def slowed(spec, factor):
    st0 = spec.stages[0]
    lm = replace(st0.lm, t_ramp=factor * st0.lm.t_ramp, t_start=factor * st0.lm.t_start)
    mr = replace(st0.mr, t_ramp=factor * st0.mr.t_ramp, t_start=factor * st0.mr.t_start)
    return replace(spec, stages=(Stage(lm, mr),))


@pytest.mark.xfail(strict=True, reason=(
    "with all three levels degenerate, the residual coupling rabi(3) ~ 4e-4 at the "
    "stirap separation rotates the dark state back towards equal weights while the "
    "traps part; the x4 slower run ends at p_R 0.989 against 0.9995"))
def test_slower_stirap_is_at_least_as_good():
    s = preset("stirap")
    assert evolve_three_mode(slowed(s, 4)).p_R[-1] >= evolve_three_mode(s).p_R[-1] - 1e-3


def test_slower_stirap_improves_when_ends_decouple():
    st0 = preset("stirap").stages[0]
    far = Stage(replace(st0.lm, d_max=9), replace(st0.mr, d_max=9))
    s = replace(preset("stirap"), stages=(far,))
    finals = [evolve_three_mode(slowed(s, k), dt=0.02).p_R[-1] for k in (1, 2, 4)]
    assert all(b >= a - 1e-3 for a, b in zip(finals, finals[1:]))
    assert finals[-1] > 0.9999


def test_mirror_symmetry():
    s = preset("stirap")
    a = evolve_three_mode(s)
    b = evolve_three_mode(s.mirrored())
    assert np.allclose(a.p_L, b.p_R, atol=1e-12)
    assert np.allclose(a.p_R, b.p_L, atol=1e-12)


def test_state_helpers():
    s = ThreeModeState.localized("M")
    assert np.allclose(s.populations, [0, 1, 0]) and s.norm == 1


def test_bad_step():
    with pytest.raises(ValueError):
        evolve_three_mode(preset("stirap"), dt=0)
