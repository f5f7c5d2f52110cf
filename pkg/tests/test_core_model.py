import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from threewell import (PRESETS, PairSchedule, ProtocolSpec, Stage, UnitSystem, pair_distance,
                       preset, to_physical_time, trap_positions)
from threewell.core_model import to_physical_length

schedules = st.builds(
    lambda d_min, extra, ramp, hold, start: PairSchedule(d_min + extra, d_min, ramp, hold, start),
    st.floats(0.1, 5), st.floats(0.1, 10), st.floats(1, 500), st.floats(0, 300), st.floats(0, 300))


def test_stirap_mr_schedule_reaches_minimum():
    s = PairSchedule(6, 1.5, 150, 0, 0)
    assert pair_distance(s, 150) == pytest.approx(1.5, abs=1e-12)
    assert pair_distance(s, 0) == 6
    assert pair_distance(s, 300) == pytest.approx(6)


def test_half_cosine_midpoint_and_hold():
    s = PairSchedule(7, 1.5, 200, 120, 40)
    assert pair_distance(s, 40 + 100) == pytest.approx(4.25)
    assert np.allclose(pair_distance(s, np.linspace(240, 360, 7)), 1.5)
    # separation mirrors the approach
    assert pair_distance(s, 360 + 50) == pytest.approx(pair_distance(s, 240 - 50))


def test_pair_distance_array_shape():
    s = PairSchedule(6, 1.5, 150)
    t = np.linspace(0, 400, 12).reshape(3, 4)
    assert pair_distance(s, t).shape == (3, 4)
    assert isinstance(pair_distance(s, 3.0), float)


@given(schedules, st.floats(0, 2000))
def test_pair_distance_bounded(s, t):
    d = pair_distance(s, t)
    assert s.d_min - 1e-12 <= d <= s.d_max + 1e-12
    if t <= s.t_start or t >= s.t_end:
        assert d == pytest.approx(s.d_max, abs=1e-12)


@given(schedules)
def test_pair_distance_monotone_ramps(s):
    down = pair_distance(s, np.linspace(s.t_start, s.t_start + s.t_ramp, 200))
    up = pair_distance(s, np.linspace(s.t_end - s.t_ramp, s.t_end, 200))
    assert np.all(np.diff(down) <= 1e-12)
    assert np.all(np.diff(up) >= -1e-12)


@pytest.mark.parametrize("kwargs", [
    dict(d_max=1, d_min=2, t_ramp=1), dict(d_max=2, d_min=0, t_ramp=1),
    dict(d_max=2, d_min=1, t_ramp=0), dict(d_max=2, d_min=1, t_ramp=1, t_hold=-1),
    dict(d_max=2, d_min=1, t_ramp=1, t_start=-1)])
def test_schedule_validation(kwargs):
    with pytest.raises(ValueError):
        PairSchedule(**kwargs)


def test_stage_rejects_schedules_past_its_end():
    s = PairSchedule(6, 1.5, 150)
    with pytest.raises(ValueError, match="after the stage duration"):
        Stage(s, s, duration=200)
    assert Stage(s, s).duration == 300


def test_preset_parameters():
    s = preset("stirap")
    st0 = s.stages[0]
    assert (st0.lm.d_max, st0.lm.d_min, st0.lm.t_ramp, st0.lm.t_hold) == (6, 1.5, 150, 0)
    assert s.delay == 60 and st0.mr.t_start == 0 and s.duration == 360
    c = preset("cpt_split").stages[0]
    assert (c.lm.d_max, c.lm.t_ramp, c.mr.t_hold, c.lm.t_start) == (7, 200, 120, 120)
    x = preset("split_excited")
    lm, mr = x.stages[0].lm, x.stages[0].mr
    assert (lm.t_ramp, lm.t_hold, mr.t_ramp, mr.t_hold, lm.d_max, x.level) == (550, 75, 400, 400, 9, 1)
    e = preset("eit").stages[0]
    assert e.lm.t_hold == 30


def test_cpt_darktest_second_stage():
    s = preset("cpt_darktest")
    assert s.stage_starts() == [0.0, 600.0]
    second = s.stages[1]
    assert second.mr.t_hold == 0 and second.lm.t_start == second.mr.t_start == 0
    d_lm, d_mr = s.distances(np.linspace(600, 1000, 41))
    assert np.allclose(d_lm, d_mr)
    assert s.duration == 1000


def test_unknown_preset_lists_names():
    with pytest.raises(ValueError) as exc:
        preset("nope")
    for name in PRESETS:
        assert name in str(exc.value)


def test_stirap_counterintuitive_order():
    s = preset("stirap")
    t = np.linspace(0, s.duration, 3601)
    d_lm, d_mr = s.distances(t)
    assert t[np.argmax(d_mr <= 1.5 + 1e-9)] < t[np.argmax(d_lm <= 1.5 + 1e-9)]


def test_trap_positions():
    s = preset("stirap")
    assert tuple(trap_positions(s, 0)) == (-6, 0, 6)
    p = trap_positions(s, 150)
    assert p.x_R == pytest.approx(1.5)
    assert p.x_L == pytest.approx(-pair_distance(s.stages[0].lm, 150))
    m = trap_positions(s.mirrored(), 150)
    assert (m.x_L, m.x_R) == pytest.approx((-p.x_R, -p.x_L))


@settings(max_examples=50)
@given(st.sampled_from(sorted(PRESETS)), st.floats(0, 1))
def test_traps_never_cross(name, frac):
    s = preset(name)
    p = trap_positions(s, frac * s.duration)
    assert p.x_L < p.x_M == 0 < p.x_R


def test_mirrored_swaps_schedules():
    s = preset("cpt_split")
    m = s.mirrored()
    assert m.initial_trap == "R"
    assert m.dark_angle == pytest.approx(math.pi / 2 - s.dark_angle)
    t = np.linspace(0, s.duration, 50)
    assert np.allclose(m.distances(t)[0], s.distances(t)[1])


def test_with_delay():
    s = preset("stirap")
    assert s.with_delay(100).delay == 100
    neg = s.with_delay(-60)
    assert neg.stages[0].lm.t_start == 0 and neg.stages[0].mr.t_start == 60
    # a fixed stage duration stretches when the new delay needs more time
    d = preset("cpt_darktest").with_delay(300)
    assert d.stages[0].duration == pytest.approx(700)
    assert preset("cpt_darktest").with_delay(150).stages[0].duration == 600


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_json_round_trip(name):
    s = preset(name)
    back = ProtocolSpec.from_json(s.to_json())
    assert back == s
    assert "d_max_alpha" in s.to_json() and "t_ramp_omega" in s.to_json()


def test_protocol_validation():
    st0 = preset("stirap").stages
    with pytest.raises(ValueError):
        ProtocolSpec(())
    with pytest.raises(ValueError):
        ProtocolSpec(st0, level=2)
    with pytest.raises(ValueError):
        ProtocolSpec(st0, omega_y_ratio=0)
    with pytest.raises(ValueError):
        ProtocolSpec(st0, initial_trap="X")


def test_units():
    u = UnitSystem(1e5)
    assert to_physical_time(360, u) == pytest.approx(3.6e-3)
    assert to_physical_time(0, u) == 0
    assert to_physical_time(1000, UnitSystem(1e4)) == pytest.approx(0.1)
    # oscillator length of Rb-87 at 1e5 rad/s is about 85 nm
    assert to_physical_length(1.0, u) == pytest.approx(85.2e-9, rel=0.01)
    t = np.array([1.0, 2.0, 5.0])
    assert np.allclose(to_physical_time(t, u), t / 1e5)
    with pytest.raises(ValueError):
        UnitSystem(-1)
