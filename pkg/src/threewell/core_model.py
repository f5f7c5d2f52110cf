"""Dimensionless model of three in-line traps whose pair distances follow
cosine approach/separation ramps.

Lengths are measured in units of the oscillator length 1/alpha = sqrt(hbar/(m omega_x)),
times in 1/omega_x and energies in hbar*omega_x.  The middle trap sits at the
origin; the left and right traps move.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import constants

TRAPS = ("L", "M", "R")

#: Mass of a 87Rb atom in kilograms.
RB87_MASS = 86.909180527 * constants.atomic_mass


@dataclass(frozen=True)
class UnitSystem:
    """Physical scales behind the dimensionless units.

    Parameters
    ----------
    omega_x : float
        Trap angular frequency along the trap axis, in rad/s.
    mass : float
        Atomic mass in kg.
    """

    omega_x: float
    mass: float = RB87_MASS

    def __post_init__(self):
        if not self.omega_x > 0:
            raise ValueError(f"omega_x must be positive, got {self.omega_x}")
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")

    @property
    def inv_alpha(self) -> float:
        """Oscillator length sqrt(hbar / (m omega_x)) in metres."""
        return math.sqrt(constants.hbar / (self.mass * self.omega_x))

    @property
    def energy(self) -> float:
        """Energy quantum hbar*omega_x in joules."""
        return constants.hbar * self.omega_x


def to_physical_time(t, units: UnitSystem):
    """Convert a dimensionless time t*omega_x to seconds."""
    return np.asarray(t, dtype=float) / units.omega_x if np.ndim(t) else float(t) / units.omega_x


def to_physical_length(d, units: UnitSystem):
    """Convert a dimensionless length alpha*d to metres."""
    return d * units.inv_alpha


@dataclass(frozen=True)
class PairSchedule:
    """Time course of the distance between two neighbouring traps.

    The distance sits at ``d_max`` until ``t_start``, falls to ``d_min`` along a
    half cosine lasting ``t_ramp``, stays there for ``t_hold`` and returns to
    ``d_max`` along the mirrored half cosine.
    """

    d_max: float
    d_min: float
    t_ramp: float
    t_hold: float = 0.0
    t_start: float = 0.0

    def __post_init__(self):
        if not 0 < self.d_min < self.d_max:
            raise ValueError(f"need 0 < d_min < d_max, got d_min={self.d_min}, d_max={self.d_max}")
        if not self.t_ramp > 0:
            raise ValueError(f"t_ramp must be positive, got {self.t_ramp}")
        if self.t_hold < 0:
            raise ValueError(f"t_hold must be non-negative, got {self.t_hold}")
        if self.t_start < 0:
            raise ValueError(f"t_start must be non-negative, got {self.t_start}")

    @property
    def t_end(self) -> float:
        return self.t_start + 2 * self.t_ramp + self.t_hold

    def __call__(self, t):
        return pair_distance(self, t)


def pair_distance(s: PairSchedule, t):
    """Distance between the two traps of a pair at time ``t``.

    Accepts scalars or arrays; returns the same shape.
    """
    tau = np.asarray(t, dtype=float) - s.t_start
    approach = tau < s.t_ramp
    separate = tau > s.t_ramp + s.t_hold
    # phase runs 0 -> pi over each ramp; clipped outside the pulse support
    phase = np.where(approach, tau, np.where(separate, s.t_end - s.t_start - tau, s.t_ramp))
    phase = np.pi * np.clip(phase, 0.0, s.t_ramp) / s.t_ramp
    d = s.d_min + (s.d_max - s.d_min) * 0.5 * (1.0 + np.cos(phase))
    return float(d) if d.ndim == 0 else d


@dataclass(frozen=True)
class Stage:
    """Two simultaneous pair schedules.

    Schedule times are local to the stage.  ``duration`` defaults to the
    later of the two schedule end times.
    """

    lm: PairSchedule
    mr: PairSchedule
    duration: float | None = None

    def __post_init__(self):
        end = max(self.lm.t_end, self.mr.t_end)
        if self.duration is None:
            object.__setattr__(self, "duration", end)
        elif end > self.duration + 1e-9:
            raise ValueError(
                f"schedules end at t={end:g}, after the stage duration {self.duration:g}")


@dataclass(frozen=True)
class TrapPositions:
    x_L: float
    x_M: float
    x_R: float

    def __iter__(self):
        return iter((self.x_L, self.x_M, self.x_R))

    def shifted(self, offset: float) -> "TrapPositions":
        return TrapPositions(self.x_L + offset, self.x_M + offset, self.x_R + offset)


@dataclass(frozen=True)
class ProtocolSpec:
    """A complete transport experiment.

    ``dark_angle`` is the mixing angle of the reference dark state used for the
    ``p_dark`` observable.
    """

    stages: tuple[Stage, ...]
    level: int = 0
    dims: int = 1
    omega_y_ratio: float = 1.0
    initial_trap: str = "L"
    dark_angle: float = math.pi / 4
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise ValueError("a protocol needs at least one stage")
        if self.level not in (0, 1):
            raise ValueError(f"vibrational level must be 0 or 1, got {self.level}")
        if self.dims not in (1, 2):
            raise ValueError(f"dims must be 1 or 2, got {self.dims}")
        if not self.omega_y_ratio > 0:
            raise ValueError(f"omega_y_ratio must be positive, got {self.omega_y_ratio}")
        if self.initial_trap not in TRAPS:
            raise ValueError(f"initial_trap must be one of {TRAPS}, got {self.initial_trap!r}")

    @property
    def duration(self) -> float:
        return float(sum(st.duration for st in self.stages))

    @property
    def d_max(self) -> float:
        """Largest distance reached by either pair in any stage."""
        return max(max(st.lm.d_max, st.mr.d_max) for st in self.stages)

    def stage_starts(self) -> list[float]:
        starts, t0 = [], 0.0
        for st in self.stages:
            starts.append(t0)
            t0 += st.duration
        return starts

    def distances(self, t) -> tuple[np.ndarray, np.ndarray] | tuple[float, float]:
        """Pair distances (d_LM, d_MR) at time(s) ``t``."""
        t_arr = np.asarray(t, dtype=float)
        starts = np.array(self.stage_starts())
        idx = np.clip(np.searchsorted(starts, t_arr, side="right") - 1, 0, len(starts) - 1)
        d_lm = np.empty(t_arr.shape)
        d_mr = np.empty(t_arr.shape)
        for k, st in enumerate(self.stages):
            mask = idx == k
            local = t_arr[mask] - starts[k]
            d_lm[mask] = pair_distance(st.lm, local)
            d_mr[mask] = pair_distance(st.mr, local)
        if t_arr.ndim == 0:
            return float(d_lm), float(d_mr)
        return d_lm, d_mr

    def mirrored(self) -> "ProtocolSpec":
        """Exchange the roles of the left and right traps."""
        stages = tuple(Stage(st.mr, st.lm, st.duration) for st in self.stages)
        flip = {"L": "R", "M": "M", "R": "L"}[self.initial_trap]
        return replace(self, stages=stages, initial_trap=flip,
                       dark_angle=math.pi / 2 - self.dark_angle, name=f"{self.name}_mirror")

    def with_delay(self, delay: float, stage: int = 0) -> "ProtocolSpec":
        """Set the delay between the MR and LM approaches of one stage.

        Positive delay means MR approaches first (counterintuitive order).  A stage
        duration fixed longer than its schedules is kept (stretched if the new
        schedules need more), otherwise it follows the schedules.
        """
        if not math.isfinite(delay):
            raise ValueError(f"delay {delay}: must be finite")
        st = self.stages[stage]
        lm = replace(st.lm, t_start=max(delay, 0.0))
        mr = replace(st.mr, t_start=max(-delay, 0.0))
        needed = max(lm.t_end, mr.t_end)
        old_needed = max(st.lm.t_end, st.mr.t_end)
        duration = max(st.duration, needed) if st.duration > old_needed + 1e-9 else needed
        try:
            new = Stage(lm, mr, duration)
        except ValueError as exc:
            raise ValueError(f"delay {delay:g}: {exc}") from None
        stages = list(self.stages)
        stages[stage] = new
        return replace(self, stages=tuple(stages))

    @property
    def delay(self) -> float:
        st = self.stages[0]
        return st.lm.t_start - st.mr.t_start

    # --- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "level": self.level,
            "dims": self.dims,
            "omega_y_ratio": self.omega_y_ratio,
            "initial_trap": self.initial_trap,
            "dark_angle": self.dark_angle,
            "stages": [
                {
                    "duration_omega": st.duration,
                    "lm": _schedule_to_dict(st.lm),
                    "mr": _schedule_to_dict(st.mr),
                }
                for st in self.stages
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProtocolSpec":
        try:
            stages = tuple(
                Stage(_schedule_from_dict(st["lm"]), _schedule_from_dict(st["mr"]),
                      st.get("duration_omega"))
                for st in data["stages"]
            )
        except KeyError as exc:
            raise ValueError(f"protocol record is missing key {exc}") from None
        kwargs = {k: data[k] for k in ("level", "dims", "omega_y_ratio", "initial_trap",
                                       "dark_angle", "name") if k in data}
        return cls(stages=stages, **kwargs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ProtocolSpec":
        return cls.from_dict(json.loads(text))


_SCHEDULE_KEYS = {
    "d_max": "d_max_alpha",
    "d_min": "d_min_alpha",
    "t_ramp": "t_ramp_omega",
    "t_hold": "t_hold_omega",
    "t_start": "t_start_omega",
}


def _schedule_to_dict(s: PairSchedule) -> dict:
    return {key: getattr(s, attr) for attr, key in _SCHEDULE_KEYS.items()}


def _schedule_from_dict(d: dict) -> PairSchedule:
    unknown = set(d) - set(_SCHEDULE_KEYS.values())
    if unknown:
        raise ValueError(f"unknown schedule keys: {sorted(unknown)}")
    return PairSchedule(**{attr: float(d[key]) for attr, key in _SCHEDULE_KEYS.items() if key in d})


def trap_positions(spec: ProtocolSpec, t) -> TrapPositions:
    """Trap centres at time ``t``; the middle trap is pinned to the origin."""
    d_lm, d_mr = spec.distances(t)
    return TrapPositions(-d_lm, 0.0, d_mr)


# --- presets ------------------------------------------------------------

def _counterintuitive(d_max, d_min, t_ramp, hold_lm, hold_mr, delay) -> Stage:
    return Stage(
        lm=PairSchedule(d_max, d_min, t_ramp, hold_lm, t_start=delay),
        mr=PairSchedule(d_max, d_min, t_ramp, hold_mr, t_start=0.0),
    )


def _stirap() -> ProtocolSpec:
    return ProtocolSpec((_counterintuitive(6.0, 1.5, 150.0, 0.0, 0.0, 60.0),), name="stirap")


def _cpt_split() -> ProtocolSpec:
    return ProtocolSpec((_counterintuitive(7.0, 1.5, 200.0, 0.0, 120.0, 120.0),), name="cpt_split")


def _cpt_darktest() -> ProtocolSpec:
    split = _counterintuitive(7.0, 1.5, 200.0, 0.0, 120.0, 120.0)
    split = Stage(split.lm, split.mr, duration=600.0)
    probe = _counterintuitive(7.0, 1.5, 200.0, 0.0, 0.0, 0.0)
    return ProtocolSpec((split, probe), name="cpt_darktest")


def _eit() -> ProtocolSpec:
    return ProtocolSpec((_counterintuitive(6.0, 1.5, 150.0, 30.0, 150.0, 60.0),), name="eit")


def _stirap_excited() -> ProtocolSpec:
    return ProtocolSpec((_counterintuitive(9.0, 1.5, 300.0, 0.0, 0.0, 120.0),),
                        level=1, name="stirap_excited")


def _split_excited() -> ProtocolSpec:
    stage = Stage(
        lm=PairSchedule(9.0, 1.5, 550.0, 75.0, t_start=SPLIT_EXCITED_LM_START),
        mr=PairSchedule(9.0, 1.5, 400.0, 400.0, t_start=SPLIT_EXCITED_MR_START),
    )
    return ProtocolSpec((stage,), level=1, name="split_excited")


# delay not given with the published parameters; 200 gives a long 50/50 plateau
SPLIT_EXCITED_LM_START = 200.0
SPLIT_EXCITED_MR_START = 0.0

PRESETS = {
    "stirap": _stirap,
    "cpt_split": _cpt_split,
    "cpt_darktest": _cpt_darktest,
    "eit": _eit,
    "stirap_excited": _stirap_excited,
    "split_excited": _split_excited,
}


def preset(name: str, **overrides) -> ProtocolSpec:
    """Protocol with one of the built-in parameter sets.

    Keyword overrides (e.g. ``dims=2``) replace top-level fields.
    """
    try:
        spec = PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}") from None
    return replace(spec, **overrides) if overrides else spec
