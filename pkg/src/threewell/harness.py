"""Parameter sweeps, convergence studies and file export."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .analysis import RunResult, transfer_efficiency
from .core_model import ProtocolSpec, Stage
from .grid_solver import ContainmentError, Grid, run
from .three_mode import evolve_three_mode

SOLVERS = ("three_mode", "grid_1d", "grid_2d")
SWEEPABLE = ("delay", "t_ramp", "d_min", "d_max")
SWEEP_COLUMNS = ("value", "efficiency", "p_L", "p_M", "p_R", "p_dark")
CONVERGENCE_TOL = 1e-3
_DEFAULT_DT = {"three_mode": 0.01, "grid_1d": 0.005, "grid_2d": 0.01}
_FMT = "{:.15g}"


@dataclass(frozen=True)
class Policy:
    """Numerical settings of one run.  ``dt=None`` picks the solver default."""

    solver: str = "grid_1d"
    dt: float | None = None
    spacing: float = 0.05
    margin: float = 6.0
    points: int | None = None
    sample_time: float = 1.0

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}; choose from {', '.join(SOLVERS)}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"time step must be positive, got {self.dt}")

    @property
    def time_step(self) -> float:
        return self.dt if self.dt is not None else _DEFAULT_DT[self.solver]

    @property
    def sample_every(self) -> int:
        return max(1, int(round(self.sample_time / self.time_step)))

    def grid_for(self, spec: ProtocolSpec) -> Grid:
        g = Grid.for_protocol(spec, spacing=self.spacing, margin=self.margin)
        if self.points is not None:
            g = Grid(g.x_min, g.x_max, self.points, g.y_min, g.y_max, g.ny, g.omega_y_ratio)
        return g

    def refined(self) -> "Policy":
        """Half the time step and twice the spatial resolution."""
        return replace(self, dt=self.time_step / 2, spacing=self.spacing / 2,
                       points=None if self.points is None else 2 * self.points)


def simulate(spec: ProtocolSpec, policy: Policy = Policy(), snapshot_times=()) -> RunResult:
    if policy.solver == "three_mode":
        if spec.level != 0:
            raise ValueError("the three-mode model covers the vibrational ground level only")
        return evolve_three_mode(spec, dt=policy.time_step, sample_every=policy.sample_every)
    dims = 2 if policy.solver == "grid_2d" else 1
    if spec.dims != dims:
        spec = replace(spec, dims=dims)
    return run(spec, policy.grid_for(spec), dt=policy.time_step,
               sample_every=policy.sample_every, snapshot_times=snapshot_times)


def terminal_observables(result: RunResult) -> dict:
    f = result.final()
    return {"efficiency": transfer_efficiency(result), "p_L": f["p_L"], "p_M": f["p_M"],
            "p_R": f["p_R"], "p_dark": f["p_dark"]}


def apply_parameter(spec: ProtocolSpec, name: str, value: float) -> ProtocolSpec:
    """Copy of ``spec`` with one robustness parameter set.

    ``delay`` acts on the first stage; the others act on both pairs of
    every stage.
    """
    if name not in SWEEPABLE:
        raise ValueError(f"cannot sweep {name!r}; sweepable parameters: {', '.join(SWEEPABLE)}")
    if name == "delay":
        return spec.with_delay(value)
    stages = []
    try:
        for st in spec.stages:
            lm = replace(st.lm, **{name: value})
            mr = replace(st.mr, **{name: value})
            fixed = st.duration > max(st.lm.t_end, st.mr.t_end) + 1e-9
            needed = max(lm.t_end, mr.t_end)
            stages.append(Stage(lm, mr, max(st.duration, needed) if fixed else None))
    except ValueError as exc:
        raise ValueError(f"{name}={value:g}: {exc}") from None
    return replace(spec, stages=tuple(stages))


@dataclass(frozen=True)
class SweepSpec:
    base: ProtocolSpec
    parameter: str
    values: tuple
    policy: Policy = Policy()
    output: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("sweep values must be strictly increasing")
        if self.parameter not in SWEEPABLE:
            raise ValueError(
                f"cannot sweep {self.parameter!r}; sweepable parameters: {', '.join(SWEEPABLE)}")


@dataclass
class SweepResult:
    parameter: str
    values: list
    rows: list
    provenance: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for v, row in zip(self.values, self.rows):
            w.writerow([_FMT.format(v)] + [_FMT.format(row[c]) for c in SWEEP_COLUMNS[1:]])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _terminal(args):
    spec, policy = args
    return terminal_observables(simulate(spec, policy))


def _provenance(spec: ProtocolSpec, policy: Policy) -> dict:
    from . import __version__

    return {"preset": spec.name, "policy": asdict(policy), "dt": policy.time_step,
            "sample_every": policy.sample_every, "version": __version__}


def _run_values(base, parameter, values, policy, jobs) -> SweepResult:
    specs = [apply_parameter(base, parameter, v) for v in values]
    tasks = [(s, policy) for s in specs]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_terminal, tasks))
    else:
        rows = [_terminal(t) for t in tasks]
    return SweepResult(parameter, [float(v) for v in values], rows, _provenance(base, policy))


def sweep(s: SweepSpec, jobs: int = 1) -> SweepResult:
    """Run ``s.base`` once per value; rows come back in input order."""
    result = _run_values(s.base, s.parameter, s.values, s.policy, jobs)
    if s.output:
        write_sweep(result, s.output)
    return result


def delay_scan(base: ProtocolSpec, delays, policy: Policy = Policy(), jobs: int = 1) -> SweepResult:
    """Terminal observables as a function of the MR-to-LM approach delay.

    Negative delays put the LM approach first.
    """
    delays = [float(d) for d in delays]
    if not delays:
        raise ValueError("delay scan needs at least one delay")
    if len(set(delays)) != len(delays):
        raise ValueError("delays must be distinct")
    return _run_values(base, "delay", delays, policy, jobs)


def plateau(values, observable, threshold: float, include: float | None = None):
    """Widest contiguous run of values with observable >= threshold.

    Returns (low, high) or None.  With ``include`` only runs containing that
    value are considered.
    """
    values = np.asarray(values, dtype=float)
    ok = np.asarray(observable) >= threshold
    best, i = None, 0
    while i < len(ok):
        if not ok[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(ok) and ok[j + 1]:
            j += 1
        lo, hi = values[i], values[j]
        if include is None or lo <= include <= hi:
            if best is None or hi - lo > best[1] - best[0]:
                best = (float(lo), float(hi))
        i = j + 1
    return best


@dataclass
class ConvergenceReport:
    """Terminal observables per resolution level and the changes between them.

    A level whose run broke down (probability leaking to the grid edge) has
    ``None`` in ``finals``, its message in ``failures`` and infinite deltas.
    """

    policies: list
    finals: list
    deltas: list
    failures: dict = field(default_factory=dict)
    tol: float = CONVERGENCE_TOL

    @property
    def finest_delta(self) -> float:
        return self.deltas[-1] if self.deltas else 0.0

    @property
    def passed(self) -> bool:
        return not self.failures and self.finest_delta <= self.tol

    def summary(self) -> str:
        lines = [f"level {k}: {msg}" for k, msg in self.failures.items()]
        for k, d in enumerate(self.deltas):
            p = self.policies[k + 1]
            lines.append(f"level {k + 1}: dt={p.time_step:g} spacing={p.spacing:g} max delta={d:.3e}")
        lines.append(f"finest delta {self.finest_delta:.3e} "
                     f"({'ok' if self.passed else 'FAILED'}, tolerance {self.tol:g})")
        return "\n".join(lines)


def resolution_ladder(levels: int = 2, base: Policy = Policy()) -> list[Policy]:
    ladder = [base]
    for _ in range(levels - 1):
        ladder.append(ladder[-1].refined())
    return ladder


def convergence_report(spec: ProtocolSpec, ladder, tol: float = CONVERGENCE_TOL) -> ConvergenceReport:
    """Max change of every terminal observable between successive resolutions."""
    ladder = list(ladder)
    if len(ladder) < 2:
        raise ValueError("a convergence study needs at least two resolution levels")
    finals, failures = [], {}
    for k, p in enumerate(ladder):
        try:
            finals.append(terminal_observables(simulate(spec, p)))
        except ContainmentError as exc:
            finals.append(None)
            failures[k] = str(exc)
    deltas = [math.inf if a is None or b is None else max(abs(b[k] - a[k]) for k in a)
              for a, b in zip(finals, finals[1:])]
    return ConvergenceReport(ladder, finals, deltas, failures, tol)


def write_run(result: RunResult, out_dir, stem: str, spec: ProtocolSpec,
              policy: Policy) -> list[Path]:
    """RunResult CSV, JSON metadata sidecar and any snapshot files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    result.to_csv(csv_path)
    meta = {"protocol": spec.to_dict(), **_provenance(spec, policy), "solver_meta": result.meta,
            "norm_drift": result.norm_drift}
    meta_path = out / f"{stem}.json"
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True))
    paths = [csv_path, meta_path]
    for snap in result.snapshots:
        paths.extend(snap.write(out / f"{stem}_snapshot_t{snap.time:g}"))
    return paths


def write_sweep(result: SweepResult, path) -> list[Path]:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    result.to_csv(path)
    meta_path = path.with_suffix(".json")
    meta_path.write_text(json.dumps({"parameter": result.parameter, **result.provenance},
                                    indent=2, sort_keys=True))
    return [path, meta_path]
