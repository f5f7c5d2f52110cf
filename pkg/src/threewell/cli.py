"""Command line front end: ``threewell {run,scan,presets,converge}``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .core_model import PRESETS, ProtocolSpec, preset
from .grid_solver import ContainmentError, ConvergenceError
from .harness import (SOLVERS, SWEEPABLE, Policy, SweepSpec, convergence_report,
                      resolution_ladder, simulate, sweep, write_run, write_sweep)


def _load_spec(args) -> ProtocolSpec:
    if args.spec:
        return ProtocolSpec.from_json(Path(args.spec).read_text())
    if args.preset:
        return preset(args.preset)
    raise ValueError("give --preset or --spec")


def _policy(args) -> Policy:
    sample_time = 1.0
    dt = args.dt
    if args.sample_every is not None:
        step = dt if dt is not None else Policy(args.solver).time_step
        sample_time = args.sample_every * step
    kwargs = {}
    if args.spacing is not None:
        kwargs["spacing"] = args.spacing
    return Policy(args.solver, dt=dt, points=args.points, sample_time=sample_time, **kwargs)


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _values(text: str) -> list[float]:
    # "a:b:step" (inclusive) or a comma separated list
    if ":" in text:
        a, b, s = (float(v) for v in text.split(":"))
        return list(np.round(np.arange(a, b + 0.5 * s, s), 12))
    return _floats(text)


def cmd_run(args) -> int:
    spec = _load_spec(args)
    policy = _policy(args)
    snaps = _floats(args.snapshots) if args.snapshots else ()
    result = simulate(spec, policy, snapshot_times=snaps)
    stem = f"{spec.name}_{policy.solver}"
    for p in write_run(result, args.out, stem, spec, policy):
        print(p)
    f = result.final()
    print(f"final p_L={f['p_L']:.6f} p_M={f['p_M']:.6f} p_R={f['p_R']:.6f} "
          f"norm drift={result.norm_drift:.2e}")
    return 0


def cmd_scan(args) -> int:
    spec = _load_spec(args)
    s = SweepSpec(spec, args.param, _values(args.values), _policy(args))
    result = sweep(s, jobs=args.jobs)
    path = Path(args.out) / f"{spec.name}_{args.param}_scan_{s.policy.solver}.csv"
    for p in write_sweep(result, path):
        print(p)
    return 0


def cmd_presets(args) -> int:
    for name in PRESETS:
        spec = preset(name)
        st = spec.stages[0]
        print(f"{name:15s} level={spec.level} stages={len(spec.stages)} "
              f"d_max={st.lm.d_max:g} d_min={st.lm.d_min:g} t_ramp(lm/mr)={st.lm.t_ramp:g}/"
              f"{st.mr.t_ramp:g} delay={spec.delay:g} duration={spec.duration:g}")
    return 0


def cmd_converge(args) -> int:
    spec = _load_spec(args)
    report = convergence_report(spec, resolution_ladder(args.levels, _policy(args)))
    print(report.summary())
    return 0 if report.passed else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="threewell", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--preset", choices=list(PRESETS))
        p.add_argument("--spec", help="protocol JSON file")
        p.add_argument("--solver", choices=SOLVERS, default="grid_1d")
        p.add_argument("--dt", type=float)
        p.add_argument("--points", type=int, help="grid points along x (power of two)")
        p.add_argument("--spacing", type=float, help="grid spacing along x")
        p.add_argument("--sample-every", type=int, help="steps between samples")
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("run", help="run one protocol and write its time series")
    common(p)
    p.add_argument("--snapshots", help="comma separated snapshot times")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("scan", help="sweep one protocol parameter")
    common(p)
    p.add_argument("--param", choices=SWEEPABLE, default="delay")
    p.add_argument("--values", required=True, help="'start:stop:step' or 'v1,v2,...'")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("presets", help="list the built-in protocols")
    p.set_defaults(func=cmd_presets)

    p = sub.add_parser("converge", help="resolution ladder convergence study")
    common(p)
    p.add_argument("--levels", type=int, default=2)
    p.set_defaults(func=cmd_converge)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, ContainmentError, ConvergenceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
