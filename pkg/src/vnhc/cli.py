"""Command-line interface.

Commands:
  check       hypothesis checks (rank, transversality) on points or a grid
  simulate    integrate the closed-loop system, write a CSV trajectory
  control-at  evaluate P, b, tau* at one state
  fixture     write a bundled fixture as a model file

Exit codes: 0 ok, 1 mathematical failure (violation/abort), 2 usage or
parse error.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
import time

from . import model_io, models
from .constraint import RankDefectError, transversality_check
from .control import TransversalityError, solve_control
from .geometry import SPDError, State
from .model_io import ModelFileError
from .sim import IntegrationError, integrate

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _parse_assignments(text: str) -> dict:
    out = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"expected name=value, got {part!r}")
        name, _, value = part.partition("=")
        out[name.strip()] = float(value)
    return out


def _parse_vector(text: str, n: int, flag: str) -> list[float]:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != n:
        raise ValueError(f"{flag} needs {n} comma-separated values, got {len(parts)}")
    return [float(p) for p in parts]


def _points(args, coordinates) -> list[tuple]:
    pts = []
    for text in args.point or []:
        values = _parse_assignments(text)
        unknown = set(values) - set(coordinates)
        if unknown:
            raise ValueError(f"unknown coordinates {sorted(unknown)} in --point")
        pts.append(tuple(values.get(c, 0.0) for c in coordinates))
    if args.grid:
        axes = {}
        for text in args.grid:
            name, _, spec = text.partition("=")
            if name not in coordinates:
                raise ValueError(f"unknown coordinate {name!r} in --grid")
            lo, hi, count = spec.split(":")
            count = int(count)
            if count < 1:
                raise ValueError("--grid count must be at least 1")
            lo, hi = float(lo), float(hi)
            step = (hi - lo) / (count - 1) if count > 1 else 0.0
            axes[name] = [lo + i * step for i in range(count)]
        ranges = [axes.get(c, [0.0]) for c in coordinates]
        pts.extend(itertools.product(*ranges))
    if not pts:
        pts.append(tuple(0.0 for _ in coordinates))
    return pts


def cmd_check(args) -> int:
    model, con = model_io.load_model(args.model)
    points = _points(args, model.coordinates)
    all_ok = True
    for q in points:
        rr = con.rank_check(q)
        line = f"q=({', '.join(f'{v:g}' for v in q)}) rank={'ok' if rr.ok else 'DEFECT'}({rr.rank}/{rr.expected_rank})"
        if rr.ok:
            try:
                tr = transversality_check(con, model, q)
                verdict = "ok" if tr.ok else "VIOLATION"
                line += f" transversality={verdict} cond={tr.cond_estimate:.6g} det={tr.det:.6g}"
                all_ok &= tr.ok
            except SPDError as err:
                line += f" metric=SPD-FAILURE ({err})"
                all_ok = False
        else:
            line += f" singular_values={[f'{s:.3e}' for s in rr.singular_values]}"
            all_ok = False
        print(line)
    return EXIT_OK if all_ok else EXIT_FAILURE


def _wrap_angle(v: float) -> float:
    w = (v + math.pi) % (2.0 * math.pi) - math.pi
    return math.pi if w == -math.pi else w


def cmd_simulate(args, parser) -> int:
    model, con = model_io.load_model(args.model)
    n = model.n
    q0 = _parse_vector(args.q0, n, "--q0")
    qd0 = _parse_vector(args.qdot0, n, "--qdot0")
    wrap_idx = set()
    for name in args.wrap or []:
        if name not in model.coordinates:
            parser.error(f"--wrap: unknown coordinate {name!r}")
        wrap_idx.add(model.coordinates.index(name))

    state0 = State(q=tuple(q0), qdot=tuple(qd0))
    if args.project:
        from .constraint import project_onto_A

        state0 = project_onto_A(con, model, state0)

    start = time.perf_counter()
    traj = integrate(
        model, con, state0,
        t_end=args.t_end, h=args.dt, sample_every=args.sample_every,
    )
    runtime = time.perf_counter() - start

    header = (
        ["t"]
        + list(model.coordinates)
        + [c + "d" for c in model.coordinates]
        + [f"tau_{a + 1}" for a in range(model.m)]
        + [f"phi_{b + 1}" for b in range(con.m)]
    )
    with open(args.out, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for t, st, tau, phi in zip(traj.times, traj.states, traj.controls, traj.phis):
            q = [
                _wrap_angle(v) if i in wrap_idx else v
                for i, v in enumerate(st.q)
            ]
            row = [t, *q, *st.qdot, *tau, *phi]
            f.write(",".join(f"{v:.17g}" for v in row) + "\n")

    summary = {
        "samples": len(traj.times),
        "t_end": args.t_end,
        "dt": args.dt,
        "phi0": list(traj.phis[0]),
        "drift_report": list(traj.drift_report),
        "runtime_s": runtime,
        "out": args.out,
    }
    print(json.dumps(summary))
    return EXIT_OK


def cmd_control_at(args) -> int:
    model, con = model_io.load_model(args.model)
    n = model.n
    q = _parse_vector(args.q, n, "--q")
    qd = _parse_vector(args.qdot, n, "--qdot")
    solve = solve_control(model, con, State(q=tuple(q), qdot=tuple(qd)))
    record = {
        "P": [list(row) for row in solve.P],
        "b": list(solve.b),
        "tau": list(solve.tau),
        "cond_estimate": solve.cond_estimate,
    }
    print(json.dumps(record))
    return EXIT_OK


def cmd_fixture(args, parser) -> int:
    if args.name == "boat":
        c1, c2 = models.FIXTURE_CURRENTS.get(args.current, (None, None))
        if c1 is None:
            parser.error(
                f"--current must be one of {sorted(models.FIXTURE_CURRENTS)}"
            )
        model, con = models.build_boat(c1, c2, m=args.mass, I=args.inertia)
    else:
        model, con = models.build_linear_fixture(m=args.mass, I=args.inertia)
    model_io.save_model(args.out, model, con)
    print(json.dumps({"out": args.out, "fixture": args.name}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vnhc",
        description="Synthesize and certify feedback laws that keep an "
        "affine velocity constraint invariant.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="rank and transversality checks")
    p.add_argument("model")
    p.add_argument("--point", action="append",
                   help="comma-separated name=value list; repeatable")
    p.add_argument("--grid", action="append", metavar="NAME=LO:HI:COUNT",
                   help="grid axis; repeatable, axes combine as a product")

    p = sub.add_parser("simulate", help="integrate the closed-loop system")
    p.add_argument("model")
    p.add_argument("--q0", required=True)
    p.add_argument("--qdot0", required=True)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--sample-every", type=int, default=1)
    p.add_argument("--project", action="store_true",
                   help="project the initial velocity onto the constraint set")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--wrap", action="append", metavar="COORD",
                   help="wrap this coordinate to (-pi, pi] in the CSV only")

    p = sub.add_parser("control-at", help="evaluate P, b, tau* at one state")
    p.add_argument("model")
    p.add_argument("--q", required=True)
    p.add_argument("--qdot", required=True)

    p = sub.add_parser("fixture", help="write a bundled fixture model file")
    p.add_argument("name", choices=["boat", "linear"])
    p.add_argument("--current", default="still",
                   help="boat current field: " + ", ".join(sorted(models.FIXTURE_CURRENTS)))
    p.add_argument("--m", dest="mass", type=float, default=1.0)
    p.add_argument("--I", dest="inertia", type=float, default=1.0)
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "check":
            return cmd_check(args)
        if args.command == "simulate":
            if args.t_end <= 0:
                parser.error("--t-end must be positive")
            if args.dt <= 0:
                parser.error("--dt must be positive")
            if args.sample_every < 1:
                parser.error("--sample-every must be at least 1")
            return cmd_simulate(args, parser)
        if args.command == "control-at":
            return cmd_control_at(args)
        return cmd_fixture(args, parser)
    except (ModelFileError, FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (TransversalityError, IntegrationError, SPDError, RankDefectError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
