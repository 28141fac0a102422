"""Command-line front end: run scenarios and write CSV artifacts.

    cdfnav simulate     --scenario duffing.scenario --out runs/duffing
    cdfnav sweep        --scenario duffing.scenario --count 100 --seed 42 --out runs/sweep
    cdfnav density-grid --scenario dubin.scenario --resolution 201 --out runs/grid
    cdfnav validate     --scenario my.scenario

Shipped scenarios can be named by file name alone. ``--dt`` and ``--beta``
override the scenario's controller settings. The log level is read from
the CDFNAV_LOG_LEVEL environment variable (default WARNING).
"""

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from .errors import CdfError
from .scenario import load_scenario, shipped_scenarios
from .simulator import EXIT_CODES, monte_carlo_sweep, simulate, simulate_dubin

log = logging.getLogger("cdfnav")

EXIT_MALFORMED = 1
RHO_SENTINEL = 1e12


def fmt(v):
    """Round-trip decimal text for a float (17 significant digits)."""
    return format(float(v), ".17g")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _json_float(v):
    v = float(v)
    return v if np.isfinite(v) else None


def _load(args):
    sc = load_scenario(args.scenario)
    return sc.with_overrides(dt=args.dt, beta=args.beta)


def _run_one(sc, x0, keep_steps=False):
    if sc.is_dubin:
        return simulate_dubin(sc.density, sc.config, x0, sc.theta0, sc.k_gain, sys=sc.system, keep_steps=keep_steps)
    return simulate(sc.system, sc.density, sc.config, x0, keep_steps=keep_steps)


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def trajectory_rows(traj, density):
    """Rows of trajectory.csv; the last state has no control and flag 'terminal'."""
    m = traj.controls.shape[1]
    rows = []
    for k, (t, x) in enumerate(zip(traj.times, traj.states)):
        if k < len(traj.controls):
            u = [fmt(v) for v in traj.controls[k]]
            flag = traj.step_flags[k]
        else:
            u = [""] * m
            flag = "terminal"
        rows.append([fmt(t)] + [fmt(v) for v in x] + u + [fmt(traj.rho[k]), fmt(traj.clearance[k]), flag])
    return rows


def trajectory_header(sc):
    if sc.is_dubin:
        return ["t", "x1", "x2", "theta", "v", "omega", "rho", "min_clearance", "step_flag"]
    n, m = sc.system.n, sc.system.m
    return ["t"] + [f"x{i + 1}" for i in range(n)] + [f"u{i + 1}" for i in range(m)] + ["rho", "min_clearance", "step_flag"]


def cmd_simulate(args):
    sc = _load(args)
    if sc.x0 is None:
        raise CdfError("scenario has no [initial] x0")
    out = _out_dir(args)
    t0 = time.perf_counter()
    traj = _run_one(sc, sc.x0)
    wall = time.perf_counter() - t0
    _write_csv(out / "trajectory.csv", trajectory_header(sc), trajectory_rows(traj, sc.density))
    summary = {
        "scenario": sc.name,
        "outcome": traj.outcome,
        "exit_code": EXIT_CODES[traj.outcome],
        "terminal_distance": traj.terminal_distance,
        "unsafe_dwell_time": traj.unsafe_dwell_time,
        "min_clearance": _json_float(traj.min_clearance),
        "time_to_target": _json_float(traj.time_to_target),
        "steps": len(traj.controls),
        "relaxed_steps": traj.relaxed_steps,
        "wall_time": wall,
        "message": traj.message,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    log.info("%s: %s after %d steps (%.2f s)", sc.name, traj.outcome, len(traj.controls), wall)
    print(f"{traj.outcome}: terminal_distance={fmt(traj.terminal_distance)} steps={len(traj.controls)}")
    return EXIT_CODES[traj.outcome]


def cmd_sweep(args):
    sc = _load(args)
    count = args.count if args.count is not None else sc.count
    seed = args.seed if args.seed is not None else sc.seed
    if count is None or count < 1:
        raise CdfError("count must be ≥ 1")
    if sc.sampler is None:
        raise CdfError("scenario has no [sampler] section")
    out = _out_dir(args)
    t0 = time.perf_counter()
    rep = monte_carlo_sweep(sc.system, sc.density, sc.config, sc.sampler, count, seed, run=lambda x0: _run_one(sc, x0))
    wall = time.perf_counter() - t0

    n = rep.initial_states.shape[1]
    header = ["index"] + [f"x0_{i + 1}" for i in range(n)] + [
        "outcome", "terminal_distance", "dwell_time", "min_clearance", "relaxed_steps"]
    rows = []
    for i in range(rep.count):
        rows.append([str(i)] + [fmt(v) for v in rep.initial_states[i]] + [
            rep.outcomes[i], fmt(rep.terminal_distances[i]), fmt(rep.dwell_times[i]),
            fmt(rep.min_clearances[i]), str(int(rep.relaxed_steps[i]))])
    _write_csv(out / "sweep.csv", header, rows)
    summary = {
        "scenario": sc.name,
        "count": rep.count,
        "seed": seed,
        "fractions": {o: rep.fraction(o) for o in EXIT_CODES},
        "max_dwell_time": float(np.max(rep.dwell_times)),
        "min_clearance": _json_float(np.min(rep.min_clearances)),
        "wall_time": wall,
    }
    (out / "sweep_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"{rep.count} runs: converged {rep.converged_fraction:.3f}, unsafe {rep.unsafe_fraction:.3f}")
    return 0 if rep.unsafe_fraction == 0 else EXIT_CODES["unsafe"]


def grid_points(sc, resolution):
    """Full-dimensional states on the uniform grid plus their two plotted coordinates."""
    n = sc.density.n
    if sc.grid_lower is None:
        raise CdfError("scenario has no [grid] section")
    if n != 2 and sc.grid_slice is None:
        raise CdfError(f"state is {n}-D: [grid] needs a slice and fixed values")
    a = np.linspace(sc.grid_lower[0], sc.grid_upper[0], resolution)
    b = np.linspace(sc.grid_lower[1], sc.grid_upper[1], resolution)
    dims = sc.grid_slice or (0, 1)
    others = [i for i in range(n) if i not in dims]
    out = []
    for x2 in b:
        for x1 in a:
            x = np.zeros(n)
            x[list(dims)] = (x1, x2)
            if others:
                x[others] = sc.grid_fixed
            out.append((x1, x2, x))
    return dims, out


def cmd_density_grid(args):
    sc = _load(args)
    if args.resolution < 1:
        raise CdfError("resolution must be >= 1")
    dims, points = grid_points(sc, args.resolution)
    df = sc.density
    out = _out_dir(args)
    rows = []
    for x1, x2, x in points:
        if df.in_unsafe(x):
            r, g = 0.0, np.zeros(df.n)
        elif np.linalg.norm(x - df.target) <= df.eta:
            r, g = RHO_SENTINEL, np.zeros(df.n)
        else:
            r, g = df.rho(x), df.grad_rho(x)
        rows.append([fmt(x1), fmt(x2), fmt(r), fmt(g[dims[0]]), fmt(g[dims[1]]),
                     str(int(df.in_unsafe(x))), str(int(df.in_sensing(x)))])
    _write_csv(out / "grid.csv", ["x1", "x2", "rho", "gradx1", "gradx2", "in_unsafe", "in_sensing"], rows)
    print(f"{len(rows)} grid points written")
    return 0


def cmd_validate(args):
    sc = _load(args)
    print(f"ok: {sc.name} ({sc.system.name}, {len(sc.density.obstacles)} obstacles, mode {sc.config.mode})")
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True,
                        help="scenario file, or the name of a shipped one: " + ", ".join(shipped_scenarios()))
    common.add_argument("--dt", type=float, default=None, help="override the integration step")
    common.add_argument("--beta", type=float, default=None, help="override the divergence rate")

    parser = argparse.ArgumentParser(prog="cdfnav", description="Density-function navigation experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run one closed-loop trajectory")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common], help="Monte Carlo sweep over sampled initial states")
    p.add_argument("--out", default=".")
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("density-grid", parents=[common], help="export rho and its gradient on a grid")
    p.add_argument("--out", default=".")
    p.add_argument("--resolution", type=int, default=101)
    p.set_defaults(func=cmd_density_grid)

    p = sub.add_parser("validate", parents=[common], help="parse and check a scenario")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    logging.basicConfig(level=os.environ.get("CDFNAV_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CdfError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
