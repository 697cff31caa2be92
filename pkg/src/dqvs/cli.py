"""Command-line entry point.

Exit codes: 0 success, 1 episode failure or failed check, 2 usage error,
3 unreadable or invalid input file.
"""

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dq as dql
from .controller import error_metrics, regulate
from .grasping import initial_grasp, locomo_score, rerank, to_world
from .io import (FormatError, parse_chain, parse_grasps, parse_scenario, write_convergence,
                 write_telemetry)
from .kinematics import finite_difference_error, forward_kinematics
from .sim import ablation_grid, ablation_suite, format_table, run_episode

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 3

DATA_DIR = Path(__file__).parent / "data"
JACOBIAN_TOL = 1e-5


def _pose(values):
    return dql.parse_pose(values)


def _outdir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args):
    config, _ = parse_scenario(args.scenario)
    config = replace(config, observation=replace(config.observation, seed=args.seed))
    result = run_episode(config)
    out = _outdir(args.out)
    write_telemetry(out / "telemetry.csv", result.telemetry, config.chain.dof)
    switches = "NA" if result.switches is None else result.switches
    print(f"status={result.status} success={result.success} switches={switches} "
          f"time_to_grasp={result.time_to_grasp:.3f} clamp_events={result.clamp_events} "
          f"no_grasp_steps={result.no_grasp_steps}")
    return EXIT_OK if result.success else EXIT_FAIL


def cmd_ablate(args):
    path = args.scenario or DATA_DIR / "h_line.scenario"
    base, _ = parse_scenario(path)
    base = replace(base, observation=replace(base.observation, seed=args.seed))
    rows = ablation_suite(ablation_grid(base), jobs=args.jobs)
    out = _outdir(args.out)
    table = format_table(rows)
    (out / "ablation.txt").write_text(table + "\n", encoding="utf-8")
    with open(out / "ablation.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "success", "switches", "time", "clamps", "no_grasp_steps"])
        for r in rows:
            w.writerow([r["name"], int(r["success"]), "NA" if r["switches"] is None else r["switches"],
                        repr(float(r["time"])), r["clamps"], r["no_grasp_steps"]])
    print(table)
    full_ok = all(r["success"] for r in rows if r["name"].endswith("/full"))
    return EXIT_OK if full_ok else EXIT_FAIL


def cmd_rank(args):
    cands = parse_grasps(args.grasps)
    gripper = _pose(args.pose)
    x_o = _pose(args.object) if args.object else dql.IDENTITY
    world = [to_world(c, x_o, locomo_score(c)) for c in cands]
    dists = [dql.dq_distance(gripper, g.world_pregrasp) for g in world]
    ups, degenerate = rerank(dists)
    print("id score distance upsilon")
    for g, d, u in zip(world, dists, ups):
        print(f"{g.id} {g.locomo_score!r} {d!r} {float(u)!r}")
    if degenerate:
        print("# degenerate re-rank: all distances equal")
    return EXIT_OK


def cmd_check_jacobian(args):
    chain = parse_chain(args.chain)
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for _ in range(args.trials):
        q = rng.uniform(chain.lower, chain.upper)
        worst = max(worst, finite_difference_error(chain, q, args.step))
    print(f"max finite-difference error over {args.trials} configurations: {worst:.3e}")
    return EXIT_OK if worst < JACOBIAN_TOL else EXIT_FAIL


def cmd_convergence(args):
    config, extras = parse_scenario(args.scenario)
    chain = config.chain
    if extras["target_q"] is not None:
        target = forward_kinematics(chain, np.array(extras["target_q"]))
    else:
        start = config.trajectory.start_pose
        world = [to_world(c, start) for c in config.candidates]
        target = initial_grasp(world).world_pregrasp
    steps = args.steps or extras["steps"]
    rows = regulate(chain, np.array(config.q0), target, config.gains, steps, config.use_nullspace)
    out = _outdir(args.out)
    write_convergence(out / "convergence.csv", rows)
    trans, rot = error_metrics(rows[-1]["e"])
    print(f"final translation error {trans:.3e} m, rotation error {np.degrees(rot):.3e} deg "
          f"after {steps} iterations")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="dqvs", description="Dual quaternion visual servoing toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one episode and write telemetry.csv")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("ablate", help="run the trajectory x variant grid")
    a.add_argument("--scenario", help="base scenario (default: bundled h_line.scenario)")
    a.add_argument("--out", required=True)
    a.add_argument("--seed", type=int, required=True)
    a.add_argument("--jobs", type=int, default=1)
    a.set_defaults(func=cmd_ablate)

    r = sub.add_parser("rank", help="print scores and re-rank values of a grasp file")
    r.add_argument("--grasps", required=True)
    r.add_argument("--pose", type=float, nargs=8, required=True, metavar="X", help="gripper pose")
    r.add_argument("--object", type=float, nargs=8, metavar="X", help="object pose (default identity)")
    r.set_defaults(func=cmd_rank)

    c = sub.add_parser("check-jacobian", help="compare the Jacobian with finite differences")
    c.add_argument("--chain", required=True)
    c.add_argument("--trials", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--step", type=float, default=1e-6)
    c.set_defaults(func=cmd_check_jacobian)

    v = sub.add_parser("convergence", help="static-target regulation, error vs iteration CSV")
    v.add_argument("--scenario", required=True)
    v.add_argument("--out", default=".")
    v.add_argument("--steps", type=int)
    v.set_defaults(func=cmd_convergence)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except FormatError as exc:
        for line in exc.errors:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
