"""
Command-line entry point: ``flipperplan <subcommand> ...``.

Exit codes: 0 success, 2 usage / invalid input, 3 infeasible plan or
unfinished replay, 4 I/O or malformed files. Errors go to stderr as one line.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config_gen import EPS_CONTACT
from .errors import DeadEndError, MapFormatError, ParamsError, PlannerError
from .follower import Disturbance, FollowerSettings, follow, write_report
from .inflation import InflatedMap, inflate
from .path_search import SearchSettings, export_path, import_path, plan, start_morphology
from .robot import RobotParams
from .terrain import (OBSTACLE_KINDS, SWEEP_ROTATIONS, ObstacleSpec, atomic_write_text,
                      generate_obstacle, load_map, save_map)

log = logging.getLogger("flipperplan")

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_IO = 0, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# shared option groups


def _add_robot_opts(p):
    p.add_argument("--params-file", help="robot parameter file, 'name = value' lines")
    p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE",
                   help="override one robot parameter (repeatable)")


def _add_search_opts(p):
    p.add_argument("--dx", type=float)
    p.add_argument("--dh", type=float)
    p.add_argument("--h-samples", type=int)
    p.add_argument("--target-x", type=float)


def _add_scene_opts(p):
    p.add_argument("--height", type=float, help="obstacle height (m)")
    p.add_argument("--axis-distance", type=float)
    p.add_argument("--slope-run", type=float)
    p.add_argument("--resolution", type=float)
    p.add_argument("--extent", type=float, nargs=2, metavar=("X", "Y"))


def _add_follow_opts(p):
    p.add_argument("--disturbance", default="none", help="none | yaw:<rad/tick> | gauss:<std m>")
    p.add_argument("--seed", type=int)
    p.add_argument("--ticks-max", type=int, default=100_000)
    p.add_argument("--pitch-effect", action="store_true")
    p.add_argument("--pitch-compensation", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flipperplan", description="Flipper morphology planning for a "
                     "four-flipper tracked robot on 2.5D elevation maps.")
    parser.add_argument("--config", help="file of 'key = value' defaults; explicit flags win")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-map", help="generate a step / ramp / iramp scene")
    g.add_argument("--kind", choices=OBSTACLE_KINDS, required=True)
    g.add_argument("--rot", type=float, default=0.0, help="rotation in degrees, [0, 90)")
    g.add_argument("--out", required=True)
    _add_scene_opts(g)

    i = sub.add_parser("inflate", help="inflate a map by the wheel radius")
    i.add_argument("--map", required=True)
    i.add_argument("--out", required=True)
    i.add_argument("--radius", type=float, help="defaults to the robot wheel radius")
    _add_robot_opts(i)

    pl = sub.add_parser("plan", help="search a morphology path over a map")
    pl.add_argument("--map", required=True, help="original (non-inflated) elevation map")
    pl.add_argument("--inflated", help="precomputed inflated map; built from --map if absent")
    pl.add_argument("--out", required=True)
    pl.add_argument("--start-x", type=float, default=0.0)
    pl.add_argument("--debug-candidates", metavar="CSV",
                    help="write every scored candidate of every step to CSV")
    _add_robot_opts(pl)
    _add_search_opts(pl)

    sm = sub.add_parser("simulate", help="replay a path with the kinematic follower")
    sm.add_argument("--path", required=True)
    sm.add_argument("--out", required=True, help="report directory")
    _add_follow_opts(sm)

    sw = sub.add_parser("sweep", help="plan and replay every kind x rotation case")
    sw.add_argument("--out", required=True)
    sw.add_argument("--kinds", nargs="+", choices=OBSTACLE_KINDS, default=list(OBSTACLE_KINDS))
    sw.add_argument("--rotations", nargs="+", type=float,
                    default=[float(r) for r in SWEEP_ROTATIONS])
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--save-maps", action="store_true")
    _add_follow_opts(sw)
    _add_robot_opts(sw)
    _add_search_opts(sw)
    _add_scene_opts(sw)

    pr = sub.add_parser("params", help="show robot parameters")
    pr.add_argument("--dump", action="store_true", help="print in params-file format")
    _add_robot_opts(pr)
    return parser


# ---------------------------------------------------------------------------
# config handling


def _read_config(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def _subparser(parser, name):
    for act in parser._subparsers._group_actions:
        if name in act.choices:
            return act.choices[name]
    raise UsageError(f"unknown command {name!r}")


def _apply_config(parser, argv):
    """Find --config and the command first, feed the config values in as
    defaults of that subcommand, then parse for real so explicit flags win."""
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    command = next((a for a in rest if a in COMMANDS), None)
    if not known.config or command is None:
        return parser.parse_args(argv)
    cfg = _read_config(known.config)
    sp = _subparser(parser, command)
    actions = {a.dest: a for a in sp._actions if a.dest != "help"}
    defaults = {}
    for k, v in cfg.items():
        if k not in actions:
            raise UsageError(f"{known.config}: unknown key {k!r} for {command}")
        a = actions[k]
        try:
            if a.nargs in ("+", 2):
                defaults[k] = [a.type(x) if a.type else x for x in v.split()]
            elif isinstance(a, argparse._StoreTrueAction):
                defaults[k] = v.lower() in ("1", "true", "yes", "on")
            elif isinstance(a, argparse._AppendAction):
                defaults[k] = v.split()
            else:
                defaults[k] = a.type(v) if a.type else v
        except ValueError:
            raise UsageError(f"{known.config}: bad value for {k!r}: {v!r}") from None
        if a.choices is not None and not a.nargs and defaults[k] not in a.choices:
            raise UsageError(f"{known.config}: {k} must be one of {sorted(a.choices)}")
        a.required = False
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def _robot_params(args) -> RobotParams:
    p = RobotParams()
    if getattr(args, "params_file", None):
        with open(args.params_file, encoding="utf-8") as fh:
            p = RobotParams.loads(fh.read(), p)
    overrides = getattr(args, "param", None) or []
    if overrides:
        p = RobotParams.loads("\n".join(overrides), p)
    return p


def _search_settings(args) -> SearchSettings:
    vals = {}
    for f in ("dx", "dh", "h_samples", "target_x"):
        v = getattr(args, f, None)
        if v is not None:
            vals[f] = v
    return SearchSettings(**vals)


def _scene(args, kind, rot) -> ObstacleSpec:
    vals = {}
    for arg, name in (("height", "obstacle_height"), ("axis_distance", "axis_distance"),
                      ("slope_run", "slope_run"), ("resolution", "resolution")):
        v = getattr(args, arg, None)
        if v is not None:
            vals[name] = v
    if getattr(args, "extent", None):
        vals["map_extent"] = tuple(args.extent)
    return ObstacleSpec(kind, rot, **vals)


def _disturbance(args) -> Disturbance:
    d = Disturbance.parse(args.disturbance, args.seed)
    if args.ticks_max < 1:
        raise UsageError("--ticks-max must be >= 1")
    return d


def _follower_settings(args) -> FollowerSettings:
    return FollowerSettings(pitch_effect=args.pitch_effect,
                            pitch_compensation=args.pitch_compensation)


def _check_input(path):
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such file: {path}")


def _check_out_file(path):
    parent = Path(path).resolve().parent
    if not parent.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {parent}")
    if not os.access(parent, os.W_OK):
        raise PermissionError(f"output directory not writable: {parent}")


def _check_out_dir(path):
    p = Path(path)
    if p.exists() and not p.is_dir():
        raise FileExistsError(f"not a directory: {p}")
    _check_out_file(p)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_map(args) -> int:
    spec = _scene(args, args.kind, args.rot)
    if not spec.in_standard_sweep:
        log.warning("rotation %.1f deg is outside the 0-40 deg experiment sweep", args.rot)
    _check_out_file(args.out)
    save_map(generate_obstacle(spec), args.out)
    return EXIT_OK


def cmd_inflate(args) -> int:
    params = _robot_params(args)
    r = args.radius if args.radius is not None else params.wheel_radius
    _check_input(args.map)
    _check_out_file(args.out)
    m = load_map(args.map)
    save_map(inflate(m, r), args.out)
    return EXIT_OK


def _candidate_rows(step, scored):
    for rank, sc in enumerate(scored):
        c = sc.candidate
        yield (step, rank, sc.side, sc.dh_index, repr(sc.cost), repr(c.pitch), repr(c.roll),
               c.bound)


def cmd_plan(args) -> int:
    params = _robot_params(args)
    settings = _search_settings(args)
    _check_input(args.map)
    if args.inflated:
        _check_input(args.inflated)
    _check_out_file(args.out)
    if args.debug_candidates:
        _check_out_file(args.debug_candidates)
    ground = load_map(args.map)
    if args.inflated:
        D = load_map(args.inflated)
        if not isinstance(D, InflatedMap) or abs(D.source_radius - params.wheel_radius) > 1e-12:
            raise ParamsError("--inflated map was not built with the robot wheel radius")
    else:
        D = inflate(ground, params.wheel_radius)

    rows = []
    hook = (lambda k, sc: rows.extend(_candidate_rows(k, sc))) if args.debug_candidates else None
    try:
        path = plan(start_morphology(D, params, args.start_x, 0.0, settings), D, params,
                    settings, ground=ground, on_step=hook)
    finally:
        if args.debug_candidates:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(("step", "rank", "side", "dh_index", "cost", "pitch", "roll", "bound"))
            w.writerows(rows)
            atomic_write_text(args.debug_candidates, buf.getvalue())
    export_path(path, args.out)
    log.info("planned %d steps, total cost %.6g", len(path), path.total_cost)
    return EXIT_OK


def cmd_simulate(args) -> int:
    dist = _disturbance(args)
    _check_input(args.path)
    _check_out_dir(args.out)
    path = import_path(args.path)
    if len(path) == 0:
        raise UsageError(f"{args.path}: path has no steps")
    rep = follow(path, path.params, dist, args.ticks_max, _follower_settings(args))
    write_report(rep, args.out)
    if not rep.completed:
        log.error("final target not reached within %d ticks", args.ticks_max)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_params(args) -> int:
    sys.stdout.write(_robot_params(args).dumps())
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep

SUMMARY_FIELDS = ("kind", "rotation_deg", "feasible", "followed", "steps", "total_cost",
                  "min_clearance", "final_position_error", "failure")


def case_name(kind: str, rot: float) -> str:
    return f"{kind}_{rot:04.1f}".replace(".", "p")


def run_case(kind, rot, spec, params, settings, disturbance, ticks_max, fsettings,
             out_dir, save_maps=False) -> dict:
    """Plan and replay one scene, writing its files under ``out_dir``."""
    from .config_gen import clearance
    from .robot import forward_kinematics, skeleton_samples

    row = dict(kind=kind, rotation_deg=rot, feasible=0, followed=0, steps=0, total_cost="",
               min_clearance="", final_position_error="", failure="")
    case_dir = Path(out_dir) / case_name(kind, rot)
    case_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    ground = generate_obstacle(spec)
    if save_maps:
        save_map(ground, case_dir / "map.grid")
    D = inflate(ground, params.wheel_radius)
    try:
        path = plan(start_morphology(D, params, 0.0, 0.0, settings), D, params, settings,
                    ground=ground)
    except PlannerError as exc:
        row["failure"] = str(exc)
        row["plan_seconds"] = time.perf_counter() - t0
        return row
    plan_seconds = time.perf_counter() - t0
    export_path(path, case_dir / "path.txt")
    worst = min(clearance(skeleton_samples(forward_kinematics(s.morphology, params),
                                           D.resolution / 2.0), D).min_clearance
                for s in path.steps)
    rep = follow(path, params, disturbance, ticks_max, fsettings)
    write_report(rep, case_dir / "report")
    final_err = float(np.linalg.norm(rep.position_error[-1])) if len(rep) else float("inf")
    row.update(feasible=1, steps=len(path), total_cost=repr(path.total_cost),
               min_clearance=repr(worst), final_position_error=repr(final_err),
               followed=int(rep.completed and final_err < fsettings.reach_radius
                            and worst >= -EPS_CONTACT))
    row["plan_seconds"] = plan_seconds
    return row


def _case_worker(job):
    return run_case(*job)


def cmd_sweep(args) -> int:
    params = _robot_params(args)
    settings = _search_settings(args)
    dist = _disturbance(args)
    fs = _follower_settings(args)
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    jobs = []
    for k_i, kind in enumerate(args.kinds):
        for r_i, rot in enumerate(args.rotations):
            spec = _scene(args, kind, rot)
            if not spec.in_standard_sweep:
                log.warning("rotation %.1f deg is outside the 0-40 deg experiment sweep", rot)
            case_dist = dist
            if dist.seed is not None:
                case_dist = replace(dist, seed=dist.seed * 1000 + k_i * 100 + r_i)
            jobs.append((kind, rot, spec, params, settings, case_dist, args.ticks_max, fs,
                         args.out, args.save_maps))
    _check_out_dir(args.out)
    Path(args.out).mkdir(exist_ok=True)

    if args.jobs == 1:
        rows = [_case_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_case_worker, jobs))

    buf = io.StringIO()
    w = csv.DictWriter(buf, SUMMARY_FIELDS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    atomic_write_text(Path(args.out) / "summary.csv", buf.getvalue())

    # one row per kind, one 0/1 column per rotation
    rots = list(args.rotations)
    lines = ["kind," + ",".join(f"{r:g}" for r in rots)]
    for kind in args.kinds:
        flags = {r["rotation_deg"]: r["followed"] for r in rows if r["kind"] == kind}
        lines.append(kind + "," + ",".join(str(flags[r]) for r in rots))
    atomic_write_text(Path(args.out) / "table.csv", "\n".join(lines) + "\n")

    # wall-clock timings vary run to run, so they live apart from the results
    timing = ["kind,rotation_deg,plan_seconds"]
    timing += [f"{r['kind']},{r['rotation_deg']:g},{r['plan_seconds']:.3f}" for r in rows]
    atomic_write_text(Path(args.out) / "timing.csv", "\n".join(timing) + "\n")

    for r in rows:
        log.info("%s %g: feasible=%d followed=%d %.2fs", r["kind"], r["rotation_deg"],
                 r["feasible"], r["followed"], r["plan_seconds"])
    return EXIT_OK if all(r["feasible"] for r in rows) else EXIT_INFEASIBLE


COMMANDS = {"gen-map": cmd_gen_map, "inflate": cmd_inflate, "plan": cmd_plan,
            "simulate": cmd_simulate, "sweep": cmd_sweep, "params": cmd_params}


def _setup_logging(verbose: bool):
    root = logging.getLogger("flipperplan")
    for h in list(root.handlers):
        if getattr(h, "_flipperplan_cli", False):
            root.removeHandler(h)
    h = logging.StreamHandler(sys.stderr)
    h.setFormatter(logging.Formatter("flipperplan: %(levelname)s: %(message)s"))
    h._flipperplan_cli = True
    root.addHandler(h)
    root.setLevel(logging.INFO if verbose else logging.WARNING)
    root.propagate = False


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except UsageError as exc:
        print(f"flipperplan: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"flipperplan: io error: {exc}", file=sys.stderr)
        return EXIT_IO
    _setup_logging(args.verbose)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        msg, code = f"usage error: {exc}", EXIT_USAGE
    except DeadEndError as exc:
        msg, code = f"infeasible: x={exc.x:.4f}: {exc}", EXIT_INFEASIBLE
    except MapFormatError as exc:
        msg, code = f"bad input file: {exc}", EXIT_IO
    except ParamsError as exc:
        msg, code = f"usage error: {exc}", EXIT_USAGE
    except PlannerError as exc:
        msg, code = f"infeasible: {exc}", EXIT_INFEASIBLE
    except OSError as exc:
        msg, code = f"io error: {exc}", EXIT_IO
    except ValueError as exc:
        msg, code = f"usage error: {exc}", EXIT_USAGE
    print("flipperplan: " + " ".join(msg.split()), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
