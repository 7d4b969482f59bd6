"""Command-line interface: plan / bench / genlattice / render.

Exit codes:

====  =====================================================================
   0  success
   2  no path produced for a well-formed query (unreachable goal, search
      limits exceeded, start or goal pose in collision)
   3  bad input (unparseable arguments, malformed map or control-set file,
      invalid configuration values, I/O errors)
   4  internal invariant violation (a bug; please report)
====  =====================================================================
"""

from __future__ import annotations

import argparse
import csv
import sys
import traceback
from typing import Optional, Sequence

from .bench import (DEFAULT_DENSITIES, generate_scenarios, run_benchmark,
                    summarize, write_records_csv)
from .costmap import MapError, load_map
from .lattice import (ControlSetError, generate_minimal_control_set,
                      save_control_set)
from .planner import (GOAL_MODES, MOTION_MODELS, PLANNER_KINDS, PlannerConfig,
                      PlannerError, PlannerInvariantError, GoalInCollision,
                      StartInCollision, plan, save_path_csv, smooth)
from .pose import PoseSE2
from .render import render
from .search import IterationLimit, NoPathExists, TimeLimit

EXIT_OK = 0
EXIT_NO_PATH = 2
EXIT_BAD_INPUT = 3
EXIT_INTERNAL = 4

# checked in order; StartInCollision/GoalInCollision subclass PlannerError,
# so the no-path group must be matched first
_NO_PATH_ERRORS = (NoPathExists, TimeLimit, IterationLimit,
                   StartInCollision, GoalInCollision)
_BAD_INPUT_ERRORS = (MapError, ControlSetError, PlannerError, ValueError,
                     OSError)


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to the bad-input exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_INPUT)


def _parse_pose(text: str) -> PoseSE2:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"pose must be 'x,y,theta', got {text!r}")
    return PoseSE2(float(parts[0]), float(parts[1]), float(parts[2]))


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p.strip())


def _read_path_csv(path: str) -> list[tuple[float, float]]:
    with open(path, newline="", encoding="ascii") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or header[:2] != ["x", "y"]:
            raise ValueError(f"{path}: expected a path CSV with x,y columns")
        return [(float(row[0]), float(row[1])) for row in reader]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gridplan",
                description="Cost-aware, kinematically feasible grid path "
                            "planning tools")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    dflt = PlannerConfig()

    pp = sub.add_parser("plan", help="plan a single start-goal query")
    pp.add_argument("--map", required=True, help="PGM map file (+.meta)")
    pp.add_argument("--start", required=True, type=_parse_pose,
                    metavar="X,Y,THETA")
    pp.add_argument("--goal", required=True, type=_parse_pose,
                    metavar="X,Y,THETA")
    pp.add_argument("--planner", default=dflt.planner_kind,
                    choices=PLANNER_KINDS)
    pp.add_argument("--out", help="write the path as CSV (x,y,theta,"
                                  "direction)")
    pp.add_argument("--alpha", type=float, default=dflt.alpha,
                    help="cost-awareness weight (default %(default)s)")
    pp.add_argument("--turning-radius", type=float,
                    default=dflt.turning_radius,
                    help="minimum turning radius in m (default %(default)s)")
    pp.add_argument("--heading-bins", type=int, default=dflt.heading_bins,
                    help="discrete headings (default %(default)s)")
    pp.add_argument("--motion-model", default=dflt.motion_model,
                    choices=MOTION_MODELS)
    pp.add_argument("--goal-mode", default=dflt.goal_mode, choices=GOAL_MODES)
    pp.add_argument("--allow-reverse", action="store_true",
                    help="permit reverse motion (reeds_shepp model only)")
    pp.add_argument("--reverse-penalty", type=float,
                    default=dflt.reverse_penalty)
    pp.add_argument("--control-set",
                    help="control-set file for the lattice planner "
                         "(default: generated and cached)")
    pp.add_argument("--smooth", action="store_true",
                    help="apply gradient smoothing to the planned path")
    pp.add_argument("--render", metavar="FILE",
                    help="write an SVG (or .ppm) rendering of map + path")

    bp = sub.add_parser("bench", help="run the scenario benchmark matrix")
    bp.add_argument("--densities", type=_parse_floats,
                    default=DEFAULT_DENSITIES, metavar="D1,D2,...",
                    help="obstacle densities (default 0.1,0.15,0.2)")
    bp.add_argument("--pairs", type=int, default=100,
                    help="scenarios per map (default %(default)s)")
    bp.add_argument("--maps-per-density", type=int, default=1)
    bp.add_argument("--seed", type=int, default=0)
    bp.add_argument("--size", type=float, default=20.0,
                    help="square map side in m (default %(default)s)")
    bp.add_argument("--resolution", type=float, default=0.1,
                    help="cell size in m (default %(default)s)")
    bp.add_argument("--planners", default=",".join(PLANNER_KINDS),
                    help="comma-separated planner kinds "
                         "(default %(default)s)")
    bp.add_argument("--warm", action="store_true",
                    help="also measure warm-cache replanning time")
    bp.add_argument("--csv", help="write per-run records to this CSV file")
    bp.add_argument("--render-dir",
                    help="write one SVG per scenario into this directory")

    gp = sub.add_parser("genlattice",
                        help="generate a minimal lattice control set")
    gp.add_argument("--radius", type=float, default=1.0,
                    help="minimum turning radius in m (default %(default)s)")
    gp.add_argument("--resolution", type=float, default=0.05,
                    help="grid resolution in m (default %(default)s)")
    gp.add_argument("--headings", type=int, default=16,
                    help="heading bins (default %(default)s)")
    gp.add_argument("--out", required=True, help="output control-set file")

    rp = sub.add_parser("render", help="render a map with optional paths")
    rp.add_argument("--map", required=True)
    rp.add_argument("--paths", nargs="*", default=[],
                    help="path CSV files to overlay")
    rp.add_argument("--out", required=True,
                    help="output image (.svg or .ppm)")
    return p


def _cmd_plan(args) -> int:
    cmap = load_map(args.map)
    config = PlannerConfig(
        planner_kind=args.planner, alpha=args.alpha,
        turning_radius=args.turning_radius, heading_bins=args.heading_bins,
        motion_model=args.motion_model, goal_mode=args.goal_mode,
        allow_reverse=args.allow_reverse,
        reverse_penalty=args.reverse_penalty,
        control_set_path=args.control_set)
    path = plan(cmap, args.start, args.goal, config)
    if args.smooth:
        path = smooth(path, cmap, config)
    print(f"planner={args.planner} length_m={path.length_m:.3f} "
          f"cost={path.cost_total:.3f} time_s={path.planning_time_s:.3f} "
          f"expansions={path.expansions}")
    if args.out:
        save_path_csv(path, args.out)
    if args.render:
        render(cmap, [(args.planner, path)], args.render)
    return EXIT_OK


def _cmd_bench(args) -> int:
    kinds = tuple(k.strip() for k in args.planners.split(",") if k.strip())
    for k in kinds:
        if k not in PLANNER_KINDS:
            raise ValueError(f"unknown planner kind {k!r}")
    maps, scenarios = generate_scenarios(
        densities=args.densities, maps_per_density=args.maps_per_density,
        pairs_per_map=args.pairs, seed=args.seed, size_m=args.size,
        resolution=args.resolution)
    paths_out = {} if args.render_dir else None
    records = run_benchmark(maps, scenarios, planner_kinds=kinds,
                            measure_warm=args.warm, paths_out=paths_out)
    if args.csv:
        write_records_csv(records, args.csv)
    if args.render_dir:
        import os
        os.makedirs(args.render_dir, exist_ok=True)
        by_scenario: dict[int, list] = {}
        for (sid, kind), path in paths_out.items():
            by_scenario.setdefault(sid, []).append((kind, path))
        for s in scenarios:
            if s.scenario_id in by_scenario:
                out = os.path.join(args.render_dir,
                                   f"scenario_{s.scenario_id:04d}.svg")
                render(maps[s.map_id],
                       sorted(by_scenario[s.scenario_id]), out)
    sys.stdout.write(summarize(records))
    failures = sum(r.outcome != "success" for r in records)
    print(f"runs={len(records)} failures={failures}")
    return EXIT_OK


def _cmd_genlattice(args) -> int:
    cs = generate_minimal_control_set(args.resolution, args.radius,
                                      args.headings)
    save_control_set(cs, args.out)
    counts = [len(cs.by_start_bin(b)) for b in range(args.headings)]
    print(f"wrote {args.out}: {sum(counts)} primitives, "
          f"{min(counts)}-{max(counts)} per heading")
    return EXIT_OK


def _cmd_render(args) -> int:
    cmap = load_map(args.map)
    import os
    overlays = [(os.path.splitext(os.path.basename(p))[0],
                 _read_path_csv(p)) for p in args.paths]
    render(cmap, overlays, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


_COMMANDS = {"plan": _cmd_plan, "bench": _cmd_bench,
             "genlattice": _cmd_genlattice, "render": _cmd_render}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except _NO_PATH_ERRORS as e:
        print(f"gridplan: no path: {e}", file=sys.stderr)
        return EXIT_NO_PATH
    except PlannerInvariantError as e:
        print(f"gridplan: internal invariant violation: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except _BAD_INPUT_ERRORS as e:
        print(f"gridplan: bad input: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
