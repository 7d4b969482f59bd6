"""Benchmark harness: scenario generation over random maps, a planner
matrix runner with CSV output, and a summary table.

Scenarios are verified start-goal pairs: both poses in free space, at
least 3 m apart, and connected in the 8-connected free grid. Timing is
wall clock around the `plan` call only; the optional warm column re-plans
with the already-expanded obstacle-heuristic cache to expose the
replanning speedup. Everything except the timing columns is a
deterministic function of (seed, configuration).
"""

from __future__ import annotations

import csv
import math
import time
import warnings
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import label

from .costmap import Costmap, generate_random_map
from .heuristics import ObstacleHeuristicCache
from .planner import Path, PlannerConfig, plan
from .pose import PoseSE2

DEFAULT_DENSITIES = (0.10, 0.15, 0.20)
CSV_HEADER = ["scenario_id", "planner", "density", "t_cold_ms", "t_warm_ms",
              "l_path_m", "cost_total", "expansions", "outcome"]

MIN_SEPARATION_M = 3.0


@dataclass(frozen=True)
class Scenario:
    scenario_id: int
    map_id: str
    density: float
    seed: int
    start: PoseSE2
    goal: PoseSE2


@dataclass
class BenchRecord:
    scenario_id: int
    planner: str
    density: float
    t_cold_ms: float
    t_warm_ms: Optional[float]
    l_path_m: float
    cost_total: float
    expansions: int
    outcome: str  # "success" or the failure class name


def _free_components(cmap: Costmap) -> np.ndarray:
    """8-connected component label per traversable cell (0 = blocked)."""
    free = cmap.cells < 254
    labels, _count = label(free, structure=np.ones((3, 3), dtype=int))
    return labels


def generate_scenarios(densities: Sequence[float] = DEFAULT_DENSITIES,
                       maps_per_density: int = 1,
                       pairs_per_map: int = 100,
                       seed: int = 0,
                       size_m: float = 20.0,
                       resolution: float = 0.1
                       ) -> tuple[dict[str, Costmap], list[Scenario]]:
    """Random maps plus verified start-goal scenarios on them.

    Pairs are rejection-sampled from free cells whose 3x3 neighborhood is
    free, requiring >= 3 m separation and shared membership in one
    8-connected free component (2D reachability). Headings face from start
    toward goal. Deterministic in ``seed``; a map on which the pair budget
    cannot be filled within bounded attempts is skipped with a warning.
    """
    maps: dict[str, Costmap] = {}
    scenarios: list[Scenario] = []
    sid = 0
    for density in densities:
        for mi in range(maps_per_density):
            map_seed = seed * 7919 + int(round(density * 1000)) * 131 + mi
            map_id = f"d{int(round(density * 100)):02d}_m{mi}_s{map_seed}"
            cmap = generate_random_map(size_m, size_m, resolution, density,
                                       seed=map_seed)
            comps = _free_components(cmap)
            interior = np.zeros_like(comps, dtype=bool)
            cells = cmap.cells
            interior[1:-1, 1:-1] = (
                (cells[1:-1, 1:-1] == 0) & (cells[:-2, 1:-1] == 0)
                & (cells[2:, 1:-1] == 0) & (cells[1:-1, :-2] == 0)
                & (cells[1:-1, 2:] == 0) & (cells[:-2, :-2] == 0)
                & (cells[:-2, 2:] == 0) & (cells[2:, :-2] == 0)
                & (cells[2:, 2:] == 0))
            iys, ixs = np.nonzero(interior)
            rng = np.random.default_rng(map_seed + 1)
            found = 0
            attempts = 0
            max_attempts = 500 * pairs_per_map
            while found < pairs_per_map and attempts < max_attempts:
                attempts += 1
                i, j = rng.integers(0, len(ixs), size=2)
                sx, sy = cmap.grid_to_world(int(ixs[i]), int(iys[i]))
                gx, gy = cmap.grid_to_world(int(ixs[j]), int(iys[j]))
                if math.hypot(gx - sx, gy - sy) < MIN_SEPARATION_M:
                    continue
                if comps[iys[i], ixs[i]] != comps[iys[j], ixs[j]]:
                    continue
                theta = math.atan2(gy - sy, gx - sx)
                scenarios.append(Scenario(
                    scenario_id=sid, map_id=map_id, density=density,
                    seed=map_seed, start=PoseSE2(sx, sy, theta),
                    goal=PoseSE2(gx, gy, theta)))
                sid += 1
                found += 1
            if found < pairs_per_map:
                warnings.warn(
                    f"map {map_id}: only {found}/{pairs_per_map} verified "
                    f"pairs found; skipping the rest")
            maps[map_id] = cmap
    return maps, scenarios


def _planner_config(kind: str, overrides: Optional[PlannerConfig]) -> \
        PlannerConfig:
    if overrides is None:
        return PlannerConfig(planner_kind=kind)
    return replace(overrides, planner_kind=kind)


def run_scenario(cmap: Costmap, scenario: Scenario, kind: str,
                 config: Optional[PlannerConfig] = None,
                 measure_warm: bool = False
                 ) -> tuple[BenchRecord, Optional[Path]]:
    """One planner on one scenario; failures become records, not raises."""
    cfg = _planner_config(kind, config)
    try:
        t0 = time.perf_counter()
        path = plan(cmap, scenario.start, scenario.goal, cfg)
        t_cold = (time.perf_counter() - t0) * 1e3
        t_warm = None
        if measure_warm and kind != "twod":
            cache = ObstacleHeuristicCache(
                cmap, cmap.world_to_grid(scenario.goal.x, scenario.goal.y),
                cfg.alpha)
            plan(cmap, scenario.start, scenario.goal, cfg,
                 heuristic_cache=cache)  # primes the cache
            t1 = time.perf_counter()
            plan(cmap, scenario.start, scenario.goal, cfg,
                 heuristic_cache=cache)
            t_warm = (time.perf_counter() - t1) * 1e3
        return BenchRecord(scenario.scenario_id, kind, scenario.density,
                           t_cold, t_warm, path.length_m, path.cost_total,
                           path.expansions, "success"), path
    except Exception as e:  # record the failure, never abort the matrix
        return BenchRecord(scenario.scenario_id, kind, scenario.density,
                           math.nan, None, math.nan, math.nan, 0,
                           type(e).__name__), None


def run_benchmark(maps: dict[str, Costmap], scenarios: Sequence[Scenario],
                  planner_kinds: Sequence[str] = ("twod", "hybrid",
                                                  "lattice"),
                  config: Optional[PlannerConfig] = None,
                  measure_warm: bool = False,
                  paths_out: Optional[dict] = None) -> list[BenchRecord]:
    """The full scenario x planner matrix as a flat record list.

    ``paths_out``, when given, receives {(scenario_id, planner): Path} for
    rendering; it is filled only for successful plans.
    """
    records = []
    scenario_by_map: dict[str, list[Scenario]] = {}
    for s in scenarios:
        scenario_by_map.setdefault(s.map_id, []).append(s)
    for map_id, group in scenario_by_map.items():
        cmap = maps[map_id]
        for scenario in group:
            for kind in planner_kinds:
                rec, path = run_scenario(cmap, scenario, kind, config,
                                         measure_warm)
                records.append(rec)
                if paths_out is not None and path is not None:
                    paths_out[(scenario.scenario_id, kind)] = path
    return records


def write_records_csv(records: Sequence[BenchRecord], path: str) -> None:
    with open(path, "w", newline="", encoding="ascii") as f:
        w = csv.writer(f)
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([r.scenario_id, r.planner, repr(r.density),
                        f"{r.t_cold_ms:.3f}",
                        "" if r.t_warm_ms is None else f"{r.t_warm_ms:.3f}",
                        "" if math.isnan(r.l_path_m) else repr(r.l_path_m),
                        "" if math.isnan(r.cost_total) else repr(r.cost_total),
                        r.expansions, r.outcome])


def summarize(records: Sequence[BenchRecord]) -> str:
    """Per-density mean time and mean path length per planner.

    Path-length means are taken over the scenarios every planner solved,
    so the columns are comparable; the shortest mean per density is marked
    with '*' and those within 1% of it with '+'.
    """
    kinds = sorted({r.planner for r in records})
    densities = sorted({r.density for r in records})
    by_key = {(r.scenario_id, r.planner): r for r in records}
    sids_by_density: dict[float, list[int]] = {}
    for r in records:
        sids_by_density.setdefault(r.density, [])
        if r.scenario_id not in sids_by_density[r.density]:
            sids_by_density[r.density].append(r.scenario_id)
    lines = [f"{'density':>8} {'planner':>8} {'n':>4} {'mean_t_ms':>10} "
             f"{'mean_l_path_m':>14}  mark"]
    for density in densities:
        common = [sid for sid in sids_by_density[density]
                  if all(by_key.get((sid, k)) is not None
                         and by_key[(sid, k)].outcome == "success"
                         for k in kinds)]
        means = {}
        for kind in kinds:
            recs = [by_key[(sid, kind)] for sid in common]
            if recs:
                means[kind] = (
                    float(np.mean([r.t_cold_ms for r in recs])),
                    float(np.mean([r.l_path_m for r in recs])))
        if not means:
            continue
        best = min(v[1] for v in means.values())
        for kind in kinds:
            t_mean, l_mean = means[kind]
            mark = "*" if l_mean == best else \
                "+" if l_mean <= 1.01 * best else ""
            lines.append(f"{density:>8.2f} {kind:>8} {len(common):>4} "
                         f"{t_mean:>10.2f} {l_mean:>14.4f}  {mark}")
    return "\n".join(lines) + "\n"
