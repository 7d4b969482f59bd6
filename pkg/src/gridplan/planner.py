"""The three node planner types bound to the generic search engine.

- TwoD: 8-connected cost-aware grid A* (compiled kernel), optimal within
  the grid quantization.
- Hybrid: continuous-coordinate search over short arc/straight motion
  primitives with the combined (obstacle + motion-model) heuristic and
  analytic expansion to the goal pose.
- Lattice: the same machinery over a pre-generated minimal control set
  whose endpoints lie exactly on cell centers and lattice headings.

Traversal cost of a motion of length d ending in a cell of cost c is
d * (1 + alpha * c / c_max); turning and direction-change penalties are
multiplicative on top (straight motions clear them), and reverse motions
are multiplied by a configurable factor. The module also provides the
gradient-descent path smoother and CSV path serialization.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _fastgrid
from .costmap import (COST_MAX, LETHAL, Costmap, Footprint, collision_check,
                      MapError, supercover_cells)
from .curves import (MotionPrimitive, dubins_path, hybrid_primitives,
                     reeds_shepp_path, sample_segments)
from .heuristics import OCTILE_ADMISSIBLE_SCALE, ObstacleHeuristicCache, \
    nonholonomic_distance
from .lattice import ControlSet, generate_minimal_control_set, \
    load_control_set
from .pose import PoseSE2, ang_diff, norm_angle
from .search import (IterationLimit, NodeInterface, NoPathExists,
                     SearchLimits, a_star)

PLANNER_KINDS = ("twod", "hybrid", "lattice")
MOTION_MODELS = ("dubins", "reeds_shepp")
GOAL_MODES = ("exact", "bidirectional", "any_heading")

# Beyond this many turning radii the motion-model term is replaced by the
# (cheaper, still admissible) Euclidean distance: at long range the
# obstacle term or the straight-line distance dominates anyway.
MODEL_TERM_RADII = 10.0

# An analytic-expansion suffix is rejected when its traversal cost exceeds
# the heuristic estimate by more than this factor, so the closed-form jump
# cannot cut blindly through high-cost regions.
ANALYTIC_COST_GUARD = 2.0


class PlannerError(ValueError):
    """Invalid planning request (bad configuration or endpoints)."""


class StartInCollision(PlannerError):
    """The start pose overlaps an obstacle."""


class GoalInCollision(PlannerError):
    """The goal pose overlaps an obstacle."""


class PlannerInvariantError(RuntimeError):
    """A produced path violated a postcondition; indicates an internal bug."""


@dataclass
class PlannerConfig:
    """Everything a `plan` call needs beyond the map and the endpoints."""

    planner_kind: str = "hybrid"
    alpha: float = 2.0              # cost weight in the traversal term
    beta: float = 0.05              # non-straight penalty
    gamma: float = 0.05             # turn-direction-change penalty
    reverse_penalty: float = 2.0    # multiplier on reverse motions
    turning_radius: float = 0.4
    heading_bins: int = 16
    motion_model: str = "dubins"
    goal_mode: str = "exact"
    allow_reverse: bool = False
    footprint: Optional[Footprint] = None
    use_obstacle_heuristic: bool = True
    weight_smooth: float = 0.3
    weight_data: float = 0.7
    smoother_step: float = 0.1
    smoother_max_iters: int = 1000
    limits: SearchLimits = field(default_factory=SearchLimits)
    control_set_path: Optional[str] = None

    def __post_init__(self):
        if self.planner_kind not in PLANNER_KINDS:
            raise PlannerError(f"unknown planner kind {self.planner_kind!r}")
        if self.motion_model not in MOTION_MODELS:
            raise PlannerError(f"unknown motion model {self.motion_model!r}")
        if self.goal_mode not in GOAL_MODES:
            raise PlannerError(f"unknown goal mode {self.goal_mode!r}")
        if self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise PlannerError("alpha, beta and gamma must be non-negative")
        if self.reverse_penalty < 1.0:
            raise PlannerError("reverse_penalty must be >= 1")
        if self.turning_radius <= 0.0:
            raise PlannerError("turning_radius must be positive")
        if self.heading_bins < 8 and self.planner_kind != "twod":
            raise PlannerError("heading_bins must be >= 8")
        if self.allow_reverse and self.motion_model == "dubins":
            raise PlannerError(
                "allow_reverse requires the reeds_shepp motion model")


@dataclass
class Path:
    """A planned path: densely sampled poses plus per-edge metadata.

    ``segment_meta`` holds one (direction, primitive id, turn sign) tuple
    per motion edge; primitive id -1 marks grid moves and -2 the analytic
    suffix. ``directions`` is per pose (+1 forward, -1 reverse). For the
    2D planner, ``grid_cells`` retains the optimal grid cell chain whose
    traversal cost is ``cost_total`` (the returned polyline is a taut,
    cost-bounded realization of that chain).
    """

    poses: list[PoseSE2]
    directions: list[int]
    segment_meta: list[tuple[int, int, int]]
    length_m: float
    cost_total: float
    planning_time_s: float
    expansions: int
    grid_cells: Optional[list[tuple[int, int]]] = None

    def xy(self) -> np.ndarray:
        return np.array([(p.x, p.y) for p in self.poses])


def traversal_cost(d: float, cell_cost: int, alpha: float,
                   c_max: int = COST_MAX) -> float:
    """Cost of moving distance d into a cell of the given (non-lethal) cost."""
    assert 0 <= cell_cost <= c_max, "traversal through non-traversable cell"
    return d * (1.0 + alpha * cell_cost / c_max)


def apply_penalties(C: float, delta_i: int, delta_prev: int,
                    reversed_: bool, config: PlannerConfig) -> float:
    """Turn/change penalties on a raw traversal cost.

    Straight motions pass through unchanged (and clear the turn history);
    a turn matching the previous turn sign pays (1 + beta); a turn in a new
    direction pays (1 + beta + gamma). Reverse motions are multiplied by
    the reverse penalty afterwards.
    """
    if delta_i == 0:
        out = C
    elif delta_i == delta_prev:
        out = (1.0 + config.beta) * C
    else:
        out = (1.0 + config.beta + config.gamma) * C
    if reversed_:
        out *= config.reverse_penalty
    return out


# ---------------------------------------------------------------------------
# Shared motion evaluation
# ---------------------------------------------------------------------------

def _pose_blocked(cmap: Costmap, x: float, y: float,
                  theta: float, footprint: Optional[Footprint]) -> bool:
    if footprint is not None:
        return collision_check(cmap, PoseSE2(x, y, theta), footprint)
    if not cmap.in_bounds_world(x, y):
        return True
    ix, iy = cmap.world_to_grid_unchecked(x, y)
    return cmap.cells[iy, ix] >= LETHAL


def _motion_cost(cmap: Costmap, poses: np.ndarray, alpha: float,
                 footprint: Optional[Footprint]) -> float:
    """Summed traversal cost along sampled poses; inf when blocked.

    The first pose is assumed already validated by the caller; each later
    sample pays distance * (1 + alpha * c / c_max) with c taken from the
    cell it lands in.
    """
    cells = cmap.cells
    res = cmap.resolution
    ox, oy = cmap.origin
    w, h = cmap.width, cmap.height
    scale = alpha / COST_MAX
    total = 0.0
    px, py = poses[0, 0], poses[0, 1]
    for j in range(1, len(poses)):
        x, y = poses[j, 0], poses[j, 1]
        ix = int(math.floor((x - ox) / res))
        iy = int(math.floor((y - oy) / res))
        if ix < 0 or ix >= w or iy < 0 or iy >= h:
            return math.inf
        c = cells[iy, ix]
        if c >= LETHAL:
            return math.inf
        if footprint is not None and _pose_blocked(cmap, x, y, poses[j, 2],
                                                   footprint):
            return math.inf
        total += math.hypot(x - px, y - py) * (1.0 + scale * c)
        px, py = x, y
    return total


def _polyline_length(poses) -> float:
    total = 0.0
    for a, b in zip(poses, poses[1:]):
        total += math.hypot(b.x - a.x, b.y - a.y)
    return total


# ---------------------------------------------------------------------------
# SE(2) node interface shared by the Hybrid and Lattice planners
# ---------------------------------------------------------------------------

class _SE2Iface(NodeInterface):
    """Search interface over (x, y, heading-bin) states.

    A state is (x, y, heading_bin, prev_turn_sign); the key drops the turn
    history, so one node per quantized pose with continuous coordinates
    from its best known parent, which is the Hybrid-A* bookkeeping rule.
    """

    def __init__(self, cmap: Costmap, goal: PoseSE2, config: PlannerConfig,
                 cache: ObstacleHeuristicCache, headings: list[float],
                 motions_by_bin: list[list], expansion_step: float):
        self.cmap = cmap
        self.goal = goal
        self.config = config
        self.cache = cache
        self.headings = headings
        self.motions_by_bin = motions_by_bin
        self.expansion_step = expansion_step
        self._flat_cells = np.ascontiguousarray(cmap.cells).reshape(-1)
        # CSR-packed sample offsets per heading bin for the compiled
        # motion-cost kernel (used when no footprint is configured), plus
        # a per-primitive arc/chord factor: sampled costs sum chord
        # lengths, which systematically undercount the true arc length,
        # so each primitive's cost is rescaled to its exact length
        self._csr = []
        self._scales = []
        for motions in motions_by_bin:
            ptr = np.zeros(len(motions) + 1, dtype=np.int64)
            for i, m in enumerate(motions):
                ptr[i + 1] = ptr[i] + len(m[2])
            xs = np.empty(ptr[-1])
            ys = np.empty(ptr[-1])
            scales = np.ones(len(motions))
            for i, m in enumerate(motions):
                xs[ptr[i]:ptr[i + 1]] = m[2][:, 0]
                ys[ptr[i]:ptr[i + 1]] = m[2][:, 1]
                d = np.diff(m[2][:, :2], axis=0)
                chord = float(np.hypot(d[:, 0], d[:, 1]).sum())
                if chord > 0.0:
                    scales[i] = m[3] / chord
            self._csr.append((xs, ys, ptr, np.empty(len(motions))))
            self._scales.append(scales)
        if config.goal_mode == "bidirectional":
            self.goal_poses = [goal, PoseSE2(goal.x, goal.y,
                                             goal.theta + math.pi)]
        else:
            self.goal_poses = [goal]

    def state_key(self, state):
        x, y, b, _ = state
        ix, iy = self.cmap.world_to_grid_unchecked(x, y)
        return (ix, iy, b)

    def neighbors(self, state):
        x, y, b, prev_delta = state
        cfg = self.config
        cmap = self.cmap
        motions = self.motions_by_bin[b]
        if cfg.footprint is None:
            xs, ys, ptr, out = self._csr[b]
            _fastgrid.motion_costs(self._flat_cells, cmap.width, cmap.height,
                                   cmap.resolution, cmap.origin[0],
                                   cmap.origin[1], cfg.alpha, xs, ys, ptr,
                                   x, y, out)
            raws = out * self._scales[b]
        else:
            raws = [_motion_cost(cmap, m[2] + (x, y, 0.0), cfg.alpha,
                                 cfg.footprint) * s
                    for m, s in zip(motions, self._scales[b])]
        for (motion_id, end_bin, poses, _length, turn, is_rev), raw in \
                zip(motions, raws):
            if math.isinf(raw):
                continue
            cost = apply_penalties(raw, turn, prev_delta, is_rev, cfg)
            end = poses[-1]
            yield (x + end[0], y + end[1], end_bin, turn), cost, motion_id

    def heuristic(self, state):
        x, y, b, _ = state
        goal = self.goal
        euclid = math.hypot(goal.x - x, goal.y - y)
        cfg = self.config
        if cfg.goal_mode == "any_heading":
            nh = euclid
        elif euclid < MODEL_TERM_RADII * cfg.turning_radius:
            pose = PoseSE2(x, y, self.headings[b])
            nh = min(nonholonomic_distance(pose, g, cfg.motion_model,
                                           cfg.turning_radius)
                     for g in self.goal_poses)
        else:
            nh = euclid
        if not cfg.use_obstacle_heuristic:
            return nh
        try:
            cell = self.cmap.world_to_grid(x, y)
        except MapError:
            return math.inf
        obstacle = self.cache.query(*cell)
        if math.isinf(obstacle):
            return math.inf
        return max(OCTILE_ADMISSIBLE_SCALE * obstacle, nh)

    def is_goal(self, state):
        x, y, b, _ = state
        lim = self.config.limits
        if math.hypot(self.goal.x - x, self.goal.y - y) > lim.goal_xy_tolerance:
            return False
        if self.config.goal_mode == "any_heading":
            return True
        theta = self.headings[b]
        return any(abs(ang_diff(theta, g.theta)) <= lim.goal_heading_tolerance
                   for g in self.goal_poses)

    def analytic_interval(self, h: float) -> int:
        if math.isinf(h):
            return 0  # unreachable region; do not attempt expansions
        return max(1, int(h / (3.5 * self.expansion_step)))

    def _try_goal_pose(self, pose: PoseSE2, gpose: PoseSE2, h: float):
        cfg = self.config
        try:
            if cfg.motion_model == "dubins":
                segments = dubins_path(pose, gpose, cfg.turning_radius)
            else:
                segments = reeds_shepp_path(pose, gpose, cfg.turning_radius)
        except RuntimeError:
            return None
        poses, dirs = sample_segments(pose, segments, cfg.turning_radius,
                                      self.cmap.resolution)
        cost = _motion_cost(self.cmap, poses, cfg.alpha, cfg.footprint)
        if math.isinf(cost):
            return None
        length = sum(abs(s) for _, s in segments)
        d = np.diff(poses[:, :2], axis=0)
        chord = float(np.hypot(d[:, 0], d[:, 1]).sum())
        if chord > 0.0:
            # rescale the chord-summed cost to the exact suffix length
            cost *= length / chord
        if h > 0.0 and cost > ANALYTIC_COST_GUARD * h:
            return None
        return poses, dirs, cost, length

    def try_analytic_expansion(self, state):
        x, y, b, _ = state
        pose = PoseSE2(x, y, self.headings[b])
        h = self.heuristic(state)
        if math.isinf(h):
            return None
        cfg = self.config
        if cfg.goal_mode != "any_heading":
            best = None
            for g in self.goal_poses:
                r = self._try_goal_pose(pose, g, h)
                if r is not None and (best is None or r[3] < best[3]):
                    best = r
            return None if best is None else best[:3]
        # any-heading: coarse sweep every 4 bins, then refine +/-1 around
        # the best candidate, keeping the shortest feasible suffix
        nbins = cfg.heading_bins
        two_pi = 2.0 * math.pi
        best, best_bin = None, None
        for cb in range(0, nbins, 4):
            g = PoseSE2(self.goal.x, self.goal.y, cb * two_pi / nbins)
            r = self._try_goal_pose(pose, g, h)
            if r is not None and (best is None or r[3] < best[3]):
                best, best_bin = r, cb
        if best is None:
            return None
        for fb in (best_bin - 1, best_bin + 1):
            g = PoseSE2(self.goal.x, self.goal.y, (fb % nbins) * two_pi / nbins)
            r = self._try_goal_pose(pose, g, h)
            if r is not None and r[3] < best[3]:
                best = r
        return best[:3]


# ---------------------------------------------------------------------------
# Planner front ends
# ---------------------------------------------------------------------------

def _reverse_primitive(p: MotionPrimitive) -> MotionPrimitive:
    """The same geometry traversed end-to-start (headings unchanged)."""
    ex, ey, _ = p.end_pose
    poses = p.poses[::-1].copy()
    poses[:, 0] -= ex
    poses[:, 1] -= ey
    return MotionPrimitive(prim_id=p.prim_id, start_heading_bin=p.end_heading_bin,
                           end_heading_bin=p.start_heading_bin, poses=poses,
                           length=p.length, turn_direction=p.turn_direction,
                           reversed=True)


_CONTROL_SET_CACHE: dict = {}


def _control_set_for(cmap: Costmap, config: PlannerConfig) -> ControlSet:
    if config.control_set_path is not None:
        key = ("file", config.control_set_path)
        if key not in _CONTROL_SET_CACHE:
            _CONTROL_SET_CACHE[key] = load_control_set(config.control_set_path)
        cs = _CONTROL_SET_CACHE[key]
        if abs(cs.resolution - cmap.resolution) > 1e-9:
            raise PlannerError(
                f"control set resolution {cs.resolution} does not match map "
                f"resolution {cmap.resolution}")
        return cs
    key = (round(cmap.resolution, 12), round(config.turning_radius, 12),
           config.heading_bins)
    if key not in _CONTROL_SET_CACHE:
        _CONTROL_SET_CACHE[key] = generate_minimal_control_set(
            cmap.resolution, config.turning_radius, config.heading_bins)
    return _CONTROL_SET_CACHE[key]


def _validate_endpoints(cmap: Costmap, start: PoseSE2, goal: PoseSE2,
                        config: PlannerConfig):
    for pose, exc in ((start, StartInCollision), (goal, GoalInCollision)):
        if not cmap.in_bounds_world(pose.x, pose.y):
            raise exc(f"pose ({pose.x:.3f}, {pose.y:.3f}) outside the map")
        if _pose_blocked(cmap, pose.x, pose.y, pose.theta, config.footprint):
            raise exc(f"pose ({pose.x:.3f}, {pose.y:.3f}) is in collision")


def _segment_cost_sampled(cmap: Costmap, x0: float, y0: float,
                          x1: float, y1: float, alpha: float) -> float:
    """Traversal cost of a straight segment sampled at half-cell spacing."""
    d = math.hypot(x1 - x0, y1 - y0)
    if d == 0.0:
        return 0.0
    n = max(1, int(math.ceil(d / (0.5 * cmap.resolution))))
    t = np.arange(1, n + 1) / n
    xs = x0 + (x1 - x0) * t
    ys = y0 + (y1 - y0) * t
    ox, oy = cmap.origin
    ixs = np.floor((xs - ox) / cmap.resolution).astype(np.int64)
    iys = np.floor((ys - oy) / cmap.resolution).astype(np.int64)
    if (ixs.min() < 0 or ixs.max() >= cmap.width
            or iys.min() < 0 or iys.max() >= cmap.height):
        return math.inf
    c = cmap.cells[iys, ixs]
    if c.max() >= LETHAL:
        return math.inf
    return (d / n) * float(np.sum(1.0 + alpha * c.astype(np.float64)
                                  / COST_MAX))


def _segment_clear(cmap: Costmap, p0: tuple[float, float],
                   p1: tuple[float, float]) -> bool:
    """True when every cell the segment passes through is traversable."""
    for ix, iy in supercover_cells(cmap, p0[0], p0[1], p1[0], p1[1]):
        if not cmap.in_bounds(ix, iy) or cmap.cells[iy, ix] >= LETHAL:
            return False
    return True


def _shortcut_chain(cmap: Costmap, pts: list[tuple[float, float]],
                    cum: list[float], alpha: float) -> list[int]:
    """Greedy taut shortcutting of a grid cell chain.

    Returns the kept waypoint indices. A shortcut i -> j is accepted only
    when the straight segment is collision-free and its sampled traversal
    cost does not exceed the chain's own cost between the same waypoints,
    so shortcuts never trade cost for length on soft-cost maps.
    """
    kept = [0]
    i = 0
    last = len(pts) - 1
    while i < last:
        j = last
        while j > i + 1:
            seg = _segment_cost_sampled(cmap, pts[i][0], pts[i][1],
                                        pts[j][0], pts[j][1], alpha)
            if seg <= cum[j] - cum[i] + 1e-9 and \
                    _segment_clear(cmap, pts[i], pts[j]):
                break
            j -= 1
        kept.append(j)
        i = j
    return kept


def _plan_twod(cmap: Costmap, start: PoseSE2, goal: PoseSE2,
               config: PlannerConfig, t0: float) -> Path:
    sx, sy = cmap.world_to_grid(start.x, start.y)
    gx, gy = cmap.world_to_grid(goal.x, goal.y)
    flat = np.ascontiguousarray(cmap.cells).reshape(-1)
    status, cost, expansions, parent = _fastgrid.astar_grid(
        flat, cmap.width, cmap.height, sy * cmap.width + sx,
        gy * cmap.width + gx, config.alpha, cmap.resolution,
        config.limits.max_iterations)
    if status == _fastgrid.STATUS_NO_PATH:
        raise NoPathExists("2D grid search exhausted without reaching goal")
    if status == _fastgrid.STATUS_ITER_LIMIT:
        raise IterationLimit("2D grid search hit the expansion limit")
    chain = []
    c = gy * cmap.width + gx
    while c >= 0:
        chain.append(c)
        c = parent[c]
    chain.reverse()
    pts = [cmap.grid_to_world(c % cmap.width, c // cmap.width) for c in chain]
    # Pull the cell-center polyline taut: the grid chain is cost-optimal on
    # the 8-connected graph, but its length carries the octile-metric
    # overhead. The returned polyline is a cost-bounded straight-line
    # realization of the same plan; cost_total stays the grid-optimal
    # traversal cost found by the search.
    cum = [0.0]
    for k in range(1, len(chain)):
        step = math.hypot(pts[k][0] - pts[k - 1][0],
                          pts[k][1] - pts[k - 1][1])
        cum.append(cum[-1] + step * (1.0 + config.alpha
                                     * cmap.cells.reshape(-1)[chain[k]]
                                     / COST_MAX))
    kept = _shortcut_chain(cmap, pts, cum, config.alpha) \
        if len(pts) > 2 else list(range(len(pts)))
    poses = []
    res = cmap.resolution
    theta = start.theta
    for a, b in zip(kept, kept[1:]):
        (x0, y0), (x1, y1) = pts[a], pts[b]
        d = math.hypot(x1 - x0, y1 - y0)
        theta = math.atan2(y1 - y0, x1 - x0)
        # odd sub-step count: endpoints are cell centers an integer number
        # of cells apart, so odd n keeps samples off cell boundaries (where
        # the containing cell would be ambiguous)
        n = max(1, int(math.ceil(d / res)))
        if n % 2 == 0:
            n += 1
        for k in range(n):
            poses.append(PoseSE2(x0 + (x1 - x0) * k / n,
                                 y0 + (y1 - y0) * k / n, theta))
    xe, ye = pts[kept[-1]]
    poses.append(PoseSE2(xe, ye, theta))
    meta = [(1, -1, 0)] * (len(poses) - 1)
    return Path(poses=poses, directions=[1] * len(poses),
                segment_meta=meta, length_m=_polyline_length(poses),
                cost_total=float(cost),
                planning_time_s=time.perf_counter() - t0,
                expansions=int(expansions),
                grid_cells=[(c % cmap.width, c // cmap.width)
                            for c in chain])


def _assemble_path(result, iface: _SE2Iface, prim_table: dict,
                   t0: float) -> Path:
    """Concatenate primitive samples (and analytic suffix) into a Path."""
    poses: list[PoseSE2] = []
    directions: list[int] = []
    meta: list[tuple[int, int, int]] = []
    cost_total = result.g_goal + result.analytic_cost
    first = result.states[0]
    poses.append(PoseSE2(first[0], first[1], iface.headings[first[2]]))
    directions.append(1)

    def bridge(x, y, theta, d):
        # A node's continuous coordinates can shift (within its grid cell)
        # when a better parent is found after a child was generated; stitch
        # such sub-cell seams with the stored anchor pose so consecutive
        # poses stay densely spaced.
        last = poses[-1]
        if math.hypot(last.x - x, last.y - y) > 1e-9:
            poses.append(PoseSE2(x, y, theta))
            directions.append(d)

    for prev, motion in zip(result.states, result.motions[1:]):
        _, end_bin, prim_poses, _, turn, is_rev = prim_table[(prev[2], motion)]
        world = prim_poses + (prev[0], prev[1], 0.0)
        d = -1 if is_rev else 1
        bridge(prev[0], prev[1], iface.headings[prev[2]], d)
        for row in world[1:]:
            poses.append(PoseSE2(row[0], row[1], row[2]))
            directions.append(d)
        meta.append((d, motion, turn))
    if result.analytic_poses is not None:
        suffix = result.analytic_poses
        sdirs = result.analytic_dirs
        bridge(suffix[0, 0], suffix[0, 1], suffix[0, 2], int(sdirs[0]))
        run_dir = None
        for row, d in zip(suffix[1:], sdirs[1:]):
            poses.append(PoseSE2(row[0], row[1], row[2]))
            directions.append(int(d))
            if run_dir != int(d):
                run_dir = int(d)
                meta.append((run_dir, -2, 0))
    return Path(poses=poses, directions=directions, segment_meta=meta,
                length_m=_polyline_length(poses), cost_total=cost_total,
                planning_time_s=time.perf_counter() - t0,
                expansions=result.expansions)


def _build_se2_iface(cmap: Costmap, start: PoseSE2, goal: PoseSE2,
                     config: PlannerConfig,
                     cache: Optional[ObstacleHeuristicCache]):
    """Search interface, start state, and primitive table for an SE(2) plan."""
    if config.planner_kind == "hybrid":
        bins = config.heading_bins
        headings = [i * 2.0 * math.pi / bins for i in range(bins)]
        base = hybrid_primitives(config.turning_radius, cmap.resolution,
                                 bins, config.allow_reverse)
        motions_by_bin = []
        for b in range(bins):
            theta = headings[b]
            c, s = math.cos(theta), math.sin(theta)
            rot = []
            for p in base:
                poses = p.poses.copy()
                xs, ys = p.poses[:, 0], p.poses[:, 1]
                poses[:, 0] = c * xs - s * ys
                poses[:, 1] = s * xs + c * ys
                poses[:, 2] = (p.poses[:, 2] + theta) % (2.0 * math.pi)
                rot.append((p.prim_id, (b + p.end_heading_bin) % bins, poses,
                            p.length, p.turn_direction, p.reversed))
            motions_by_bin.append(rot)
        expansion_step = base[0].length
        sx, sy, sbin = start.x, start.y, start.heading_bin(bins)
    else:  # lattice
        cs = _control_set_for(cmap, config)
        headings = list(cs.headings)
        prims = list(cs.primitives)
        if config.allow_reverse:
            prims += [_reverse_primitive(p) for p in cs.primitives]
        motions_by_bin = [[] for _ in range(cs.heading_bins)]
        for mid, p in enumerate(prims):
            motions_by_bin[p.start_heading_bin].append(
                (mid, p.end_heading_bin, p.poses, p.length,
                 p.turn_direction, p.reversed))
        expansion_step = max(p.length for p in cs.primitives)
        scell = cmap.world_to_grid(start.x, start.y)
        sx, sy = cmap.grid_to_world(*scell)
        sbin = start.nearest_heading(headings)

    goal_cell = cmap.world_to_grid(goal.x, goal.y)
    if cache is None or not cache.matches(cmap, goal_cell, config.alpha):
        cache = ObstacleHeuristicCache(cmap, goal_cell, config.alpha)
    iface = _SE2Iface(cmap, goal, config, cache, headings, motions_by_bin,
                      expansion_step)
    prim_table = {(b, m[0]): m for b in range(len(motions_by_bin))
                  for m in motions_by_bin[b]}
    return iface, (sx, sy, sbin, 0), prim_table


def _plan_se2(cmap: Costmap, start: PoseSE2, goal: PoseSE2,
              config: PlannerConfig, cache: Optional[ObstacleHeuristicCache],
              t0: float) -> Path:
    iface, start_state, prim_table = _build_se2_iface(cmap, start, goal,
                                                     config, cache)
    result = a_star(iface, start_state, config.limits,
                    allow_reopen=False)
    path = _assemble_path(result, iface, prim_table, t0)
    if (abs(path.poses[0].x - start.x) > 1e-9
            or abs(path.poses[0].y - start.y) > 1e-9):
        # lattice start was snapped to the nearest cell center
        path.poses.insert(0, start)
        path.directions.insert(0, path.directions[0])
        path.segment_meta.insert(0, (path.directions[0], -1, 0))
        path.length_m = _polyline_length(path.poses)
    return path


def plan(cmap: Costmap, start: PoseSE2, goal: PoseSE2,
         config: Optional[PlannerConfig] = None,
         heuristic_cache: Optional[ObstacleHeuristicCache] = None) -> Path:
    """Plan a path on a costmap with the configured planner.

    ``heuristic_cache`` lets repeated plans to the same goal reuse the
    incrementally expanded obstacle heuristic (warm replanning); it is
    ignored by the TwoD planner and rebuilt automatically if it does not
    match the (map, goal, alpha) triple.
    """
    if config is None:
        config = PlannerConfig()
    t0 = time.perf_counter()
    _validate_endpoints(cmap, start, goal, config)
    if (math.hypot(goal.x - start.x, goal.y - start.y) < 1e-12
            and abs(ang_diff(goal.theta, start.theta)) < 1e-12):
        return Path(poses=[start], directions=[1], segment_meta=[],
                    length_m=0.0, cost_total=0.0,
                    planning_time_s=time.perf_counter() - t0, expansions=0)
    if config.planner_kind == "twod":
        path = _plan_twod(cmap, start, goal, config, t0)
    else:
        path = _plan_se2(cmap, start, goal, config, heuristic_cache, t0)
    _validate_path(path, cmap, config)
    return path


def _validate_path(path: Path, cmap: Costmap, config: PlannerConfig):
    """Postconditions: dense spacing and pose-by-pose collision freedom."""
    max_gap = 1.5 * cmap.resolution
    for a, b in zip(path.poses, path.poses[1:]):
        if math.hypot(b.x - a.x, b.y - a.y) > max_gap + 1e-9:
            raise PlannerInvariantError(
                f"pose spacing {math.hypot(b.x - a.x, b.y - a.y):.4f} "
                f"exceeds {max_gap:.4f}")
    for p in path.poses:
        if _pose_blocked(cmap, p.x, p.y, p.theta, config.footprint):
            raise PlannerInvariantError(
                f"path pose ({p.x:.3f}, {p.y:.3f}) is in collision")


# ---------------------------------------------------------------------------
# Smoother
# ---------------------------------------------------------------------------

def smoothness_objective(pts: np.ndarray, orig: np.ndarray,
                         weight_smooth: float, weight_data: float) -> float:
    """sum w_s*||p_{i-1} - 2 p_i + p_{i+1}||^2 + w_d*||p_i - p_i^0||^2."""
    second = pts[:-2] - 2.0 * pts[1:-1] + pts[2:]
    data = pts - orig
    return (weight_smooth * float(np.sum(second * second))
            + weight_data * float(np.sum(data * data)))


def smooth(path: Path, cmap: Costmap, config: Optional[PlannerConfig] = None,
           objective_trace: Optional[list] = None) -> Path:
    """Gradient-descent smoothing of a planned path.

    Interior points step along the combined smoothness + data-fidelity
    gradient; endpoints and direction-change (cusp) points stay fixed, any
    update that lands a point in collision is reverted point-wise, and an
    iteration that would increase the objective is rolled back, so the
    objective is non-increasing. Stops at the iteration limit or when the
    largest point displacement falls below 1e-4 m.
    """
    if config is None:
        config = PlannerConfig()
    if len(path.poses) < 3:
        return path
    pts = path.xy()
    orig = pts.copy()
    w_s, w_d = config.weight_smooth, config.weight_data
    step = config.smoother_step
    fixed = np.zeros(len(pts), dtype=bool)
    fixed[0] = fixed[-1] = True
    for i in range(1, len(pts)):
        if path.directions[i] != path.directions[i - 1]:
            fixed[i - 1] = fixed[i] = True
    obj = smoothness_objective(pts, orig, w_s, w_d)
    if objective_trace is not None:
        objective_trace.append(obj)
    for _ in range(config.smoother_max_iters):
        grad = np.zeros_like(pts)
        grad[1:-1] = (w_d * (orig[1:-1] - pts[1:-1])
                      + w_s * (pts[:-2] + pts[2:] - 2.0 * pts[1:-1]))
        grad[fixed] = 0.0
        new_pts = pts + step * grad
        for i in np.nonzero(~fixed)[0]:
            if _pose_blocked(cmap, new_pts[i, 0], new_pts[i, 1],
                             0.0, config.footprint):
                new_pts[i] = pts[i]
        new_obj = smoothness_objective(new_pts, orig, w_s, w_d)
        if new_obj > obj + 1e-12:
            break
        moved = float(np.max(np.abs(new_pts - pts)))
        pts = new_pts
        obj = new_obj
        if objective_trace is not None:
            objective_trace.append(obj)
        if moved < 1e-4:
            break
    poses = []
    for i in range(len(pts)):
        if i == 0 or i == len(pts) - 1:
            theta = path.poses[i].theta
        else:
            dx = pts[i + 1, 0] - pts[i - 1, 0]
            dy = pts[i + 1, 1] - pts[i - 1, 1]
            if math.hypot(dx, dy) < 1e-12:
                theta = path.poses[i].theta
            else:
                theta = math.atan2(dy, dx)
                if path.directions[i] < 0:
                    theta += math.pi
        poses.append(PoseSE2(pts[i, 0], pts[i, 1], theta))
    smoothed = replace(path, poses=poses, length_m=_polyline_length(poses))
    smoothed.cost_total = _motion_cost(
        cmap, np.array([(p.x, p.y, p.theta) for p in poses]),
        config.alpha, None)
    return smoothed


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def save_path_csv(path: Path, filename: str):
    """Write the path as CSV rows of x, y, theta, direction."""
    with open(filename, "w", newline="", encoding="ascii") as f:
        writer = csv.writer(f)
        writer.writerow(["x", "y", "theta", "direction"])
        for pose, d in zip(path.poses, path.directions):
            writer.writerow([repr(float(pose.x)), repr(float(pose.y)),
                             repr(float(pose.theta)), int(d)])
