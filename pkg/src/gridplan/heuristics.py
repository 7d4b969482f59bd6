"""Admissible heuristics for the SE(2) planners.

Two lower bounds, combined by taking their maximum:

- An obstacle-aware term: cost-aware 2D Dijkstra rooted at the goal cell,
  computed lazily and cached. The frontier is retained between queries, so
  later queries resume the expansion instead of restarting it.
- A motion-model term: exact Dubins or Reeds-Shepp shortest-path length to
  the goal pose, ignoring obstacles. A precomputed lookup table over a
  window of goal-relative offsets is also provided for callers that prefer
  table queries; the combination below uses the closed form, which is free
  of table quantization error.

The obstacle term is measured over 8-connected grid moves, whose octile
metric can exceed the true Euclidean length by up to a factor of
1/cos(pi/8); the combination rescales it by cos(pi/8) so it stays a lower
bound for continuous paths.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import _fastgrid
from .costmap import COST_MAX, LETHAL, Costmap
from .curves import dubins_distance, reeds_shepp_distance
from .pose import PoseSE2, norm_angle

# Worst-case ratio of octile grid distance to straight-line distance is
# 1/cos(pi/8); scaling by cos(pi/8) keeps the grid term admissible against
# continuous paths.
OCTILE_ADMISSIBLE_SCALE = math.cos(math.pi / 8.0)

_generation_counter = 0


def _next_generation() -> int:
    global _generation_counter
    _generation_counter += 1
    return _generation_counter


class ObstacleHeuristicCache:
    """Goal-rooted cost-aware Dijkstra over the grid, expanded on demand.

    Finalized values are exact optimal 2D costs to the goal under the
    cost-aware edge weight d * (1 + alpha * c / c_max) with c taken from
    the destination cell of each forward move. Queries for cells not yet
    finalized resume the retained frontier. The cache is bound to one
    (map, goal, alpha) triple; ``obstacle_heuristic_query`` rebuilds it when
    any of those change.

    With ``downsample=True`` the search runs on a half-resolution grid
    (each coarse cell takes the max cost of its 2x2 block), trading
    accuracy for memory on very large maps.
    """

    def __init__(self, cmap: Costmap, goal_cell: tuple[int, int],
                 alpha: float, downsample: bool = False):
        gx, gy = goal_cell
        if not cmap.in_bounds(gx, gy):
            raise ValueError(f"goal cell {goal_cell} out of bounds")
        if alpha < 0:
            raise ValueError("alpha must be non-negative")
        self.source_map = cmap
        self.goal_cell = (int(gx), int(gy))
        self.alpha = float(alpha)
        self.downsample = bool(downsample)
        self.generation = _next_generation()
        if downsample:
            h2 = (cmap.height + 1) // 2
            w2 = (cmap.width + 1) // 2
            padded = np.zeros((h2 * 2, w2 * 2), dtype=np.uint8)
            padded[:cmap.height, :cmap.width] = cmap.cells
            blocks = padded.reshape(h2, 2, w2, 2)
            self._cost = np.ascontiguousarray(
                blocks.max(axis=(1, 3))).reshape(-1)
            self._width, self._height = w2, h2
            self._resolution = cmap.resolution * 2.0
        else:
            self._cost = np.ascontiguousarray(cmap.cells).reshape(-1)
            self._width, self._height = cmap.width, cmap.height
            self._resolution = cmap.resolution
        n = self._width * self._height
        self.cost_to_goal = np.full(n, np.inf)
        self._final = np.zeros(n, dtype=np.uint8)
        cap = 2 * n + 16
        self._heap_keys = np.empty(cap)
        self._heap_cells = np.empty(cap, dtype=np.int64)
        goal_idx = self._cell_index(gx, gy)
        if self._cost[goal_idx] >= LETHAL:
            raise ValueError("goal cell is not traversable")
        self.cost_to_goal[goal_idx] = 0.0
        self._heap_keys[0] = 0.0
        self._heap_cells[0] = goal_idx
        self._heap_size = 1

    def _cell_index(self, ix: int, iy: int) -> int:
        if self.downsample:
            ix, iy = ix // 2, iy // 2
        return iy * self._width + ix

    def matches(self, cmap: Costmap, goal_cell: tuple[int, int],
                alpha: float) -> bool:
        return (tuple(goal_cell) == self.goal_cell
                and alpha == self.alpha
                and (cmap is self.source_map or cmap == self.source_map))

    def query(self, ix: int, iy: int) -> float:
        """Optimal 2D cost-to-goal in meters; inf if unreachable."""
        if not (0 <= ix < self.source_map.width
                and 0 <= iy < self.source_map.height):
            raise ValueError(f"cell ({ix}, {iy}) out of bounds")
        idx = self._cell_index(ix, iy)
        if not self._final[idx] and self._heap_size > 0:
            self._heap_size = _fastgrid.dijkstra_resume(
                self._cost, self._width, self._height,
                self.cost_to_goal, self._final,
                self._heap_keys, self._heap_cells, self._heap_size,
                idx, self.alpha, self._resolution)
        if self._final[idx]:
            return float(self.cost_to_goal[idx])
        return math.inf

    def expand_all(self):
        """Exhaust the frontier (finalize every reachable cell)."""
        self._heap_size = _fastgrid.dijkstra_resume(
            self._cost, self._width, self._height,
            self.cost_to_goal, self._final,
            self._heap_keys, self._heap_cells, self._heap_size,
            -1, self.alpha, self._resolution)


def obstacle_heuristic_query(cache: ObstacleHeuristicCache,
                             cmap: Costmap, cell: tuple[int, int],
                             alpha: float) -> float:
    """Cost-aware 2D distance from cell to the cache's goal.

    If the supplied map or alpha no longer match what the cache was built
    against, the cache is rebuilt in place (its generation counter
    advances) before answering.
    """
    if cache is None:
        raise ValueError("cache must be created with a goal first")
    if not cache.matches(cmap, cache.goal_cell, alpha):
        cache.__init__(cmap, cache.goal_cell, alpha, cache.downsample)
    return cache.query(*cell)


_LUT_MAGIC = b"GPLUT"
_LUT_VERSION = 1
_MODEL_CODES = {"dubins": 1, "reeds_shepp": 2}


def _model_distance(model: str, q, turning_radius: float) -> float:
    if model == "dubins":
        return dubins_distance(PoseSE2(0.0, 0.0, 0.0), q, turning_radius)
    return reeds_shepp_distance(PoseSE2(0.0, 0.0, 0.0), q, turning_radius)


@dataclass
class NonholonomicLUT:
    """Obstacle-free shortest-path lengths over a window of pose offsets.

    ``table[b, iy, ix]`` is the model's shortest-path length from the
    origin pose (heading 0) to (dx*res, dy*res, b*2pi/bins) where
    dx = ix - cells_radius, dy = iy - cells_radius.
    """
    motion_model: str
    turning_radius: float
    window_radius: float
    heading_bins: int
    resolution: float
    table: np.ndarray = field(repr=False)

    @property
    def cells_radius(self) -> int:
        return (self.table.shape[2] - 1) // 2

    def query(self, dx_cells: int, dy_cells: int, dheading_bin: int):
        """Table value for a goal-relative offset; None outside the window."""
        r = self.cells_radius
        if abs(dx_cells) > r or abs(dy_cells) > r:
            return None
        b = dheading_bin % self.heading_bins
        return float(self.table[b, dy_cells + r, dx_cells + r])

    def key(self) -> tuple:
        return (self.motion_model, self.turning_radius, self.window_radius,
                self.heading_bins, self.resolution)


def nonholonomic_heuristic_build(model: str, turning_radius: float,
                                 window_radius: float, heading_bins: int,
                                 resolution: float,
                                 memory_budget_mb: float = 512.0
                                 ) -> NonholonomicLUT:
    """Tabulate exact model distances over the offset window.

    The left/right symmetry of both motion models is exploited: the entry
    for (dx, -dy, -dtheta) is copied from (dx, dy, dtheta), halving the
    computation.
    """
    if model not in _MODEL_CODES:
        raise ValueError(f"unknown motion model {model!r}")
    if turning_radius <= 0:
        raise ValueError("turning_radius must be positive")
    if heading_bins < 8:
        raise ValueError("heading_bins must be at least 8")
    if window_radius <= 0 or resolution <= 0:
        raise ValueError("window_radius and resolution must be positive")
    r = int(round(window_radius / resolution))
    n = 2 * r + 1
    size_bytes = heading_bins * n * n * 8
    if size_bytes > memory_budget_mb * 1e6:
        raise MemoryError(
            f"lookup table would need {size_bytes / 1e6:.1f} MB "
            f"({heading_bins} bins x {n}x{n} cells) but the budget is "
            f"{memory_budget_mb:.0f} MB; shrink window_radius or coarsen "
            f"resolution")
    table = np.empty((heading_bins, n, n))
    dtheta = 2.0 * math.pi / heading_bins
    for b in range(heading_bins):
        bm = (-b) % heading_bins
        for iy in range(r, n):
            dy = (iy - r) * resolution
            for ix in range(n):
                dx = (ix - r) * resolution
                d = _model_distance(model, PoseSE2(dx, dy, norm_angle(b * dtheta)),
                                    turning_radius)
                table[b, iy, ix] = d
                table[bm, 2 * r - iy, ix] = d  # mirror across the x axis
    return NonholonomicLUT(model, float(turning_radius), float(window_radius),
                           int(heading_bins), float(resolution), table)


def save_lut(lut: NonholonomicLUT, path: str):
    """Persist a lookup table as a small versioned binary file."""
    header = struct.pack("<5sBBxddId", _LUT_MAGIC, _LUT_VERSION,
                         _MODEL_CODES[lut.motion_model], lut.turning_radius,
                         lut.window_radius, lut.heading_bins, lut.resolution)
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.array(lut.table.shape, dtype="<i4").tobytes())
        f.write(lut.table.astype("<f8").tobytes())


def load_lut(path: str, model: str, turning_radius: float,
             window_radius: float, heading_bins: int,
             resolution: float) -> NonholonomicLUT:
    """Load a persisted table; the stored key must match exactly."""
    with open(path, "rb") as f:
        raw = f.read()
    hsize = struct.calcsize("<5sBBxddId")
    if len(raw) < hsize + 12 or raw[:5] != _LUT_MAGIC:
        raise ValueError(f"{path}: not a lookup-table file")
    magic, version, mcode, rr, wr, hb, res = struct.unpack("<5sBBxddId",
                                                           raw[:hsize])
    if version != _LUT_VERSION:
        raise ValueError(f"{path}: unsupported table version {version}")
    names = {v: k for k, v in _MODEL_CODES.items()}
    stored = (names.get(mcode), rr, wr, hb, res)
    wanted = (model, float(turning_radius), float(window_radius),
              int(heading_bins), float(resolution))
    if stored != wanted:
        raise ValueError(f"{path}: stored key {stored} does not match "
                         f"requested {wanted}")
    shape = np.frombuffer(raw[hsize:hsize + 12], dtype="<i4")
    table = np.frombuffer(raw[hsize + 12:], dtype="<f8")
    if table.size != int(np.prod(shape)):
        raise ValueError(f"{path}: truncated table payload")
    table = table.reshape(tuple(shape)).copy()
    return NonholonomicLUT(model, float(rr), float(wr), int(hb), float(res),
                           table)


def nonholonomic_distance(state: PoseSE2, goal: PoseSE2, model: str,
                          turning_radius: float) -> float:
    """Exact obstacle-free model distance between two poses."""
    if model == "dubins":
        return dubins_distance(state, goal, turning_radius)
    return reeds_shepp_distance(state, goal, turning_radius)


def combined_heuristic(state: PoseSE2, goal: PoseSE2,
                       cache: ObstacleHeuristicCache,
                       lut: NonholonomicLUT,
                       cmap: Costmap, alpha: float) -> float:
    """max(scaled obstacle term, motion-model term) — both lower bounds.

    The motion-model term uses the exact closed form with the table's model
    and radius (the table itself quantizes offsets to cells, which could
    overestimate near the boundary of a cell). Unreachable cells propagate
    the inf sentinel so callers can prune.
    """
    try:
        cell = cmap.world_to_grid(state.x, state.y)
    except Exception:
        return math.inf
    obstacle = obstacle_heuristic_query(cache, cmap, cell, alpha)
    if math.isinf(obstacle):
        return math.inf
    nonholo = nonholonomic_distance(state, goal, lut.motion_model,
                                    lut.turning_radius)
    return max(OCTILE_ADMISSIBLE_SCALE * obstacle, nonholo)
