import heapq
import math

import numpy as np
import pytest

from gridplan.costmap import (COST_MAX, LETHAL, Costmap, generate_random_map)
from gridplan.curves import discrete_curvature_ok
from gridplan.heuristics import ObstacleHeuristicCache
from gridplan.planner import (GoalInCollision, Path, PlannerConfig,
                              PlannerError, StartInCollision, apply_penalties,
                              plan, save_path_csv, smooth,
                              smoothness_objective, traversal_cost)
from gridplan.pose import PoseSE2
from gridplan.search import NoPathExists

RES = 0.1


def free_map(size_m=20.0, res=RES):
    return generate_random_map(size_m, size_m, res, 0.0)


def path_array(p: Path) -> np.ndarray:
    return np.array([(q.x, q.y, q.theta) for q in p.poses])


def free_pose(m: Costmap, x: float, y: float, theta: float = 0.0) -> PoseSE2:
    """The pose at the center of the free cell (with a free 3x3 patch of
    neighbors) closest to a requested world point."""
    cx, cy = m.world_to_grid(x, y)
    best, best_d = None, math.inf
    for iy in range(1, m.height - 1):
        for ix in range(1, m.width - 1):
            if m.cells[iy - 1:iy + 2, ix - 1:ix + 2].max() == 0:
                d = (ix - cx) ** 2 + (iy - cy) ** 2
                if d < best_d:
                    best, best_d = (ix, iy), d
    assert best is not None, "no free cell found"
    return PoseSE2(*m.grid_to_world(*best), theta)


# ---------------------------------------------------------------------------
# cost model
# ---------------------------------------------------------------------------

def test_traversal_cost_free_cell():
    assert traversal_cost(0.7, 0, 2.0) == 0.7


def test_traversal_cost_max_cost_cell():
    assert traversal_cost(0.5, COST_MAX, 2.0) == pytest.approx(1.5)


def test_traversal_cost_half_cost():
    assert traversal_cost(1.0, 126, 2.0) == pytest.approx(1.0 + 2.0 * 126 / 253)


def test_penalties():
    cfg = PlannerConfig(beta=0.05, gamma=0.05, reverse_penalty=2.0)
    assert apply_penalties(1.0, 0, 1, False, cfg) == 1.0
    assert apply_penalties(1.0, 1, 1, False, cfg) == pytest.approx(1.05)
    assert apply_penalties(1.0, -1, 1, False, cfg) == pytest.approx(1.10)
    assert apply_penalties(1.0, 1, 0, False, cfg) == pytest.approx(1.10)
    assert apply_penalties(1.0, 0, 0, True, cfg) == pytest.approx(2.0)
    assert apply_penalties(1.0, 1, 1, True, cfg) == pytest.approx(2.10)


def test_config_validation():
    with pytest.raises(PlannerError):
        PlannerConfig(planner_kind="warp")
    with pytest.raises(PlannerError):
        PlannerConfig(alpha=-1.0)
    with pytest.raises(PlannerError):
        PlannerConfig(reverse_penalty=0.5)
    with pytest.raises(PlannerError):
        PlannerConfig(turning_radius=0.0)
    with pytest.raises(PlannerError):
        PlannerConfig(goal_mode="somewhere")
    with pytest.raises(PlannerError):
        PlannerConfig(allow_reverse=True, motion_model="dubins")


# ---------------------------------------------------------------------------
# basic planning behavior
# ---------------------------------------------------------------------------

def test_endpoint_validation():
    m = free_map(5.0)
    with pytest.raises(StartInCollision):
        plan(m, PoseSE2(0.05, 0.05, 0), PoseSE2(2, 2, 0))
    with pytest.raises(GoalInCollision):
        plan(m, PoseSE2(2, 2, 0), PoseSE2(0.05, 0.05, 0))
    with pytest.raises(StartInCollision):
        plan(m, PoseSE2(-3, 2, 0), PoseSE2(2, 2, 0))


def test_identical_start_goal():
    m = free_map(5.0)
    p = plan(m, PoseSE2(2, 2, 0.3), PoseSE2(2, 2, 0.3))
    assert len(p.poses) == 1
    assert p.length_m == 0.0
    assert p.cost_total == 0.0


def test_hybrid_straight_line():
    m = free_map()
    p = plan(m, PoseSE2(5, 10, 0), PoseSE2(15, 10, 0),
             PlannerConfig(planner_kind="hybrid"))
    assert abs(p.length_m - 10.0) < 0.1
    assert all(d == 1 for d in p.directions)


def test_no_path_to_sealed_goal():
    m = free_map(8.0)
    cells = np.array(m.cells)
    cells[30:51, 30:51] = LETHAL
    cells[35:46, 35:46] = 0  # sealed room
    m2 = Costmap(cells, m.resolution)
    cfg = PlannerConfig(planner_kind="twod")
    with pytest.raises(NoPathExists):
        plan(m2, PoseSE2(1, 1, 0), PoseSE2(4.05, 4.05, 0), cfg)
    cfg = PlannerConfig(planner_kind="hybrid")
    with pytest.raises(NoPathExists):
        plan(m2, PoseSE2(1, 1, 0), PoseSE2(4.05, 4.05, 0), cfg)


# ---------------------------------------------------------------------------
# TwoD optimality against an independent traversal-cost Dijkstra oracle
# ---------------------------------------------------------------------------

def dijkstra_oracle(cmap: Costmap, start, goal, alpha):
    """Plain-Python Dijkstra over 8-connected moves with the cost-aware
    edge weight, independent of the compiled kernel. Returns (cost, path
    cells); (inf, None) when unreachable."""
    res = cmap.resolution
    diag = res * math.sqrt(2.0)
    dist = {start: 0.0}
    parent = {start: None}
    done = set()
    heap = [(0.0, start)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == goal:
            cells = []
            while u is not None:
                cells.append(u)
                u = parent[u]
            return d, cells[::-1]
        ux, uy = u
        for dx, dy, step in ((1, 0, res), (-1, 0, res), (0, 1, res),
                             (0, -1, res), (1, 1, diag), (1, -1, diag),
                             (-1, 1, diag), (-1, -1, diag)):
            vx, vy = ux + dx, uy + dy
            if not cmap.in_bounds(vx, vy):
                continue
            c = cmap.cost_at(vx, vy)
            if c >= LETHAL:
                continue
            nd = d + step * (1.0 + alpha * c / COST_MAX)
            v = (vx, vy)
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    return math.inf, None


def exact_cell_path_cost(cmap: Costmap, cells, alpha):
    """Path cost as the exact real number A + B*sqrt(2) (A, B Fractions).

    Two float-equal-looking path costs can differ at 1 ulp purely from
    addition order; this removes the floating point from the comparison.
    """
    from fractions import Fraction
    res = Fraction(cmap.resolution)  # exact binary value of the float
    a = Fraction(alpha)
    straight = Fraction(0)
    diagonal = Fraction(0)
    for (x0, y0), (x1, y1) in zip(cells, cells[1:]):
        w = res * (1 + a * cmap.cost_at(x1, y1) / COST_MAX)
        if x0 != x1 and y0 != y1:
            diagonal += w
        else:
            straight += w
    return straight, diagonal


def test_twod_matches_dijkstra_oracle():
    rng = np.random.default_rng(11)
    checked = 0
    for seed in range(12):
        m = generate_random_map(6.4, 6.4, 0.1, 0.15, seed=seed)
        scell = (int(rng.integers(1, 63)), int(rng.integers(1, 63)))
        gcell = (int(rng.integers(1, 63)), int(rng.integers(1, 63)))
        if m.cost_at(*scell) >= LETHAL or m.cost_at(*gcell) >= LETHAL:
            continue
        expect, oracle_cells = dijkstra_oracle(m, scell, gcell, 2.0)
        cfg = PlannerConfig(planner_kind="twod")
        start = PoseSE2(*m.grid_to_world(*scell))
        goal = PoseSE2(*m.grid_to_world(*gcell))
        if math.isinf(expect):
            with pytest.raises(NoPathExists):
                plan(m, start, goal, cfg)
        else:
            p = plan(m, start, goal, cfg)
            if p.cost_total != expect:
                # 1-ulp float tie between equal-cost paths: compare the
                # two paths' costs as exact real numbers instead
                assert exact_cell_path_cost(m, p.grid_cells, 2.0) == \
                    exact_cell_path_cost(m, oracle_cells, 2.0)
            checked += 1
    assert checked >= 6


# ---------------------------------------------------------------------------
# feasibility and cost-aware behavior
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("kind", ["hybrid", "lattice"])
def test_curvature_feasible(kind):
    m = generate_random_map(15, 15, RES, 0.15, seed=4)
    cfg = PlannerConfig(planner_kind=kind, turning_radius=0.4)
    p = plan(m, free_pose(m, 1.0, 1.0, 0.8), free_pose(m, 13.5, 13.0, 0.8),
             cfg)
    assert discrete_curvature_ok(path_array(p), 1.0 / 0.4, tol=1e-3)


def band_map():
    """Wide high-cost (non-lethal) band with a free detour at the top; the
    detour is geometrically longer but cheaper than crossing under the
    cost-aware traversal weight."""
    m = free_map(12.0)
    cells = np.array(m.cells)
    cells[1:95, 40:80] = 220
    return Costmap(cells, m.resolution)


def test_cost_aware_band_avoidance():
    m = band_map()
    start, goal = PoseSE2(2, 8, 0), PoseSE2(10, 8, 0)
    aware = plan(m, start, goal, PlannerConfig(planner_kind="twod", alpha=2.0))
    blind = plan(m, start, goal, PlannerConfig(planner_kind="twod", alpha=0.0))
    max_aware = max(m.cost_at(*m.world_to_grid(p.x, p.y)) for p in aware.poses)
    max_blind = max(m.cost_at(*m.world_to_grid(p.x, p.y)) for p in blind.poses)
    assert max_aware < 220
    assert max_blind == 220
    assert aware.length_m > blind.length_m


def test_dead_end_heuristic_prunes_expansions():
    """A cost-aware obstacle heuristic avoids flooding a dead-end pocket."""
    m = free_map(12.0)
    cells = np.array(m.cells)
    cells[30:90, 30:33] = LETHAL   # left wall of the U
    cells[30:90, 80:83] = LETHAL   # right wall
    cells[30:33, 30:83] = LETHAL   # bottom
    m2 = Costmap(cells, m.resolution)
    start = PoseSE2(5.6, 7.0, -math.pi / 2)  # inside the U mouth, facing in
    goal = PoseSE2(5.6, 1.5, -math.pi / 2)   # beyond the closed bottom
    informed = plan(m2, start, goal, PlannerConfig(planner_kind="hybrid"))
    blind = plan(m2, start, goal,
                 PlannerConfig(planner_kind="hybrid",
                               use_obstacle_heuristic=False))
    assert informed.expansions < blind.expansions


# ---------------------------------------------------------------------------
# goal modes and reverse
# ---------------------------------------------------------------------------

def test_goal_mode_ordering():
    m = free_map()
    start = PoseSE2(3, 10, 0)
    goal = PoseSE2(17, 10, math.pi)  # facing back toward the start
    lengths = {}
    for mode in ("exact", "bidirectional", "any_heading"):
        cfg = PlannerConfig(planner_kind="hybrid", goal_mode=mode)
        lengths[mode] = plan(m, start, goal, cfg).length_m
    assert lengths["any_heading"] <= lengths["bidirectional"] + 1e-6
    assert lengths["bidirectional"] <= lengths["exact"] + 1e-6
    # the exact mode must actually turn around: noticeably longer than 14 m
    assert lengths["exact"] > 14.5
    assert lengths["bidirectional"] == pytest.approx(14.0, abs=0.1)


def test_reverse_in_corridor():
    """A corridor too narrow to turn around forces reverse motion."""
    m = free_map(10.0)
    cells = np.array(m.cells)
    cells[:, :] = LETHAL
    cells[47:54, 10:90] = 0  # 0.7 m corridor
    m2 = Costmap(cells, m.resolution)
    cfg = PlannerConfig(planner_kind="hybrid", motion_model="reeds_shepp",
                        allow_reverse=True)
    start = PoseSE2(6.0, 5.05, 0.0)
    goal = PoseSE2(3.0, 5.05, 0.0)  # directly behind the start
    p = plan(m2, start, goal, cfg)
    assert any(d == -1 for d in p.directions)


# ---------------------------------------------------------------------------
# warm replanning cache
# ---------------------------------------------------------------------------

def test_warm_cache_reuse_gives_same_path():
    m = generate_random_map(15, 15, RES, 0.10, seed=2)
    goal = PoseSE2(13.0, 13.0, 0.8)
    cfg = PlannerConfig(planner_kind="hybrid")
    cold = plan(m, PoseSE2(2.0, 2.0, 0.8), goal, cfg)
    cache = ObstacleHeuristicCache(m, m.world_to_grid(goal.x, goal.y), 2.0)
    warm_prime = plan(m, PoseSE2(2.0, 2.0, 0.8), goal, cfg,
                      heuristic_cache=cache)
    warm = plan(m, PoseSE2(2.0, 2.0, 0.8), goal, cfg, heuristic_cache=cache)
    assert warm.length_m == cold.length_m == warm_prime.length_m
    assert [(*a,) for a in warm.segment_meta] == \
        [(*a,) for a in cold.segment_meta]


# ---------------------------------------------------------------------------
# smoother
# ---------------------------------------------------------------------------

def straight_path(n=20):
    poses = [PoseSE2(1.0 + 0.1 * i, 2.0, 0.0) for i in range(n)]
    return Path(poses=poses, directions=[1] * n,
                segment_meta=[(1, -1, 0)] * (n - 1),
                length_m=0.1 * (n - 1), cost_total=0.1 * (n - 1),
                planning_time_s=0.0, expansions=0)


def test_smooth_straight_path_unchanged():
    m = free_map(5.0)
    p = straight_path()
    s = smooth(p, m)
    assert np.allclose(s.xy(), p.xy(), atol=1e-12)


def test_smooth_zigzag_decreases_objective():
    m = free_map(5.0)
    poses = [PoseSE2(1.0, 2.0, 0), PoseSE2(1.1, 2.08, 0), PoseSE2(1.2, 2.0, 0)]
    p = Path(poses=poses, directions=[1, 1, 1],
             segment_meta=[(1, -1, 0)] * 2, length_m=0.0, cost_total=0.0,
             planning_time_s=0.0, expansions=0)
    trace = []
    s = smooth(p, m, objective_trace=trace)
    assert len(trace) >= 2
    assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))
    # middle point moved toward the chord y=2
    assert 2.0 < s.poses[1].y < 2.08
    # endpoints untouched
    assert (s.poses[0].x, s.poses[0].y) == (1.0, 2.0)
    assert (s.poses[2].x, s.poses[2].y) == (1.2, 2.0)


def test_smooth_planned_path_collision_free_and_smoother():
    m = generate_random_map(15, 15, RES, 0.15, seed=9)
    p = plan(m, free_pose(m, 1.0, 1.0, 0.8), free_pose(m, 13.5, 13.0, 0.8),
             PlannerConfig(planner_kind="hybrid"))
    trace = []
    s = smooth(p, m, objective_trace=trace)
    assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))
    for q in s.poses:
        ix, iy = m.world_to_grid(q.x, q.y)
        assert m.cost_at(ix, iy) < LETHAL
    assert s.poses[0] == p.poses[0]
    assert (s.poses[-1].x, s.poses[-1].y) == (p.poses[-1].x, p.poses[-1].y)
    pts_before, pts_after = p.xy(), s.xy()

    def bend(pts):
        d2 = pts[:-2] - 2 * pts[1:-1] + pts[2:]
        return float(np.sum(d2 * d2))

    assert bend(pts_after) <= bend(pts_before)


def test_smoothness_objective_definition():
    pts = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]])
    orig = pts.copy()
    # only the second-difference term: (0,0) - 2(1,1) + (2,0) = (0,-2)
    assert smoothness_objective(pts, orig, 1.0, 1.0) == pytest.approx(4.0)


# ---------------------------------------------------------------------------
# path serialization and invariants
# ---------------------------------------------------------------------------

def test_save_path_csv(tmp_path):
    m = free_map(5.0)
    p = plan(m, PoseSE2(1, 1, 0), PoseSE2(4, 1, 0),
             PlannerConfig(planner_kind="hybrid"))
    out = tmp_path / "path.csv"
    save_path_csv(p, str(out))
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "x,y,theta,direction"
    assert len(lines) == len(p.poses) + 1
    x, y, theta, d = lines[1].split(",")
    assert float(x) == p.poses[0].x and float(y) == p.poses[0].y
    assert int(d) == p.directions[0]


@pytest.mark.parametrize("kind", ["twod", "hybrid", "lattice"])
def test_pose_spacing_invariant(kind):
    m = generate_random_map(15, 15, RES, 0.10, seed=5)
    p = plan(m, PoseSE2(1.5, 1.5, 0.5), PoseSE2(13.0, 12.5, 0.5),
             PlannerConfig(planner_kind=kind))
    pts = p.xy()
    gaps = np.hypot(*(pts[1:] - pts[:-1]).T)
    assert float(gaps.max()) <= 1.5 * m.resolution + 1e-9
    assert p.length_m == pytest.approx(float(gaps.sum()), abs=1e-6)
