import heapq
import math

import numpy as np
import pytest

from gridplan.costmap import COST_MAX, LETHAL, Costmap, generate_random_map
from gridplan.curves import dubins_distance, reeds_shepp_distance
from gridplan.heuristics import (OCTILE_ADMISSIBLE_SCALE,
                                 NonholonomicLUT, ObstacleHeuristicCache,
                                 combined_heuristic, load_lut,
                                 nonholonomic_heuristic_build,
                                 obstacle_heuristic_query, save_lut)
from gridplan.pose import PoseSE2

SQRT2 = math.sqrt(2.0)


def full_dijkstra_oracle(cells, goal, alpha, res):
    """Cold full-grid goal-rooted Dijkstra with cost-aware weights.

    Forward move v -> u pays d * (1 + alpha * cells[u] / 253), i.e. the
    destination cell's cost. Plain heapq/dict implementation.
    """
    h, w = cells.shape
    gx, gy = goal
    dist = {(gx, gy): 0.0}
    heap = [(0.0, (gx, gy))]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        mult = 1.0 + alpha * cells[u[1], u[0]] / 253.0
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1),
                       (1, 1), (1, -1), (-1, 1), (-1, -1)):
            v = (u[0] + dx, u[1] + dy)
            if not (0 <= v[0] < w and 0 <= v[1] < h):
                continue
            if cells[v[1], v[0]] >= LETHAL:
                continue
            step = res if dx == 0 or dy == 0 else res * SQRT2
            nd = d + step * mult
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


# ---------------------------------------------------------------------------
# obstacle heuristic
# ---------------------------------------------------------------------------

def test_goal_cell_is_zero():
    m = Costmap(np.zeros((5, 5), dtype=np.uint8), 0.05)
    cache = ObstacleHeuristicCache(m, (2, 2), alpha=2.0)
    assert cache.query(2, 2) == 0.0


def test_zero_cost_corridor():
    # 10-cell corridor at 0.05 m: 9 steps of pure distance
    m = Costmap(np.zeros((1, 10), dtype=np.uint8), 0.05)
    cache = ObstacleHeuristicCache(m, (0, 0), alpha=2.0)
    assert cache.query(9, 0) == pytest.approx(0.45)


def test_cost_band_matches_full_dijkstra_exactly():
    cells = np.zeros((20, 20), dtype=np.uint8)
    cells[:, 9:12] = COST_MAX  # vertical high-cost band
    m = Costmap(cells, 0.1)
    cache = ObstacleHeuristicCache(m, (18, 10), alpha=2.0)
    oracle = full_dijkstra_oracle(cells, (18, 10), 2.0, 0.1)
    for iy in range(20):
        for ix in range(20):
            assert cache.query(ix, iy) == oracle[(ix, iy)], (ix, iy)


def test_incremental_queries_match_cold_dijkstra():
    rng = np.random.default_rng(17)
    m = generate_random_map(6.0, 6.0, 0.1, 0.15, (0.3, 0.8), seed=17)
    soft = rng.integers(0, 120, size=m.cells.shape).astype(np.uint8)
    cells = np.where(m.cells == LETHAL, LETHAL, soft).astype(np.uint8)
    m = Costmap(cells, 0.1)
    goal = (30, 30)
    assert cells[30, 30] < LETHAL
    cache = ObstacleHeuristicCache(m, goal, alpha=2.0)
    oracle = full_dijkstra_oracle(cells, goal, 2.0, 0.1)
    for _ in range(1000):
        ix = int(rng.integers(0, m.width))
        iy = int(rng.integers(0, m.height))
        got = cache.query(ix, iy)
        want = oracle.get((ix, iy), math.inf)
        # equal-cost paths may be summed in a different order, so allow
        # last-ulp float differences
        if math.isinf(want):
            assert math.isinf(got), (ix, iy)
        else:
            assert got == pytest.approx(want, rel=1e-12), (ix, iy)


def test_unreachable_cell_returns_inf():
    cells = np.zeros((9, 9), dtype=np.uint8)
    cells[:, 4] = LETHAL
    m = Costmap(cells, 0.05)
    cache = ObstacleHeuristicCache(m, (8, 4), alpha=2.0)
    assert math.isinf(cache.query(0, 0))
    assert cache.query(6, 6) < math.inf


def test_lethal_cells_never_finalized():
    cells = np.zeros((7, 7), dtype=np.uint8)
    cells[3, 3] = LETHAL
    m = Costmap(cells, 0.05)
    cache = ObstacleHeuristicCache(m, (0, 0), alpha=2.0)
    cache.expand_all()
    assert math.isinf(cache.query(3, 3))


def test_query_rebuilds_on_map_change():
    cells = np.zeros((8, 8), dtype=np.uint8)
    m = Costmap(cells, 0.1)
    cache = ObstacleHeuristicCache(m, (0, 0), alpha=2.0)
    before = obstacle_heuristic_query(cache, m, (7, 0), 2.0)
    assert before == pytest.approx(0.7)
    gen0 = cache.generation
    cells2 = cells.copy()
    cells2[0, 1:7] = LETHAL  # wall forces a detour
    m2 = Costmap(cells2, 0.1)
    after = obstacle_heuristic_query(cache, m2, (7, 0), 2.0)
    assert after > before
    assert cache.generation > gen0
    # alpha change also invalidates
    obstacle_heuristic_query(cache, m2, (7, 0), 3.0)
    assert cache.alpha == 3.0


def test_goal_on_lethal_rejected():
    cells = np.zeros((5, 5), dtype=np.uint8)
    cells[2, 2] = LETHAL
    with pytest.raises(ValueError):
        ObstacleHeuristicCache(Costmap(cells, 0.05), (2, 2), alpha=2.0)


def test_downsampled_cache_close_to_full_res():
    m = generate_random_map(5.0, 5.0, 0.05, 0.1, (0.3, 0.6), seed=3)
    goal = (50, 50)
    full = ObstacleHeuristicCache(m, goal, alpha=2.0)
    coarse = ObstacleHeuristicCache(m, goal, alpha=2.0, downsample=True)
    ref = full.query(10, 10)
    got = coarse.query(10, 10)
    assert got == pytest.approx(ref, rel=0.25)


# ---------------------------------------------------------------------------
# nonholonomic lookup table
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def small_rs_lut():
    return nonholonomic_heuristic_build("reeds_shepp", 0.5, 1.5, 8, 0.25)


def test_lut_origin_entry_zero(small_rs_lut):
    assert small_rs_lut.query(0, 0, 0) == 0.0


def test_lut_dubins_half_circle():
    lut = nonholonomic_heuristic_build("dubins", 1.0, 2.5, 8, 0.5)
    # target (0, 2R) with heading rotated 180 degrees: a half circle
    assert lut.query(0, 4, 4) == pytest.approx(math.pi, abs=1e-9)


def test_lut_entries_at_least_euclidean(small_rs_lut):
    lut = small_rs_lut
    r = lut.cells_radius
    for b in range(lut.heading_bins):
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                eu = math.hypot(dx, dy) * lut.resolution
                assert lut.query(dx, dy, b) >= eu - 1e-9


def test_lut_matches_direct_computation(small_rs_lut):
    lut = small_rs_lut
    rng = np.random.default_rng(5)
    r = lut.cells_radius
    for _ in range(50):
        dx = int(rng.integers(-r, r + 1))
        dy = int(rng.integers(-r, r + 1))
        b = int(rng.integers(0, lut.heading_bins))
        direct = reeds_shepp_distance(
            PoseSE2(0, 0, 0),
            PoseSE2(dx * lut.resolution, dy * lut.resolution,
                    b * 2 * math.pi / lut.heading_bins),
            lut.turning_radius)
        assert lut.query(dx, dy, b) == pytest.approx(direct, abs=1e-9)


def test_lut_mirror_symmetry(small_rs_lut):
    lut = small_rs_lut
    r = lut.cells_radius
    for b in range(lut.heading_bins):
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                assert lut.query(dx, dy, b) == lut.query(dx, -dy, -b)


def test_lut_query_outside_window(small_rs_lut):
    assert small_rs_lut.query(100, 0, 0) is None


def test_lut_memory_budget_error():
    with pytest.raises(MemoryError, match="MB"):
        nonholonomic_heuristic_build("reeds_shepp", 0.4, 10.0, 16, 0.05,
                                     memory_budget_mb=1.0)


def test_lut_build_validation():
    with pytest.raises(ValueError):
        nonholonomic_heuristic_build("bogus", 1.0, 2.0, 8, 0.25)
    with pytest.raises(ValueError):
        nonholonomic_heuristic_build("dubins", -1.0, 2.0, 8, 0.25)
    with pytest.raises(ValueError):
        nonholonomic_heuristic_build("dubins", 1.0, 2.0, 4, 0.25)


def test_lut_persistence_roundtrip(tmp_path, small_rs_lut):
    path = str(tmp_path / "rs.lut")
    save_lut(small_rs_lut, path)
    back = load_lut(path, "reeds_shepp", 0.5, 1.5, 8, 0.25)
    assert np.array_equal(back.table, small_rs_lut.table)
    assert back.key() == small_rs_lut.key()
    with pytest.raises(ValueError, match="does not match"):
        load_lut(path, "reeds_shepp", 0.6, 1.5, 8, 0.25)
    with pytest.raises(ValueError, match="does not match"):
        load_lut(path, "dubins", 0.5, 1.5, 8, 0.25)
    bad = tmp_path / "bad.lut"
    bad.write_bytes(b"not a lut at all, far too short or wrong")
    with pytest.raises(ValueError):
        load_lut(str(bad), "reeds_shepp", 0.5, 1.5, 8, 0.25)


# ---------------------------------------------------------------------------
# combination
# ---------------------------------------------------------------------------

def test_combined_free_map_far_state_is_straight_line(small_rs_lut):
    m = Costmap(np.zeros((100, 100), dtype=np.uint8), 0.05)
    goal = PoseSE2(4.5, 2.5, 0.0)
    cache = ObstacleHeuristicCache(m, m.world_to_grid(goal.x, goal.y), 2.0)
    state = PoseSE2(0.5, 2.5, 0.0)  # 4 m away, far outside the 1.5 m window
    h = combined_heuristic(state, goal, cache, small_rs_lut, m, 2.0)
    assert h == pytest.approx(4.0, rel=1e-3)


def test_combined_reversed_heading_dominated_by_model_term():
    m = Costmap(np.zeros((60, 60), dtype=np.uint8), 0.05)
    goal = PoseSE2(1.5, 1.5, 0.0)
    lut = nonholonomic_heuristic_build("dubins", 1.0, 2.0, 8, 0.5)
    cache = ObstacleHeuristicCache(m, m.world_to_grid(goal.x, goal.y), 2.0)
    state = PoseSE2(1.55, 1.5, math.pi)
    h = combined_heuristic(state, goal, cache, lut, m, 2.0)
    direct = dubins_distance(state, goal, 1.0)
    assert h == pytest.approx(direct)
    assert h >= 2.0  # tiny 2D gap, but the turn-around is expensive


def test_combined_at_least_each_component(small_rs_lut):
    m = generate_random_map(4.0, 4.0, 0.1, 0.1, (0.3, 0.6), seed=9)
    goal = PoseSE2(3.05, 3.05, 0.5)
    cache = ObstacleHeuristicCache(m, m.world_to_grid(goal.x, goal.y), 2.0)
    rng = np.random.default_rng(9)
    checked = 0
    for _ in range(50):
        x, y = rng.uniform(0.3, 3.7, size=2)
        th = rng.uniform(0, 2 * math.pi)
        state = PoseSE2(x, y, th)
        cell = m.world_to_grid(x, y)
        if m.is_lethal(*cell):
            continue
        obst = cache.query(*cell)
        model = reeds_shepp_distance(state, goal, 0.5)
        h = combined_heuristic(state, goal, cache, small_rs_lut, m, 2.0)
        if math.isinf(obst):
            assert math.isinf(h)
            continue
        assert h >= OCTILE_ADMISSIBLE_SCALE * obst - 1e-12
        assert h >= model - 1e-12
        checked += 1
    assert checked >= 25


def test_combined_out_of_bounds_state_inf(small_rs_lut):
    m = Costmap(np.zeros((20, 20), dtype=np.uint8), 0.05)
    goal = PoseSE2(0.5, 0.5, 0.0)
    cache = ObstacleHeuristicCache(m, m.world_to_grid(goal.x, goal.y), 2.0)
    assert math.isinf(combined_heuristic(PoseSE2(-1.0, 0.5, 0.0), goal,
                                         cache, small_rs_lut, m, 2.0))
