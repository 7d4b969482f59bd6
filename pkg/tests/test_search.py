import heapq
import math
import time

import numpy as np
import pytest

from gridplan.search import (IterationLimit, NoPathExists, NodeInterface,
                             SearchLimits, SearchNode, TimeLimit, a_star,
                             trace_back)

SQRT2 = math.sqrt(2.0)
MOVES = [(1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
         (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2)]


class GridIface(NodeInterface):
    """8-connected grid over a boolean obstacle mask, octile heuristic."""

    def __init__(self, blocked, goal, use_heuristic=True):
        self.blocked = blocked
        self.goal = goal
        self.use_heuristic = use_heuristic

    def state_key(self, state):
        return state

    def neighbors(self, state):
        x, y = state
        h, w = self.blocked.shape
        for dx, dy, c in MOVES:
            nx, ny = x + dx, y + dy
            if 0 <= nx < w and 0 <= ny < h and not self.blocked[ny, nx]:
                yield (nx, ny), c, 0

    def heuristic(self, state):
        if not self.use_heuristic:
            return 0.0
        dx = abs(state[0] - self.goal[0])
        dy = abs(state[1] - self.goal[1])
        return max(dx, dy) + (SQRT2 - 1.0) * min(dx, dy)

    def is_goal(self, state):
        return state == self.goal


def dijkstra_oracle(blocked, start):
    """Plain-dict Dijkstra, written independently of the engine."""
    h, w = blocked.shape
    dist = {start: 0.0}
    heap = [(0.0, start)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for dx, dy, c in MOVES:
            v = (u[0] + dx, u[1] + dy)
            if not (0 <= v[0] < w and 0 <= v[1] < h) or blocked[v[1], v[0]]:
                continue
            nd = d + c
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def random_grid(rng, n=32, p=0.3):
    blocked = rng.random((n, n)) < p
    blocked[0, 0] = False
    blocked[n - 1, n - 1] = False
    return blocked


def test_matches_dijkstra_on_random_grids():
    rng = np.random.default_rng(1)
    solved = 0
    for _ in range(50):
        blocked = random_grid(rng)
        start, goal = (0, 0), (31, 31)
        dist = dijkstra_oracle(blocked, start)
        iface = GridIface(blocked, goal)
        if goal not in dist:
            with pytest.raises(NoPathExists):
                a_star(iface, start)
            continue
        res = a_star(iface, start)
        assert res.g_goal == pytest.approx(dist[goal], rel=1e-12)
        solved += 1
    assert solved >= 20


def test_zero_heuristic_same_cost():
    rng = np.random.default_rng(2)
    for _ in range(10):
        blocked = random_grid(rng, n=20, p=0.25)
        start, goal = (0, 0), (19, 19)
        if goal not in dijkstra_oracle(blocked, start):
            continue
        a = a_star(GridIface(blocked, goal, use_heuristic=True), start)
        b = a_star(GridIface(blocked, goal, use_heuristic=False), start)
        assert a.g_goal == pytest.approx(b.g_goal, rel=1e-12)
        # the heuristic should not expand more nodes than uniform search
        assert a.expansions <= b.expansions


def test_no_reexpansion_with_consistent_heuristic():
    rng = np.random.default_rng(3)
    for _ in range(10):
        blocked = random_grid(rng, n=24, p=0.2)
        iface = GridIface(blocked, (23, 23))
        try:
            res = a_star(iface, (0, 0), check_no_reexpand=True)
        except NoPathExists:
            continue
        assert res.reexpansions == 0


def test_empty_5x5_diagonal_cost():
    blocked = np.zeros((5, 5), dtype=bool)
    res = a_star(GridIface(blocked, (4, 4)), (0, 0))
    assert res.g_goal == pytest.approx(4 * SQRT2)
    assert res.path_keys[0] == (0, 0)
    assert res.path_keys[-1] == (4, 4)
    # consecutive path cells are 8-connected
    for a, b in zip(res.path_keys, res.path_keys[1:]):
        assert max(abs(a[0] - b[0]), abs(a[1] - b[1])) == 1


def test_start_is_goal():
    blocked = np.zeros((3, 3), dtype=bool)
    res = a_star(GridIface(blocked, (1, 1)), (1, 1))
    assert res.g_goal == 0.0
    assert res.path_keys == [(1, 1)]
    assert res.expansions == 0


def test_walled_off_goal_raises():
    blocked = np.zeros((7, 7), dtype=bool)
    blocked[:, 3] = True
    with pytest.raises(NoPathExists):
        a_star(GridIface(blocked, (6, 6)), (0, 0))


def test_iteration_limit():
    blocked = np.zeros((40, 40), dtype=bool)
    limits = SearchLimits(max_iterations=5)
    with pytest.raises(IterationLimit):
        a_star(GridIface(blocked, (39, 39), use_heuristic=False),
               (0, 0), limits)


def test_time_limit():
    class SlowIface(GridIface):
        def neighbors(self, state):
            time.sleep(0.002)
            yield from super().neighbors(state)

    blocked = np.zeros((200, 200), dtype=bool)
    limits = SearchLimits(max_planning_time=0.05)
    with pytest.raises(TimeLimit):
        a_star(SlowIface(blocked, (199, 199), use_heuristic=False),
               (0, 0), limits)


def test_limit_validation():
    with pytest.raises(ValueError):
        SearchLimits(max_iterations=0)
    with pytest.raises(ValueError):
        SearchLimits(max_planning_time=-1.0)


def test_analytic_expansion_short_circuits():
    calls = []

    class AnalyticIface(GridIface):
        def analytic_interval(self, h):
            return 3

        def try_analytic_expansion(self, state):
            calls.append(state)
            if state[0] >= 5:
                poses = np.array([[float(state[0]), float(state[1]), 0.0],
                                  [9.0, 9.0, 0.0]])
                return poses, np.array([1, 1]), 2.5
            return None

    blocked = np.zeros((10, 10), dtype=bool)
    res = a_star(AnalyticIface(blocked, (9, 9)), (0, 0))
    assert res.analytic_poses is not None
    assert res.analytic_cost == 2.5
    assert res.path_keys[-1][0] >= 5  # stopped where the jump succeeded
    assert res.path_keys[-1] != (9, 9)
    # attempts are rate limited: far fewer calls than expansions
    assert len(calls) <= res.expansions // 3 + 2


def test_trace_back_chain_and_errors():
    nodes = {
        "a": SearchNode("a", None, 0.0, 0.0),
        "b": SearchNode("b", None, 1.0, 1.0, parent_key="a"),
        "c": SearchNode("c", None, 2.0, 2.0, parent_key="b"),
    }
    assert trace_back(nodes, "c") == ["a", "b", "c"]
    assert trace_back(nodes, "a") == ["a"]
    with pytest.raises(KeyError):
        trace_back(nodes, "zz")
    broken = {"c": SearchNode("c", None, 2.0, 2.0, parent_key="missing")}
    with pytest.raises(RuntimeError):
        trace_back(broken, "c")
    x = SearchNode("x", None, 0.0, 0.0, parent_key="y")
    y = SearchNode("y", None, 0.0, 0.0, parent_key="x")
    with pytest.raises(RuntimeError):
        trace_back({"x": x, "y": y}, "x")


def test_motions_recorded_along_path():
    class MotionIface(GridIface):
        def neighbors(self, state):
            x, y = state
            h, w = self.blocked.shape
            for mid, (dx, dy, c) in enumerate(MOVES):
                nx, ny = x + dx, y + dy
                if 0 <= nx < w and 0 <= ny < h and not self.blocked[ny, nx]:
                    yield (nx, ny), c, mid

    blocked = np.zeros((4, 4), dtype=bool)
    res = a_star(MotionIface(blocked, (3, 3)), (0, 0))
    assert res.motions[0] == -1
    for (a, b), mid in zip(zip(res.path_keys, res.path_keys[1:]),
                           res.motions[1:]):
        dx, dy, _ = MOVES[mid]
        assert (a[0] + dx, a[1] + dy) == b
