"""Generic best-first (A*) engine parameterized by a node interface.

Each planner supplies neighbor expansion, traversal costs, heuristics, goal
predicates and (optionally) analytic expansion; the engine owns the open
list, bookkeeping, limits and backtracing. The open list is a binary heap
with lazy deletion; ties on f prefer deeper nodes (larger g) and then the
smaller state key, so runs are reproducible.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass
from typing import Any, Hashable, Iterable, Optional

import numpy as np


class SearchError(Exception):
    """Base class for search failures."""


class NoPathExists(SearchError):
    """The open list was exhausted without reaching the goal."""


class IterationLimit(SearchError):
    """The expansion budget was exhausted."""


class TimeLimit(SearchError):
    """The planning-time budget was exhausted."""


@dataclass
class SearchLimits:
    max_iterations: int = 1_000_000
    max_planning_time: float = 60.0
    goal_xy_tolerance: float = 0.25
    goal_heading_tolerance: float = 0.35

    def __post_init__(self):
        if (self.max_iterations <= 0 or self.max_planning_time <= 0
                or self.goal_xy_tolerance <= 0
                or self.goal_heading_tolerance <= 0):
            raise ValueError("all search limits must be positive")


class NodeInterface:
    """Capability set a planner provides to the engine.

    States are opaque to the engine; ``state_key`` must be a hashable,
    orderable, collision-free discrete key within the quantization.
    """

    def state_key(self, state) -> Hashable:
        raise NotImplementedError

    def neighbors(self, state) -> Iterable[tuple[Any, float, int]]:
        """Yield (successor state, traversal cost, motion id)."""
        raise NotImplementedError

    def heuristic(self, state) -> float:
        raise NotImplementedError

    def is_goal(self, state) -> bool:
        raise NotImplementedError

    def try_analytic_expansion(self, state):
        """Attempt a closed-form jump to the goal; None if unavailable.

        On success returns (poses, dirs, cost) for the continuous suffix.
        """
        return None

    def analytic_interval(self, h: float) -> int:
        """Expansions to wait between analytic attempts; 0 disables them."""
        return 0


@dataclass
class SearchNode:
    key: Hashable
    state: Any
    g: float
    f: float
    parent_key: Optional[Hashable] = None
    incoming_motion: int = -1
    visited: bool = False

    def __post_init__(self):
        assert self.g >= 0.0


@dataclass
class SearchResult:
    path_keys: list
    states: list
    motions: list  # incoming motion id per path node (-1 for the start)
    expansions: int
    g_goal: float
    analytic_poses: Optional[np.ndarray] = None
    analytic_dirs: Optional[np.ndarray] = None
    analytic_cost: float = 0.0
    reexpansions: int = 0


def trace_back(nodes: dict, goal_key) -> list:
    """Root-first key sequence following the parent chain from goal_key."""
    if goal_key not in nodes:
        raise KeyError(f"goal key {goal_key!r} not in closed set")
    keys = []
    k = goal_key
    guard = len(nodes) + 1
    while k is not None:
        if guard == 0:
            raise RuntimeError("parent chain contains a cycle")
        guard -= 1
        node = nodes.get(k)
        if node is None:
            raise RuntimeError(f"broken parent chain at key {k!r}")
        keys.append(k)
        k = node.parent_key
    keys.reverse()
    return keys


def a_star(iface: NodeInterface, start_state,
           limits: SearchLimits | None = None,
           check_no_reexpand: bool = False,
           allow_reopen: bool = True) -> SearchResult:
    """Best-first search from start_state to the interface's goal.

    Terminates immediately when an analytic expansion succeeds, attaching
    the continuous suffix. Raises NoPathExists / IterationLimit / TimeLimit
    on the respective failures.

    With ``allow_reopen=False`` closed nodes are never improved, even if a
    cheaper route to them appears. Planners whose states carry continuous
    coordinates need this: reopening would mutate a node's coordinates
    after children were generated from them, leaving kinks in the traced
    path. Their heuristics are consistent, so reopening would be a no-op
    for cost anyway.
    """
    if limits is None:
        limits = SearchLimits()
    t0 = time.perf_counter()
    start_key = iface.state_key(start_state)
    h0 = iface.heuristic(start_state)
    nodes: dict = {start_key: SearchNode(start_key, start_state, 0.0, h0)}
    open_list: list = [(h0, 0.0, start_key)]
    expansions = 0
    reexpansions = 0
    analytic_countdown = 0

    def finish(key, suffix=None) -> SearchResult:
        keys = trace_back(nodes, key)
        return SearchResult(
            path_keys=keys,
            states=[nodes[k].state for k in keys],
            motions=[nodes[k].incoming_motion for k in keys],
            expansions=expansions,
            g_goal=nodes[key].g,
            analytic_poses=None if suffix is None else suffix[0],
            analytic_dirs=None if suffix is None else suffix[1],
            analytic_cost=0.0 if suffix is None else suffix[2],
            reexpansions=reexpansions)

    while open_list:
        if expansions >= limits.max_iterations:
            raise IterationLimit(f"exceeded {limits.max_iterations} expansions")
        if expansions % 64 == 0 and \
                time.perf_counter() - t0 > limits.max_planning_time:
            raise TimeLimit(f"exceeded {limits.max_planning_time}s")
        f, neg_g, key = heapq.heappop(open_list)
        node = nodes[key]
        if node.visited or -neg_g > node.g + 1e-12:
            continue  # stale lazy-deletion entry
        node.visited = True
        if iface.is_goal(node.state):
            return finish(key)
        h = f - node.g
        interval = iface.analytic_interval(h)
        if interval > 0:
            if analytic_countdown <= 0:
                suffix = iface.try_analytic_expansion(node.state)
                if suffix is not None:
                    return finish(key, suffix)
                analytic_countdown = interval
            analytic_countdown -= 1
        expansions += 1
        for succ_state, cost, motion_id in iface.neighbors(node.state):
            assert cost >= 0.0, "negative traversal cost"
            skey = iface.state_key(succ_state)
            g_new = node.g + cost
            existing = nodes.get(skey)
            if existing is not None:
                if existing.visited and check_no_reexpand and \
                        g_new < existing.g - 1e-12:
                    reexpansions += 1
                if existing.visited and not allow_reopen:
                    continue
                if g_new >= existing.g - 1e-12:
                    continue
                existing.g = g_new
                existing.state = succ_state
                existing.parent_key = key
                existing.incoming_motion = motion_id
                existing.visited = False
                f_new = g_new + iface.heuristic(succ_state)
                existing.f = f_new
                heapq.heappush(open_list, (f_new, -g_new, skey))
            else:
                f_new = g_new + iface.heuristic(succ_state)
                nodes[skey] = SearchNode(skey, succ_state, g_new, f_new,
                                         parent_key=key,
                                         incoming_motion=motion_id)
                heapq.heappush(open_list, (f_new, -g_new, skey))
    raise NoPathExists("open list exhausted without reaching the goal")
