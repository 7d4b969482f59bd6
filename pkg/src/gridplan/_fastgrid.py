"""Compiled 2D grid-search kernels.

Two kernels over flattened uint8 cost grids, both using cost-aware edge
weights d * (1 + alpha * c / 253) where c is the destination cell's cost:

- ``dijkstra_resume``: goal-rooted Dijkstra that can be paused once a target
  cell is finalized and resumed later from its retained frontier. Backs the
  cached obstacle heuristic.
- ``astar_grid``: forward A* with an octile-distance heuristic and a parent
  array for path reconstruction. Backs the 2D planner.

The binary heap lives in preallocated arrays with lazy deletion; when it
fills up, stale entries are compacted in place (at most half the capacity is
live, so compaction always frees room).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

INF = np.inf
_LETHAL = 254  # 254 = lethal, 255 = unknown; neither is traversable

STATUS_OK = 0
STATUS_NO_PATH = 1
STATUS_ITER_LIMIT = 2

_NB_DX = np.array([1, -1, 0, 0, 1, 1, -1, -1], dtype=np.int64)
_NB_DY = np.array([0, 0, 1, -1, 1, -1, 1, -1], dtype=np.int64)


@njit(cache=True)
def _heap_push(keys, cells, size, k, c):
    i = size
    keys[i] = k
    cells[i] = c
    while i > 0:
        p = (i - 1) >> 1
        if keys[p] <= keys[i]:
            break
        keys[p], keys[i] = keys[i], keys[p]
        cells[p], cells[i] = cells[i], cells[p]
        i = p
    return size + 1


@njit(cache=True)
def _heap_pop(keys, cells, size):
    top_k = keys[0]
    top_c = cells[0]
    size -= 1
    keys[0] = keys[size]
    cells[0] = cells[size]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= size:
            break
        if l + 1 < size and keys[l + 1] < keys[l]:
            l += 1
        if keys[i] <= keys[l]:
            break
        keys[i], keys[l] = keys[l], keys[i]
        cells[i], cells[l] = cells[l], cells[i]
        i = l
    return top_k, top_c, size


@njit(cache=True)
def _heap_compact(keys, cells, size, best):
    """Drop entries whose key no longer matches best[cell], re-heapify."""
    n = 0
    for i in range(size):
        c = cells[i]
        if keys[i] == best[c]:
            keys[n] = keys[i]
            cells[n] = c
            n += 1
    for root in range(n // 2 - 1, -1, -1):
        i = root
        while True:
            l = 2 * i + 1
            if l >= n:
                break
            if l + 1 < n and keys[l + 1] < keys[l]:
                l += 1
            if keys[i] <= keys[l]:
                break
            keys[i], keys[l] = keys[l], keys[i]
            cells[i], cells[l] = cells[l], cells[i]
            i = l
    return n


@njit(cache=True)
def dijkstra_resume(cost, width, height, dist, final,
                    heap_keys, heap_cells, heap_size,
                    target, alpha, resolution):
    """Resume goal-rooted Dijkstra until ``target`` is finalized.

    ``cost``/``dist``/``final`` are flat arrays of width*height; ``target``
    is a flat cell index, or -1 to exhaust the frontier. Edge weight for the
    forward move v -> u (u nearer the goal) is d * (1 + alpha * cost[u]/253),
    i.e. the destination cell's cost. Returns the new heap size.
    """
    if target >= 0 and final[target] == 1:
        return heap_size
    diag = resolution * math.sqrt(2.0)
    cap = heap_keys.shape[0]
    while heap_size > 0:
        d, u, heap_size = _heap_pop(heap_keys, heap_cells, heap_size)
        if final[u] == 1 or d > dist[u]:
            continue
        final[u] = 1
        ux = u % width
        uy = u // width
        # written as alpha * c / 253 (not a precomputed ratio) so values are
        # bit-identical to a straightforward reference implementation
        w_card = resolution * (1.0 + alpha * cost[u] / 253.0)
        w_diag = diag * (1.0 + alpha * cost[u] / 253.0)
        for k in range(8):
            vx = ux + _NB_DX[k]
            vy = uy + _NB_DY[k]
            if vx < 0 or vx >= width or vy < 0 or vy >= height:
                continue
            v = vy * width + vx
            if cost[v] >= _LETHAL or final[v] == 1:
                continue
            nd = dist[u] + (w_card if k < 4 else w_diag)
            if nd < dist[v]:
                dist[v] = nd
                if heap_size >= cap:
                    heap_size = _heap_compact(heap_keys, heap_cells,
                                              heap_size, dist)
                heap_size = _heap_push(heap_keys, heap_cells, heap_size,
                                       nd, v)
        # pause only after the target's own neighbors were relaxed, so a
        # later resume does not miss offers through the target cell
        if u == target:
            break
    return heap_size


@njit(cache=True)
def motion_costs(cost, width, height, resolution, ox, oy, alpha,
                 xs, ys, ptr, x0, y0, out):
    """Cost-aware traversal cost of each sampled motion primitive.

    ``xs``/``ys`` hold the concatenated local sample offsets of all
    primitives for one heading bin, delimited by the CSR offsets ``ptr``;
    the motions are translated to world position (x0, y0). ``out[p]``
    receives the summed edge cost, or inf when any sample leaves the map
    or lands on a lethal/unknown cell.
    """
    scale = alpha / 253.0
    for p in range(ptr.shape[0] - 1):
        total = 0.0
        px = x0 + xs[ptr[p]]
        py = y0 + ys[ptr[p]]
        blocked = False
        for j in range(ptr[p] + 1, ptr[p + 1]):
            x = x0 + xs[j]
            y = y0 + ys[j]
            ix = int(math.floor((x - ox) / resolution))
            iy = int(math.floor((y - oy) / resolution))
            if ix < 0 or ix >= width or iy < 0 or iy >= height:
                blocked = True
                break
            c = cost[iy * width + ix]
            if c >= _LETHAL:
                blocked = True
                break
            total += math.hypot(x - px, y - py) * (1.0 + scale * c)
            px = x
            py = y
        out[p] = INF if blocked else total


@njit(cache=True)
def astar_grid(cost, width, height, start, goal, alpha, resolution,
               max_iterations):
    """Forward cost-aware A* between flat cell indices start and goal.

    Heuristic is octile distance in meters (a lower bound because the edge
    weight multiplier is >= 1). Returns (status, path cost, expansions,
    parent array) where parent[c] is the flat predecessor index or -1.
    """
    n = width * height
    dist = np.full(n, INF)
    fval = np.full(n, INF)  # latest pushed f per cell, for heap compaction
    final = np.zeros(n, dtype=np.uint8)
    parent = np.full(n, -1, dtype=np.int64)
    cap = 2 * n + 16
    heap_keys = np.empty(cap)
    heap_cells = np.empty(cap, dtype=np.int64)
    heap_size = 0
    diag = resolution * math.sqrt(2.0)
    oct_k = math.sqrt(2.0) - 1.0
    gx = goal % width
    gy = goal // width
    dist[start] = 0.0
    dx0 = abs(start % width - gx)
    dy0 = abs(start // width - gy)
    h0 = resolution * (max(dx0, dy0) + oct_k * min(dx0, dy0))
    fval[start] = h0
    heap_size = _heap_push(heap_keys, heap_cells, heap_size, h0, start)
    expansions = 0
    while heap_size > 0:
        f, u, heap_size = _heap_pop(heap_keys, heap_cells, heap_size)
        if final[u] == 1:
            continue
        final[u] = 1
        if u == goal:
            return STATUS_OK, dist[u], expansions, parent
        if expansions >= max_iterations:
            return STATUS_ITER_LIMIT, INF, expansions, parent
        expansions += 1
        ux = u % width
        uy = u // width
        for k in range(8):
            vx = ux + _NB_DX[k]
            vy = uy + _NB_DY[k]
            if vx < 0 or vx >= width or vy < 0 or vy >= height:
                continue
            v = vy * width + vx
            if cost[v] >= _LETHAL or final[v] == 1:
                continue
            step = resolution if k < 4 else diag
            # same expression shape as the reference formula (bit-identical)
            nd = dist[u] + step * (1.0 + alpha * cost[v] / 253.0)
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = u
                ddx = abs(vx - gx)
                ddy = abs(vy - gy)
                h = resolution * (max(ddx, ddy) + oct_k * min(ddx, ddy))
                fval[v] = nd + h
                if heap_size >= cap:
                    heap_size = _heap_compact(heap_keys, heap_cells,
                                              heap_size, fval)
                heap_size = _heap_push(heap_keys, heap_cells, heap_size,
                                       nd + h, v)
    return STATUS_NO_PATH, INF, expansions, parent
