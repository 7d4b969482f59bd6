"""Minimal control-set generation and the control-set file format.

A control set is the smallest collection of short feasible motions
(primitives) that can represent a turning-radius-constrained motion model
on a grid. Generation walks wavefront rings of cell centers outward from
the origin, proposes an arc+line trajectory to every (cell, end-heading)
candidate, and accepts a candidate only when no concatenation of already
accepted primitives reproduces its endpoint pose with at most 2% extra
length. Headings are non-uniform: they are the exact angles of
small-integer cell offsets, so primitives can start and end exactly on
cell centers.

The accepted set is kept closed under the 8 grid symmetries (rotations by
quarter turns and reflections), so only start headings in the first octant
are generated directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ._fastgrid import _heap_compact, _heap_pop, _heap_push
from .curves import MotionPrimitive, generate_trajectory
from .pose import PoseSE2, ang_diff, norm_angle

CONTROLSET_VERSION = "1"
DECOMPOSITION_TOLERANCE = 1.02  # accepted iff no concatenation within 2%


class ControlSetError(ValueError):
    """Base class for control-set file problems."""


class MalformedControlSetError(ControlSetError):
    """File cannot be parsed (truncation, bad counts, bad numbers)."""


class ControlSetVersionError(ControlSetError):
    """File declares an unsupported format version."""


class ControlSetInvariantError(ControlSetError):
    """File parses but violates a control-set invariant."""


class LatticeGenerationError(RuntimeError):
    """Generation hit the hard ring limit before converging."""


# ---------------------------------------------------------------------------
# headings
# ---------------------------------------------------------------------------

def _reduce_offset(x: int, y: int) -> tuple[int, int]:
    g = math.gcd(abs(x), abs(y))
    return (x // g, y // g) if g else (x, y)


def heading_offsets(heading_bins: int) -> list[tuple[int, int]]:
    """Canonical integer cell offsets, one per heading, sorted by angle.

    Offsets in the first octant are chosen nearest to uniform targets; the
    rest follow by the 8 grid symmetries, so the list is closed under
    quarter-turn rotation and axis/diagonal reflection.
    """
    if heading_bins == 4:
        return [(1, 0), (0, 1), (-1, 0), (0, -1)]
    if heading_bins < 8 or heading_bins % 8 != 0:
        raise ValueError(
            f"{heading_bins} headings cannot be realized from cell-center "
            f"offsets; use 4 or a multiple of 8")
    k = heading_bins // 8
    limit = max(8, 2 * k)
    # candidates strictly inside the octant, smallest cells first so the
    # headings stay realizable with short offsets (e.g. (2,1) for 16 bins)
    pool = sorted(((x, y) for x in range(2, limit + 1) for y in range(1, x)
                   if math.gcd(x, y) == 1),
                  key=lambda o: (max(o), abs(math.atan2(o[1], o[0]))))
    octant = [(1, 0)]
    prev_angle = 0.0
    for j in range(1, k):
        target = j * (math.pi / 4) / k
        best = None
        for off in pool:
            ang = math.atan2(off[1], off[0])
            if ang <= prev_angle + 1e-12 or off in octant:
                continue
            score = (max(off), abs(ang - target))
            if best is None or score < best[0]:
                best = (score, off, ang)
        if best is None:
            raise ValueError(
                f"no distinct integer offset realizes heading "
                f"{math.degrees(target):.2f} deg for {heading_bins} bins")
        octant.append(best[1])
        prev_angle = best[2]
    octant.append((1, 1))
    full = set()
    for x, y in octant:
        for sx, sy in ((x, y), (y, x)):  # diagonal reflection
            for rx, ry in ((sx, sy), (-sy, sx), (-sx, -sy), (sy, -sx)):
                full.add(_reduce_offset(rx, ry))
    offsets = sorted(full, key=lambda o: norm_angle(math.atan2(o[1], o[0])))
    if len(offsets) != heading_bins:
        raise ValueError(
            f"offset construction produced {len(offsets)} headings, "
            f"expected {heading_bins}")
    return offsets


def derive_headings(heading_bins: int) -> list[float]:
    """Sorted heading angles in [0, 2pi) realized by cell-center offsets."""
    return [norm_angle(math.atan2(oy, ox))
            for ox, oy in heading_offsets(heading_bins)]


# ---------------------------------------------------------------------------
# control set container + file format
# ---------------------------------------------------------------------------

@dataclass
class ControlSet:
    resolution: float
    turning_radius: float
    heading_bins: int
    headings: list[float]
    primitives: list[MotionPrimitive]
    version: str = CONTROLSET_VERSION
    generation_report: dict = field(default_factory=dict, compare=False,
                                    repr=False)

    def by_start_bin(self, b: int) -> list[MotionPrimitive]:
        return [p for p in self.primitives if p.start_heading_bin == b]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ControlSet):
            return NotImplemented
        if (self.version != other.version
                or self.resolution != other.resolution
                or self.turning_radius != other.turning_radius
                or self.heading_bins != other.heading_bins
                or self.headings != other.headings
                or len(self.primitives) != len(other.primitives)):
            return False
        for a, b in zip(self.primitives, other.primitives):
            if (a.start_heading_bin != b.start_heading_bin
                    or a.end_heading_bin != b.end_heading_bin
                    or a.turn_direction != b.turn_direction
                    or a.reversed != b.reversed
                    or a.length != b.length
                    or not np.array_equal(a.poses, b.poses)):
                return False
        return True

    def validate(self):
        """Raise ControlSetInvariantError on any broken invariant."""
        res = self.resolution
        if len(self.headings) != self.heading_bins:
            raise ControlSetInvariantError(
                f"{len(self.headings)} headings for {self.heading_bins} bins")
        for p in self.primitives:
            if not (0 <= p.start_heading_bin < self.heading_bins
                    and 0 <= p.end_heading_bin < self.heading_bins):
                raise ControlSetInvariantError(
                    f"primitive {p.prim_id}: heading bin out of range")
            x0, y0, t0 = p.poses[0]
            if (abs(x0) > 1e-9 or abs(y0) > 1e-9
                    or abs(ang_diff(t0, self.headings[p.start_heading_bin]))
                    > 1e-9):
                raise ControlSetInvariantError(
                    f"primitive {p.prim_id}: does not start at the origin "
                    f"with its start heading")
            x1, y1, t1 = p.end_pose
            if (abs(x1 / res - round(x1 / res)) > 1e-6
                    or abs(y1 / res - round(y1 / res)) > 1e-6):
                raise ControlSetInvariantError(
                    f"primitive {p.prim_id}: endpoint ({x1}, {y1}) is not "
                    f"on a cell center at resolution {res}")
            if abs(ang_diff(t1, self.headings[p.end_heading_bin])) > 1e-9:
                raise ControlSetInvariantError(
                    f"primitive {p.prim_id}: end heading {t1} is not "
                    f"heading bin {p.end_heading_bin}")
        for b in range(self.heading_bins):
            n = len(self.by_start_bin(b))
            if n < 3:
                raise ControlSetInvariantError(
                    f"start heading bin {b} has only {n} primitives "
                    f"(need at least 3)")

    def end_cell(self, p: MotionPrimitive) -> tuple[int, int]:
        x, y, _ = p.end_pose
        return (round(x / self.resolution), round(y / self.resolution))


def save_control_set(cs: ControlSet, path: str):
    """Write the structured-text control-set format.

    Grammar (whitespace separated, floats via repr so they round-trip):
      line 1:  gridplan-controlset <version>
      line 2:  resolution <float>
      line 3:  turning_radius <float>
      line 4:  heading_bins <int>
      line 5:  heading_offsets <x,y> ... (one per bin, defines the headings)
      line 6:  headings <float> ... (one per bin)
      then per primitive:
        primitive <start_bin> <end_bin> <turn> <reversed> <length> <n_poses>
        followed by n_poses lines of "<x> <y> <theta>"
      final line: end
    """
    lines = [f"gridplan-controlset {cs.version}",
             f"resolution {float(cs.resolution)!r}",
             f"turning_radius {float(cs.turning_radius)!r}",
             f"heading_bins {cs.heading_bins}"]
    offs = heading_offsets(cs.heading_bins)
    lines.append("heading_offsets " + " ".join(f"{x},{y}" for x, y in offs))
    lines.append("headings " + " ".join(repr(h) for h in cs.headings))
    for p in cs.primitives:
        lines.append(f"primitive {p.start_heading_bin} {p.end_heading_bin} "
                     f"{p.turn_direction} {int(p.reversed)} "
                     f"{float(p.length)!r} {len(p.poses)}")
        for x, y, t in p.poses:
            lines.append(f"{float(x)!r} {float(y)!r} {float(t)!r}")
    lines.append("end")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_control_set(path: str) -> ControlSet:
    """Parse and validate a control-set file written by save_control_set."""
    try:
        with open(path) as f:
            lines = [ln.strip() for ln in f]
    except OSError as e:
        raise MalformedControlSetError(f"{path}: {e}") from e
    lines = [ln for ln in lines if ln]
    pos = 0

    def take() -> str:
        nonlocal pos
        if pos >= len(lines):
            raise MalformedControlSetError(f"{path}: truncated file")
        ln = lines[pos]
        pos += 1
        return ln

    def take_field(name, conv):
        parts = take().split()
        if len(parts) < 2 or parts[0] != name:
            raise MalformedControlSetError(f"{path}: expected '{name} ...'")
        try:
            return [conv(p) for p in parts[1:]]
        except ValueError as e:
            raise MalformedControlSetError(f"{path}: bad {name}: {e}") from e

    head = take().split()
    if len(head) != 2 or head[0] != "gridplan-controlset":
        raise MalformedControlSetError(f"{path}: missing controlset header")
    if head[1] != CONTROLSET_VERSION:
        raise ControlSetVersionError(
            f"{path}: version {head[1]} unsupported "
            f"(expected {CONTROLSET_VERSION})")
    resolution = take_field("resolution", float)[0]
    turning_radius = take_field("turning_radius", float)[0]
    heading_bins = int(take_field("heading_bins", int)[0])
    take_field("heading_offsets", str)  # informative; headings follow
    headings = take_field("headings", float)
    if resolution <= 0 or turning_radius <= 0:
        raise MalformedControlSetError(
            f"{path}: non-positive resolution or turning radius")
    prims = []
    while True:
        parts = take().split()
        if parts == ["end"]:
            break
        if parts[0] != "primitive" or len(parts) != 7:
            raise MalformedControlSetError(
                f"{path}: expected primitive record, got {' '.join(parts)!r}")
        try:
            sb, eb, turn, rev = (int(parts[1]), int(parts[2]),
                                 int(parts[3]), int(parts[4]))
            length = float(parts[5])
            n = int(parts[6])
        except ValueError as e:
            raise MalformedControlSetError(f"{path}: bad primitive: {e}") from e
        if n < 2 or length <= 0 or turn not in (-1, 0, 1) or rev not in (0, 1):
            raise MalformedControlSetError(
                f"{path}: primitive fields out of range")
        poses = np.empty((n, 3))
        for i in range(n):
            vals = take().split()
            if len(vals) != 3:
                raise MalformedControlSetError(f"{path}: bad pose line")
            try:
                poses[i] = [float(v) for v in vals]
            except ValueError as e:
                raise MalformedControlSetError(f"{path}: bad pose: {e}") from e
        prims.append(MotionPrimitive(prim_id=len(prims), start_heading_bin=sb,
                                     end_heading_bin=eb, poses=poses,
                                     length=length, turn_direction=turn,
                                     reversed=bool(rev)))
    cs = ControlSet(resolution, turning_radius, heading_bins, headings,
                    prims, version=head[1])
    cs.validate()
    return cs


# ---------------------------------------------------------------------------
# reachability over a primitive graph (decomposition checks)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _reach_kernel(n_side, n_bins, start_bin, bin_ptr, di, dj, ebin, plen,
                  max_len):
    """Dijkstra over (cell, heading bin) states using primitive edges.

    The origin sits at the window center. States farther than max_len are
    left at inf. Returns the distance array indexed
    (iy * n_side + ix) * n_bins + bin.
    """
    n = n_side * n_side * n_bins
    dist = np.full(n, np.inf)
    cap = 2 * n + 16
    heap_keys = np.empty(cap)
    heap_cells = np.empty(cap, dtype=np.int64)
    c = n_side // 2
    s0 = (c * n_side + c) * n_bins + start_bin
    dist[s0] = 0.0
    heap_size = _heap_push(heap_keys, heap_cells, 0, 0.0, s0)
    while heap_size > 0:
        d, u, heap_size = _heap_pop(heap_keys, heap_cells, heap_size)
        if d > dist[u]:
            continue
        if d > max_len:
            break
        b = u % n_bins
        cell = u // n_bins
        ix = cell % n_side
        iy = cell // n_side
        for e in range(bin_ptr[b], bin_ptr[b + 1]):
            nx = ix + di[e]
            ny = iy + dj[e]
            if nx < 0 or nx >= n_side or ny < 0 or ny >= n_side:
                continue
            v = (ny * n_side + nx) * n_bins + ebin[e]
            nd = d + plen[e]
            if nd < dist[v] and nd <= max_len:
                dist[v] = nd
                if heap_size >= cap:
                    heap_size = _heap_compact(heap_keys, heap_cells,
                                              heap_size, dist)
                heap_size = _heap_push(heap_keys, heap_cells, heap_size,
                                       nd, v)
    return dist


def _prim_arrays(primitives, heading_bins, resolution):
    """CSR edge arrays (by start bin) for _reach_kernel."""
    by_bin = sorted(primitives, key=lambda p: p.start_heading_bin)
    ptr = np.zeros(heading_bins + 1, dtype=np.int64)
    for p in by_bin:
        ptr[p.start_heading_bin + 1] += 1
    ptr = np.cumsum(ptr)
    di = np.empty(len(by_bin), dtype=np.int64)
    dj = np.empty(len(by_bin), dtype=np.int64)
    ebin = np.empty(len(by_bin), dtype=np.int64)
    plen = np.empty(len(by_bin))
    for i, p in enumerate(by_bin):
        x, y, _ = p.end_pose
        di[i] = round(x / resolution)
        dj[i] = round(y / resolution)
        ebin[i] = p.end_heading_bin
        plen[i] = p.length
    return ptr, di, dj, ebin, plen


def concatenation_length(primitives, heading_bins, resolution, start_bin,
                         target_cell, target_bin, max_len,
                         bin_tolerance: int = 0) -> float:
    """Shortest length of a primitive concatenation from the origin pose
    (heading bin ``start_bin``) to ``target_cell`` with a heading within
    ``bin_tolerance`` bins of ``target_bin``; inf if none exists within
    ``max_len``."""
    half = int(math.ceil(max_len / resolution)) + 2
    n_side = 2 * half + 1
    ptr, di, dj, ebin, plen = _prim_arrays(primitives, heading_bins,
                                           resolution)
    dist = _reach_kernel(n_side, heading_bins, start_bin, ptr, di, dj,
                         ebin, plen, max_len)
    tx, ty = target_cell
    if abs(tx) > half or abs(ty) > half:
        return math.inf
    base = ((ty + half) * n_side + (tx + half)) * heading_bins
    return float(min(dist[base + (target_bin + db) % heading_bins]
                     for db in range(-bin_tolerance, bin_tolerance + 1)))


# ---------------------------------------------------------------------------
# symmetry closure
# ---------------------------------------------------------------------------

def _d4_transforms():
    """The 8 grid symmetries as (rotation quarter-turns, reflect-x first)."""
    return [(k, refl) for refl in (False, True) for k in range(4)]


def _apply_d4_offset(off, k, refl):
    x, y = off
    if refl:
        y = -y
    for _ in range(k):
        x, y = -y, x
    return (x, y)


def _transform_primitive(p: MotionPrimitive, k: int, refl: bool,
                         offsets, bin_of, headings) -> MotionPrimitive:
    """Image of a primitive under one grid symmetry, bins remapped."""
    sb = bin_of[_apply_d4_offset(offsets[p.start_heading_bin], k, refl)]
    eb = bin_of[_apply_d4_offset(offsets[p.end_heading_bin], k, refl)]
    poses = p.poses.copy()
    turn = p.turn_direction
    if refl:
        poses[:, 1] = -poses[:, 1]
        poses[:, 2] = -poses[:, 2]
        turn = -turn
    for _ in range(k):
        x = poses[:, 0].copy()
        poses[:, 0] = -poses[:, 1]
        poses[:, 1] = x
        poses[:, 2] += math.pi / 2
    poses[:, 2] = np.mod(poses[:, 2], 2.0 * math.pi)
    poses[0, 2] = headings[sb]
    poses[-1, 2] = headings[eb]
    return MotionPrimitive(prim_id=p.prim_id, start_heading_bin=sb,
                           end_heading_bin=eb, poses=poses, length=p.length,
                           turn_direction=turn, reversed=p.reversed)


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------

def _prim_key(p: MotionPrimitive, resolution):
    x, y, _ = p.end_pose
    return (p.start_heading_bin, p.end_heading_bin,
            round(x / resolution), round(y / resolution), p.turn_direction)


def _ring_cells(r: int):
    """Cells at L-infinity distance exactly r from the origin."""
    cells = []
    for i in range(-r, r + 1):
        cells.append((i, r))
        cells.append((i, -r))
    for j in range(-r + 1, r):
        cells.append((r, j))
        cells.append((-r, j))
    return cells


def generate_minimal_control_set(resolution: float, turning_radius: float,
                                 heading_bins: int = 16,
                                 stop_after_decomposable_rings: int = 3,
                                 ring_limit: int | None = None) -> ControlSet:
    """Wavefront generation of a minimal control set.

    Candidates on each ring are tried shorter-first; one is accepted only
    when no concatenation of accepted primitives reaches its endpoint pose
    within 2% extra length. Every acceptance also adds the candidate's 8
    symmetry images, so the set stays closed under the grid symmetries.

    Termination counts consecutive rings in which at least one turning
    candidate was feasible and everything decomposed; rings too close to
    the origin for any turn (radius-limited) do not count. The hard ring
    limit raises LatticeGenerationError if reached first.
    """
    if resolution <= 0 or turning_radius <= 0:
        raise ValueError("resolution and turning_radius must be positive")
    if stop_after_decomposable_rings < 1:
        raise ValueError("stop_after_decomposable_rings must be >= 1")
    headings = derive_headings(heading_bins)
    offsets = heading_offsets(heading_bins)
    bin_of = {off: i for i, off in enumerate(offsets)}
    octant_bins = [i for i, (ox, oy) in enumerate(offsets)
                   if ox > 0 and 0 <= oy <= ox]
    if ring_limit is None:
        ring_limit = 2 * math.ceil(turning_radius / resolution) + 8
    half = ring_limit + math.ceil(2.0 * turning_radius / resolution) + 4
    n_side = 2 * half + 1
    len_bound = DECOMPOSITION_TOLERANCE * (
        math.sqrt(2.0) * resolution * (ring_limit + 1)
        + 2.0 * math.pi * turning_radius)
    accepted: list[MotionPrimitive] = []
    keys: set = set()
    dist_cache: dict[int, np.ndarray] = {}

    def reach(b: int) -> np.ndarray:
        if b not in dist_cache:
            ptr, di, dj, ebin, plen = _prim_arrays(accepted, heading_bins,
                                                   resolution)
            dist_cache[b] = _reach_kernel(n_side, heading_bins, b, ptr, di,
                                          dj, ebin, plen, len_bound)
        return dist_cache[b]

    def accept(prim: MotionPrimitive):
        for k, refl in _d4_transforms():
            img = _transform_primitive(prim, k, refl, offsets, bin_of,
                                       headings)
            key = _prim_key(img, resolution)
            if key not in keys:
                keys.add(key)
                accepted.append(img)
        dist_cache.clear()

    quiet = 0
    quiet_rings: list[int] = []
    terminated = False
    last_ring = 0
    # every octant turn family must have produced a feasible candidate
    # before quiet rings count toward termination, otherwise small rings
    # (where turns are radius-limited) would stop generation prematurely
    turn_pairs = {(b, (b + s) % heading_bins)
                  for b in octant_bins for s in (-1, 1)}
    seen_pairs: set = set()
    for ring in range(1, ring_limit + 1):
        last_ring = ring
        candidates = []
        for b in octant_bins:
            start = PoseSE2(0.0, 0.0, headings[b])
            for (i, j) in _ring_cells(ring):
                bearing = math.atan2(j, i)
                for e, th_e in enumerate(headings):
                    if abs(ang_diff(th_e, bearing)) >= math.pi / 2:
                        continue
                    dbin = abs(e - b)
                    if min(dbin, heading_bins - dbin) > 1:
                        # candidates turn at most one heading bin; larger
                        # heading changes are compositions of these
                        continue
                    sol = generate_trajectory(
                        start, PoseSE2(i * resolution, j * resolution, th_e),
                        R_min=0.0)
                    if sol is None:
                        continue
                    if sol.arc_radius < turning_radius - 1e-9:
                        continue  # a larger ring may realize this turn
                    candidates.append((sol.total_length, b, e, i, j, sol))
        ring_accepts = 0
        for length, b, e, i, j, sol in sorted(
                candidates, key=lambda c: (c[0], c[1], c[2], c[3], c[4])):
            if e != b:
                seen_pairs.add((b, e))
            dist = reach(b)
            base = ((j + half) * n_side + (i + half)) * heading_bins
            best = min(dist[base + e],
                       dist[base + (e + 1) % heading_bins],
                       dist[base + (e - 1) % heading_bins])
            if best <= DECOMPOSITION_TOLERANCE * length + 1e-9:
                continue  # decomposes into accepted primitives
            poses = sol.sample(resolution)
            poses[-1] = (i * resolution, j * resolution, headings[e])
            poses[0, 2] = headings[b]
            accept(MotionPrimitive(prim_id=0, start_heading_bin=b,
                                   end_heading_bin=e, poses=poses,
                                   length=length,
                                   turn_direction=sol.turn_sign))
            ring_accepts += 1
        if ring_accepts:
            quiet = 0
            quiet_rings = []
        elif turn_pairs <= seen_pairs:
            quiet += 1
            quiet_rings.append(ring)
            if quiet >= stop_after_decomposable_rings:
                terminated = True
                break
    if not terminated:
        raise LatticeGenerationError(
            f"reached ring limit {ring_limit} before "
            f"{stop_after_decomposable_rings} consecutive decomposable "
            f"rings; resolution {resolution} with turning radius "
            f"{turning_radius} may be too coarse")

    accepted = _prune_redundant(accepted, heading_bins, resolution)
    accepted.sort(key=lambda p: (p.start_heading_bin, p.length,
                                 p.end_heading_bin, -p.turn_direction))
    prims = [MotionPrimitive(prim_id=i, start_heading_bin=p.start_heading_bin,
                             end_heading_bin=p.end_heading_bin, poses=p.poses,
                             length=p.length,
                             turn_direction=p.turn_direction,
                             reversed=p.reversed)
             for i, p in enumerate(accepted)]
    cs = ControlSet(resolution, turning_radius, heading_bins, headings, prims)
    cs.generation_report = {"final_ring": last_ring,
                            "decomposable_rings": tuple(quiet_rings)}
    cs.validate()
    return cs


def _prune_redundant(accepted, heading_bins, resolution):
    """Drop any primitive that later acceptances made decomposable.

    Longest first: a primitive goes if the rest of the set reaches its
    endpoint within the 2% tolerance. Repeats until stable so the final
    set is minimal under single removal.
    """
    prims = list(accepted)
    changed = True
    while changed:
        changed = False
        for p in sorted(prims, key=lambda q: (-q.length,
                                              _prim_key(q, resolution))):
            rest = [q for q in prims if q is not p]
            x, y, _ = p.end_pose
            best = concatenation_length(
                rest, heading_bins, resolution, p.start_heading_bin,
                (round(x / resolution), round(y / resolution)),
                p.end_heading_bin,
                DECOMPOSITION_TOLERANCE * p.length + 1e-9, bin_tolerance=1)
            if best <= DECOMPOSITION_TOLERANCE * p.length + 1e-9:
                prims = rest
                changed = True
                break
    return prims
