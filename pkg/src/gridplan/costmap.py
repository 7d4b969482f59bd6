"""Costmap data model: PGM file I/O, obstacle inflation, random map
generation, coordinate transforms, and footprint collision checking.

Cell encoding (one unsigned byte per cell):
    0          free
    1..253     increasing soft cost
    254        LETHAL (occupied)
    255        UNKNOWN (lethal for planning unless explicitly allowed)
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.ndimage import distance_transform_edt

from .pose import PoseSE2

FREE = 0
COST_MAX = 253  # maximum non-lethal cost value
LETHAL = 254
UNKNOWN = 255


class MapError(ValueError):
    """Raised on malformed map files or invalid map parameters."""


class Costmap:
    """Immutable 2D grid of travel costs with resolution and origin metadata.

    ``cells`` is a (height, width) uint8 array indexed [iy, ix]; the origin
    is the world position of the lower-left corner of cell (0, 0).
    """

    def __init__(self, cells: np.ndarray, resolution: float,
                 origin: tuple[float, float] = (0.0, 0.0)):
        cells = np.array(cells, dtype=np.uint8, copy=True, order="C")
        if cells.ndim != 2 or cells.shape[0] < 1 or cells.shape[1] < 1:
            raise MapError("costmap must be a non-empty 2D grid")
        if resolution <= 0.0:
            raise MapError(f"resolution must be positive, got {resolution}")
        cells.setflags(write=False)
        self.cells = cells
        self.resolution = float(resolution)
        self.origin = (float(origin[0]), float(origin[1]))

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width_m(self) -> float:
        return self.width * self.resolution

    @property
    def height_m(self) -> float:
        return self.height * self.resolution

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def in_bounds_world(self, x: float, y: float) -> bool:
        ox, oy = self.origin
        return ox <= x < ox + self.width_m and oy <= y < oy + self.height_m

    def cost_at(self, ix: int, iy: int) -> int:
        return int(self.cells[iy, ix])

    def is_lethal(self, ix: int, iy: int, allow_unknown: bool = False) -> bool:
        c = self.cells[iy, ix]
        if c == LETHAL:
            return True
        return c == UNKNOWN and not allow_unknown

    def lethal_fraction(self) -> float:
        return float(np.count_nonzero(self.cells >= LETHAL)) / self.cells.size

    def world_to_grid(self, x: float, y: float) -> tuple[int, int]:
        """Cell index containing a world point; raises on out-of-bounds."""
        if not self.in_bounds_world(x, y):
            raise MapError(f"world point ({x}, {y}) outside map bounds")
        ix = int((x - self.origin[0]) / self.resolution)
        iy = int((y - self.origin[1]) / self.resolution)
        # guard against float edge cases at the upper border
        return min(ix, self.width - 1), min(iy, self.height - 1)

    def world_to_grid_unchecked(self, x: float, y: float) -> tuple[int, int]:
        return (int(math.floor((x - self.origin[0]) / self.resolution)),
                int(math.floor((y - self.origin[1]) / self.resolution)))

    def grid_to_world(self, ix: int, iy: int) -> tuple[float, float]:
        """World coordinates of a cell center."""
        if not self.in_bounds(ix, iy):
            raise MapError(f"cell ({ix}, {iy}) outside map bounds")
        return (self.origin[0] + (ix + 0.5) * self.resolution,
                self.origin[1] + (iy + 0.5) * self.resolution)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Costmap)
                and self.resolution == other.resolution
                and self.origin == other.origin
                and self.cells.shape == other.cells.shape
                and bool(np.array_equal(self.cells, other.cells)))


@dataclass(frozen=True)
class Circle:
    radius: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("circle radius must be positive")


@dataclass(frozen=True)
class Polygon:
    """Robot-frame polygon footprint, vertices counter-clockwise in meters."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        if abs(_shoelace_area(verts)) < 1e-12:
            raise ValueError("polygon has zero area")


Footprint = Circle | Polygon


def _shoelace_area(verts: Sequence[tuple[float, float]]) -> float:
    a = 0.0
    n = len(verts)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        a += x1 * y2 - x2 * y1
    return 0.5 * a


# ---------------------------------------------------------------------------
# File I/O: binary PGM (P5) plus a `.meta` text sidecar.
#
# Sidecar lines: `resolution: <float>`, `origin: <x> <y>`, `negate: 0|1`,
# and optionally `encoding: raw|linear`. The default `linear` encoding maps
# photo-style pixels (0 = occupied .. 255 = free) onto cost values; `raw`
# stores cost bytes verbatim, which is what save_map writes so that
# load_map(save_map(m)) round-trips bit-exact for every cost value.
# ---------------------------------------------------------------------------

def _meta_path(path: str) -> str:
    base, _ = os.path.splitext(path)
    return base + ".meta"


def _read_pgm(path: str) -> np.ndarray:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise MapError(f"cannot read map file {path}: {e}") from e
    # header: magic, width, height, maxval; '#' comments allowed
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < 4 and i < len(data):
        if data[i:i + 1].isspace():
            i += 1
            continue
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace():
            j += 1
        tokens.append(data[i:j])
        i = j
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise MapError(f"{path}: not a binary P5 PGM file")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as e:
        raise MapError(f"{path}: corrupt PGM header") from e
    if maxval != 255:
        raise MapError(f"{path}: PGM maxval must be 255, got {maxval}")
    if width <= 0 or height <= 0:
        raise MapError(f"{path}: nonpositive PGM dimensions")
    payload = data[i + 1:]
    if len(payload) != width * height:
        raise MapError(f"{path}: payload size {len(payload)} does not match "
                       f"{width}x{height} header")
    img = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    # PGM rows run top-to-bottom; our rows run bottom-to-top (y up)
    return img[::-1].copy()


def _parse_meta(path: str) -> dict:
    meta = {"negate": 0, "encoding": "linear"}
    try:
        with open(path, "r", encoding="ascii") as f:
            lines = f.readlines()
    except OSError as e:
        raise MapError(f"missing metadata file {path}") from e
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition(":")
        key, val = key.strip(), val.strip()
        try:
            if key == "resolution":
                meta["resolution"] = float(val)
            elif key == "origin":
                parts = val.split()
                meta["origin"] = (float(parts[0]), float(parts[1]))
            elif key == "negate":
                meta["negate"] = int(val)
            elif key == "encoding":
                if val not in ("raw", "linear"):
                    raise MapError(f"{path}: unknown encoding '{val}'")
                meta["encoding"] = val
        except (ValueError, IndexError) as e:
            raise MapError(f"{path}: malformed line '{line}'") from e
    if "resolution" not in meta:
        raise MapError(f"{path}: missing 'resolution' line")
    if meta["resolution"] <= 0.0:
        raise MapError(f"{path}: nonpositive resolution")
    meta.setdefault("origin", (0.0, 0.0))
    return meta


# Precomputed linear pixel -> cost table: 0 is occupied, 255 free, and
# intermediate values map (inverted) onto 1..253.
_LINEAR_TABLE = np.empty(256, dtype=np.uint8)
_LINEAR_TABLE[0] = LETHAL
_LINEAR_TABLE[255] = FREE
for _p in range(1, 255):
    _LINEAR_TABLE[_p] = int(round(COST_MAX * (255 - _p) / 255.0))
del _p


def load_map(path: str) -> Costmap:
    """Load a PGM (P5) + `.meta` sidecar pair as a Costmap."""
    img = _read_pgm(path)
    meta = _parse_meta(_meta_path(path))
    if meta["negate"]:
        img = 255 - img
    if meta["encoding"] == "raw":
        cells = img
    else:
        cells = _LINEAR_TABLE[img]
    return Costmap(cells, meta["resolution"], meta["origin"])


def save_map(cmap: Costmap, path: str) -> None:
    """Write a Costmap as PGM + sidecar using the bit-exact raw encoding."""
    header = f"P5\n{cmap.width} {cmap.height}\n255\n".encode("ascii")
    with open(path, "wb") as f:
        f.write(header)
        f.write(cmap.cells[::-1].tobytes())
    with open(_meta_path(path), "w", encoding="ascii") as f:
        f.write(f"resolution: {cmap.resolution!r}\n")
        f.write(f"origin: {cmap.origin[0]!r} {cmap.origin[1]!r}\n")
        f.write("negate: 0\n")
        f.write("encoding: raw\n")


# ---------------------------------------------------------------------------
# Inflation and random map generation
# ---------------------------------------------------------------------------

def inflate(cmap: Costmap, inscribed_radius: float, decay_factor: float,
            unknown_as_lethal: bool = True) -> Costmap:
    """Spread exponentially decaying cost outward from lethal cells.

    Cells within ``inscribed_radius`` (Euclidean, meters) of a lethal cell
    get COST_MAX; beyond that, round(COST_MAX * exp(-decay * (d - r_in))).
    Existing higher costs are kept (pointwise max).
    """
    if inscribed_radius < 0.0:
        raise ValueError("inscribed_radius must be >= 0")
    if decay_factor <= 0.0:
        raise ValueError("decay_factor must be > 0")
    sources = cmap.cells == LETHAL
    if unknown_as_lethal:
        sources |= cmap.cells == UNKNOWN
    if not sources.any():
        return Costmap(cmap.cells, cmap.resolution, cmap.origin)
    d = distance_transform_edt(~sources) * cmap.resolution
    with np.errstate(under="ignore"):
        soft = np.rint(COST_MAX * np.exp(-decay_factor *
                                         np.maximum(d - inscribed_radius, 0.0)))
    new = np.maximum(cmap.cells, soft.astype(np.uint8))
    return Costmap(new, cmap.resolution, cmap.origin)


def generate_random_map(width_m: float, height_m: float, resolution: float,
                        obstacle_density: float,
                        obstacle_size_range: tuple[float, float] = (0.5, 2.0),
                        seed: int = 0,
                        max_attempts: int = 200_000) -> Costmap:
    """Random map with a lethal border wall and axis-aligned rectangular
    obstacles, placed until the lethal-cell fraction is within +/-0.5
    percentage points of ``obstacle_density``. Deterministic in ``seed``.
    """
    if not 0.0 <= obstacle_density < 1.0:
        raise ValueError("obstacle_density must be in [0, 1)")
    w = int(round(width_m / resolution))
    h = int(round(height_m / resolution))
    if w < 3 or h < 3:
        raise ValueError("map too small for a border wall")
    cells = np.zeros((h, w), dtype=np.uint8)
    cells[0, :] = LETHAL
    cells[-1, :] = LETHAL
    cells[:, 0] = LETHAL
    cells[:, -1] = LETHAL
    if obstacle_density == 0.0:
        return Costmap(cells, resolution)

    rng = np.random.default_rng(seed)
    total = cells.size
    lethal = int(np.count_nonzero(cells))
    lo, hi = obstacle_size_range
    target = obstacle_density
    attempts = 0
    while lethal / total < target - 0.005:
        attempts += 1
        if attempts > max_attempts:
            raise ValueError(
                "could not reach requested obstacle density "
                f"{target} with obstacle sizes {obstacle_size_range}")
        ow = max(1, int(round(rng.uniform(lo, hi) / resolution)))
        oh = max(1, int(round(rng.uniform(lo, hi) / resolution)))
        if ow >= w - 2 or oh >= h - 2:
            continue
        ix = int(rng.integers(1, w - 1 - ow + 1))
        iy = int(rng.integers(1, h - 1 - oh + 1))
        patch = cells[iy:iy + oh, ix:ix + ow]
        gain = int(np.count_nonzero(patch < LETHAL))
        if (lethal + gain) / total > target + 0.005:
            continue  # would overshoot the band; try another rectangle
        patch[patch < LETHAL] = LETHAL
        lethal += gain
    return Costmap(cells, resolution)


# ---------------------------------------------------------------------------
# Collision checking
# ---------------------------------------------------------------------------

def _point_in_polygon(px: np.ndarray, py: np.ndarray,
                      verts: np.ndarray) -> np.ndarray:
    """Vectorized even-odd point-in-polygon test for world points."""
    inside = np.zeros(px.shape, dtype=bool)
    n = len(verts)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        crosses = (y1 > py) != (y2 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = (x2 - x1) * (py - y1) / (y2 - y1) + x1
        inside ^= crosses & (px < xint)
    return inside


def supercover_cells(cmap: Costmap, x0: float, y0: float,
                     x1: float, y1: float) -> list[tuple[int, int]]:
    """All grid cells a world-frame segment passes through (Amanatides-Woo).

    Cells may fall outside the map; the caller decides how to treat them.
    """
    res = cmap.resolution
    ox, oy = cmap.origin
    gx0, gy0 = (x0 - ox) / res, (y0 - oy) / res
    gx1, gy1 = (x1 - ox) / res, (y1 - oy) / res
    ix, iy = int(math.floor(gx0)), int(math.floor(gy0))
    ix1, iy1 = int(math.floor(gx1)), int(math.floor(gy1))
    cells = [(ix, iy)]
    dx, dy = gx1 - gx0, gy1 - gy0
    step_x = 1 if dx > 0 else -1
    step_y = 1 if dy > 0 else -1
    t_max_x = math.inf if dx == 0 else (
        (ix + (step_x > 0)) - gx0) / dx
    t_max_y = math.inf if dy == 0 else (
        (iy + (step_y > 0)) - gy0) / dy
    t_delta_x = math.inf if dx == 0 else abs(1.0 / dx)
    t_delta_y = math.inf if dy == 0 else abs(1.0 / dy)
    # bounded walk; the +4 covers float slop at the endpoints
    limit = abs(ix1 - ix) + abs(iy1 - iy) + 4
    for _ in range(limit):
        if ix == ix1 and iy == iy1:
            break
        if t_max_x < t_max_y:
            ix += step_x
            t_max_x += t_delta_x
        else:
            iy += step_y
            t_max_y += t_delta_y
        cells.append((ix, iy))
    return cells


def polygon_cells(cmap: Costmap, verts_world: np.ndarray) -> list[tuple[int, int]]:
    """Cells covered by a world-frame polygon: every cell whose center is
    inside plus every cell crossed by an edge."""
    covered: set[tuple[int, int]] = set()
    n = len(verts_world)
    for i in range(n):
        x0, y0 = verts_world[i]
        x1, y1 = verts_world[(i + 1) % n]
        covered.update(supercover_cells(cmap, x0, y0, x1, y1))
    res = cmap.resolution
    ox, oy = cmap.origin
    min_ix = int(math.floor((verts_world[:, 0].min() - ox) / res))
    max_ix = int(math.floor((verts_world[:, 0].max() - ox) / res))
    min_iy = int(math.floor((verts_world[:, 1].min() - oy) / res))
    max_iy = int(math.floor((verts_world[:, 1].max() - oy) / res))
    ixs, iys = np.meshgrid(np.arange(min_ix, max_ix + 1),
                           np.arange(min_iy, max_iy + 1))
    cx = ox + (ixs + 0.5) * res
    cy = oy + (iys + 0.5) * res
    inside = _point_in_polygon(cx, cy, verts_world)
    covered.update(zip(ixs[inside].tolist(), iys[inside].tolist()))
    return sorted(covered)


def collision_check(cmap: Costmap, pose: PoseSE2, footprint: Footprint,
                    allow_unknown: bool = False) -> bool:
    """True iff the footprint at ``pose`` overlaps an obstacle.

    Circle footprints rely on the inflation contract: the cell is in
    collision when lethal or when its cost equals COST_MAX (i.e. within the
    inflated inscribed zone). Polygon footprints rasterize the transformed
    outline and interior and test every covered cell for lethality.
    Out-of-bounds poses are reported as collisions.
    """
    if not cmap.in_bounds_world(pose.x, pose.y):
        return True
    ix, iy = cmap.world_to_grid_unchecked(pose.x, pose.y)
    if isinstance(footprint, Circle):
        if cmap.is_lethal(ix, iy, allow_unknown):
            return True
        return cmap.cost_at(ix, iy) == COST_MAX
    # polygon: transform into world frame at the pose
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    verts = np.array([(pose.x + c * vx - s * vy, pose.y + s * vx + c * vy)
                      for vx, vy in footprint.vertices])
    for cix, ciy in polygon_cells(cmap, verts):
        if not cmap.in_bounds(cix, ciy):
            return True
        if cmap.is_lethal(cix, ciy, allow_unknown):
            return True
    return False
