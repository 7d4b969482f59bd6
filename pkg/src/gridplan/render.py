"""Deterministic map + path rendering to SVG (and binary PPM fallback).

The SVG uses one user unit per grid cell, grayscale cost shading quantized
to 16 levels with run-length-merged rectangles, black lethal cells, and a
distinct stroked polyline per path with a small legend. Byte output is a
pure function of the inputs (fixed number formatting, no timestamps).
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .costmap import COST_MAX, LETHAL, UNKNOWN, Costmap, supercover_cells

PATH_COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#ff7f0e",
               "#9467bd", "#8c564b", "#17becf", "#e377c2")
UNKNOWN_COLOR = "#9070a0"
SHADE_LEVELS = 16


def _shade(cost: int) -> str:
    """Grayscale fill for a soft-cost cell: white (free) to dark gray."""
    level = (cost * SHADE_LEVELS) // (COST_MAX + 1)  # 0..15
    gray = 245 - level * 13
    return f"#{gray:02x}{gray:02x}{gray:02x}"


def _cell_fill(cost: int) -> str | None:
    if cost == LETHAL:
        return "#000000"
    if cost == UNKNOWN:
        return UNKNOWN_COLOR
    if cost == 0:
        return None  # background
    return _shade(cost)


def _path_points(cmap: Costmap, item) -> list[tuple[float, float]]:
    """World points of a path-like object in cell units, y flipped for SVG."""
    if hasattr(item, "poses"):
        pts = [(p.x, p.y) for p in item.poses]
    else:
        pts = [(float(x), float(y)) for x, y, *_ in item]
    ox, oy = cmap.origin
    res = cmap.resolution
    return [((x - ox) / res, cmap.height - (y - oy) / res) for x, y in pts]


def render_svg(cmap: Costmap, paths: Sequence[tuple[str, object]]) -> str:
    """SVG document text for a map with overlaid paths.

    ``paths`` is a sequence of (label, path) where path is either a
    planner Path or an iterable of (x, y, ...) world coordinates.
    """
    w, h = cmap.width, cmap.height
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" '
           f'height="{h}" viewBox="0 0 {w} {h}">',
           f'<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>']
    cells = cmap.cells
    for iy in range(h - 1, -1, -1):
        row = cells[iy]
        sy = h - iy - 1
        ix = 0
        while ix < w:
            fill = _cell_fill(int(row[ix]))
            if fill is None:
                ix += 1
                continue
            run = ix + 1
            while run < w and _cell_fill(int(row[run])) == fill:
                run += 1
            out.append(f'<rect x="{ix}" y="{sy}" width="{run - ix}" '
                       f'height="1" fill="{fill}"/>')
            ix = run
    for i, (label, item) in enumerate(paths):
        color = PATH_COLORS[i % len(PATH_COLORS)]
        pts = _path_points(cmap, item)
        coords = " ".join(f"{x:.3f},{y:.3f}" for x, y in pts)
        out.append(f'<polyline points="{coords}" fill="none" '
                   f'stroke="{color}" stroke-width="0.8" '
                   f'stroke-linejoin="round" stroke-linecap="round"/>')
    for i, (label, _item) in enumerate(paths):
        color = PATH_COLORS[i % len(PATH_COLORS)]
        y = 4.0 + 4.0 * i
        out.append(f'<rect x="1.0" y="{y - 1.5:.1f}" width="3.0" '
                   f'height="1.5" fill="{color}"/>')
        out.append(f'<text x="5.0" y="{y:.1f}" font-size="3" '
                   f'font-family="monospace" fill="#202020">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_ppm(cmap: Costmap, paths: Sequence[tuple[str, object]]) -> bytes:
    """Binary P6 image: grayscale costs with paths burned in as colors."""
    h, w = cmap.height, cmap.width
    img = np.empty((h, w, 3), dtype=np.uint8)
    cells = cmap.cells
    gray = np.where(cells == 0, 255,
                    245 - (cells.astype(np.int32) * SHADE_LEVELS
                           // (COST_MAX + 1)) * 13).astype(np.uint8)
    gray[cells == LETHAL] = 0
    img[:] = gray[::-1, :, None]
    unk = (cells == UNKNOWN)[::-1]
    img[unk] = (144, 112, 160)
    for i, (_label, item) in enumerate(paths):
        rgb = PATH_COLORS[i % len(PATH_COLORS)]
        color = tuple(int(rgb[j:j + 2], 16) for j in (1, 3, 5))
        if hasattr(item, "poses"):
            pts = [(p.x, p.y) for p in item.poses]
        else:
            pts = [(float(x), float(y)) for x, y, *_ in item]
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            for ix, iy in supercover_cells(cmap, x0, y0, x1, y1):
                if cmap.in_bounds(ix, iy):
                    img[h - iy - 1, ix] = color
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    return header + img.tobytes()


def render(cmap: Costmap, paths: Iterable[tuple[str, object]],
           out_path: str) -> None:
    """Write an SVG (default) or PPM (``.ppm`` extension) rendering."""
    paths = list(paths)
    if out_path.endswith(".ppm"):
        with open(out_path, "wb") as f:
            f.write(render_ppm(cmap, paths))
    else:
        with open(out_path, "w", encoding="ascii") as f:
            f.write(render_svg(cmap, paths))
