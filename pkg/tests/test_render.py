"""Renderer tests: deterministic byte output, correct cell placement and
y-axis flip, and the PPM fallback format."""

import numpy as np

from gridplan.costmap import Costmap, LETHAL, UNKNOWN
from gridplan.render import render, render_ppm, render_svg


def tiny_map():
    cells = np.zeros((3, 4), dtype=np.uint8)
    cells[0, 1] = LETHAL      # bottom row in world coordinates
    cells[2, 3] = UNKNOWN     # top-right in world coordinates
    cells[1, 2] = 127         # mid-cost cell
    return Costmap(cells, 0.5, (0.0, 0.0))


def test_svg_deterministic_and_well_formed():
    m = tiny_map()
    path = [(0.25, 0.25), (1.75, 1.25)]
    a = render_svg(m, [("p", path)])
    b = render_svg(m, [("p", path)])
    assert a == b
    assert a.startswith("<svg ") and a.rstrip().endswith("</svg>")
    assert 'width="4" height="3"' in a


def test_svg_cell_placement_and_flip():
    m = tiny_map()
    svg = render_svg(m, [])
    # lethal cell (ix=1, iy=0) renders at svg y = height - iy - 1 = 2
    assert '<rect x="1" y="2" width="1" height="1" fill="#000000"/>' in svg
    # unknown cell (ix=3, iy=2) renders at svg y = 0
    assert 'x="3" y="0" width="1" height="1" fill="#9070a0"' in svg
    # soft cell gets a gray shade, not black or white
    assert svg.count("#000000") == 1


def test_svg_path_coordinates_flipped():
    m = tiny_map()
    svg = render_svg(m, [("p", [(0.25, 0.25), (0.25, 1.25)])])
    # world (0.25, 0.25) is cell units (0.5, 0.5) -> svg y = 3 - 0.5 = 2.5
    assert 'points="0.500,2.500 0.500,0.500"' in svg


def test_svg_run_length_merging():
    cells = np.zeros((1, 5), dtype=np.uint8)
    cells[0, 1:4] = LETHAL
    m = Costmap(cells, 1.0, (0.0, 0.0))
    svg = render_svg(m, [])
    assert '<rect x="1" y="0" width="3" height="1" fill="#000000"/>' in svg


def test_ppm_format_and_path_pixels():
    m = tiny_map()
    data = render_ppm(m, [("p", [(0.25, 1.25), (1.75, 1.25)])])
    header = b"P6\n4 3\n255\n"
    assert data.startswith(header)
    img = np.frombuffer(data[len(header):], dtype=np.uint8).reshape(3, 4, 3)
    # the path runs along world row iy=2, which is image row 0
    assert tuple(img[0, 0]) == (0xD6, 0x27, 0x28)
    # lethal cell (ix=1, iy=0) is black at image row 2
    assert tuple(img[2, 1]) == (0, 0, 0)


def test_render_dispatches_on_extension(tmp_path):
    m = tiny_map()
    svg_path = tmp_path / "out.svg"
    ppm_path = tmp_path / "out.ppm"
    render(m, [], str(svg_path))
    render(m, [], str(ppm_path))
    assert svg_path.read_text().startswith("<svg ")
    assert ppm_path.read_bytes().startswith(b"P6\n")
