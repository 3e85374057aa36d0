import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vbm.grid import (Cell, MapParseError, OccupancyGrid, neighbors8, parse_movingai_map,
                      parse_pgm, to_movingai)


def header(h, w):
    return f"type octile\nheight {h}\nwidth {w}\nmap\n"


def test_char_mapping():
    g = parse_movingai_map(header(2, 2) + ".@\n..\n")
    assert (g.width, g.height) == (2, 2)
    assert [c for c in [(0, 0), (1, 0), (0, 1), (1, 1)] if g.is_occupied(c)] == [(1, 0)]


def test_terrain_classes():
    g = parse_movingai_map(header(1, 7) + ".GS@OTW\n")
    assert g.occupied[0].tolist() == [False, False, False, True, True, True, True]


def test_short_row_reports_line():
    with pytest.raises(MapParseError) as err:
        parse_movingai_map(header(2, 2) + "..\n.\n")
    assert err.value.lineno == 6


@pytest.mark.parametrize("text, line", [
    ("type octile\nheight x\nwidth 2\nmap\n..\n", 4),
    ("height 2\nwidth 2\nmap\n..\n..\n", 1),
    ("type octile\nheight 2\nwidth 2\n", 4),
    (header(2, 2) + "..\n", 6),
    (header(1, 2) + "..\n..\n", 6),
    (header(1, 2) + ".x\n", 5),
])
def test_parse_errors(text, line):
    with pytest.raises(MapParseError) as err:
        parse_movingai_map(text)
    assert err.value.lineno == line
    assert f"line {line}" in str(err.value)


def pgm_p5(values, w, h, maxval=255):
    return f"P5\n# comment\n{w} {h}\n{maxval}\n".encode() + bytes(values)


def test_pgm_all_free_and_all_occupied():
    assert parse_pgm(pgm_p5([255] * 9, 3, 3)).free_count == 9
    assert parse_pgm(pgm_p5([0] * 9, 3, 3)).free_count == 0


def test_pgm_checkerboard():
    vals = [0 if (x + y) % 2 == 0 else 255 for y in range(3) for x in range(4)]
    g = parse_pgm(pgm_p5(vals, 4, 3))
    expect = np.array([[(x + y) % 2 == 0 for x in range(4)] for y in range(3)])
    assert np.array_equal(g.occupied, expect)


def test_pgm_ascii_and_threshold():
    data = b"P2\n2 2\n255\n0 100\n200 255\n"
    assert parse_pgm(data).occupied.tolist() == [[True, True], [False, False]]
    assert parse_pgm(data, threshold=50).occupied.tolist() == [[True, False], [False, False]]


def test_pgm_16bit_rescaled():
    data = b"P5\n2 1\n65535\n" + bytes([0x00, 0x10, 0xFF, 0xFF])
    assert parse_pgm(data).occupied.tolist() == [[True, False]]


@pytest.mark.parametrize("data", [b"P6\n1 1\n255\n\0\0\0", b"xx", b"P5\n3 3\n255\n\xff\xff", b"P2\n2 2\n255\n1 2 3"])
def test_pgm_errors(data):
    with pytest.raises(MapParseError):
        parse_pgm(data)


def test_neighbors_interior_and_corner():
    g = OccupancyGrid.empty(5, 5)
    assert len(neighbors8(g, (2, 2))) == 8
    assert sorted(neighbors8(g, (0, 0))) == [(0, 1), (1, 0), (1, 1)]


def test_no_corner_cut():
    g = OccupancyGrid.from_strings([".@", "@."])
    assert (1, 1) not in neighbors8(g, (0, 0), no_corner_cut=True)
    assert neighbors8(g, (0, 0), no_corner_cut=False) == [Cell(1, 1)]
    # one occupied orthogonal cell does not block the diagonal
    g = OccupancyGrid.from_strings([".@", ".."])
    assert Cell(1, 1) in neighbors8(g, (0, 0))


def test_grid_is_immutable():
    g = OccupancyGrid.empty(2, 2)
    with pytest.raises(ValueError):
        g.occupied[0, 0] = True


grids = st.integers(1, 12).flatmap(
    lambda w: st.lists(st.text(alphabet=".GS@OTW", min_size=w, max_size=w), min_size=1, max_size=12))


@settings(max_examples=100, deadline=None)
@given(grids)
def test_roundtrip(rows):
    g = parse_movingai_map(header(len(rows), len(rows[0])) + "\n".join(rows))
    again = parse_movingai_map(to_movingai(g))
    assert again == g
    assert np.array_equal(g.occupied, np.array([[ch in "@OTW" for ch in r] for r in rows]))


@settings(max_examples=100, deadline=None)
@given(grids, st.data())
def test_neighbors_property(rows, data):
    g = OccupancyGrid.from_strings(rows)
    p = (data.draw(st.integers(0, g.width - 1)), data.draw(st.integers(0, g.height - 1)))
    out = neighbors8(g, p)
    assert len(out) <= 8
    assert all(g.is_free(c) and max(abs(c.x - p[0]), abs(c.y - p[1])) == 1 for c in out)
