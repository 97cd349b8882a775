"""Synthetic 32-road downtown grid used by the shipped reference scenario.

The street layout is a 4 x 3 grid of intersections (four north-south
streets crossing three east-west streets). Every block face is a two-way
street except two interior one-way links, which gives 32 directed road
segments. A segment may turn onto any segment leaving its downstream
intersection except the reverse of itself (no U-turns).

This is a made-up network of the right size, not a survey of real streets.
Roads 1..8 are the inlet roads and 9..16 the outlet roads; both sets sit on
the perimeter.
"""
from __future__ import annotations

from .graph import NoirGraph, build_graph

COLS, ROWS = 4, 3
ONE_WAY = {((1, 1), (2, 1)), ((2, 2), (2, 1))}  # kept direction of the one-way links


def _segments():
    links = []
    for y in range(ROWS):
        for x in range(COLS - 1):
            links.append(((x, y), (x + 1, y)))
    for x in range(COLS):
        for y in range(ROWS - 1):
            links.append(((x, y), (x, y + 1)))
    segs = []
    for a, b in links:
        for s in ((a, b), (b, a)):
            rev = (s[1], s[0])
            if rev in ONE_WAY:
                continue
            segs.append(s)
    return segs


def _on_perimeter(seg):
    (x0, y0), (x1, y1) = seg
    if y0 == y1:
        return y0 in (0, ROWS - 1)
    return x0 in (0, COLS - 1)


def _clockwise(seg):
    # perimeter walked clockwise with y pointing north: east along the top,
    # south down the right side, west along the bottom, north up the left
    (x0, y0), (x1, y1) = seg
    if y0 == y1 == ROWS - 1:
        return x1 > x0
    if y0 == y1 == 0:
        return x1 < x0
    if x0 == x1 == COLS - 1:
        return y1 < y0
    return y1 > y0


def reference_segments():
    """Directed segments ordered by road id (index 0 is road 1)."""
    segs = _segments()
    perim = [s for s in segs if _on_perimeter(s)]
    cw = [s for s in perim if _clockwise(s)]
    ccw = [s for s in perim if not _clockwise(s)]
    # 10 perimeter links per direction; skip two on each side, staggered
    inlets = [s for k, s in enumerate(cw) if k not in (4, 9)]
    outlets = [s for k, s in enumerate(ccw) if k not in (0, 5)]
    rest = [s for s in segs if s not in inlets and s not in outlets]
    return inlets + outlets + rest


def reference_edges(segs=None):
    segs = segs or reference_segments()
    edges = []
    for j, (a, b) in enumerate(segs):
        for i, (c, d) in enumerate(segs):
            if c == b and d != a:
                edges.append((j + 1, i + 1))
    return edges


def reference_graph() -> NoirGraph:
    segs = reference_segments()
    return build_graph(len(segs), reference_edges(segs), range(1, 9), range(9, 17))
