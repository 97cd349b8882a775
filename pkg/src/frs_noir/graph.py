"""Directed road-network graph with inlet/outlet boundary sets.

Road ids are 1-based at the public surface (``build_graph``, ``neighbors``,
``to_dict``) and 0-based in every array the rest of the package touches.
Edges are kept sorted by (from, to) so all the edges leaving one road form a
contiguous block; ``col_ptr`` indexes those blocks like a CSC matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GraphError(ValueError):
    """Base class for rejected graph definitions."""

    code = "GraphError"

    def __init__(self, road=None, message=""):
        self.road = road
        super().__init__(message or f"{self.code}({road})")


class SelfLoop(GraphError):
    code = "SelfLoop"


class DeadEndRoad(GraphError):
    code = "DeadEndRoad"


class OverlappingBoundary(GraphError):
    code = "OverlappingBoundary"


class IdOutOfRange(GraphError):
    code = "IdOutOfRange"


class DuplicateEdge(GraphError):
    code = "DuplicateEdge"


@dataclass(frozen=True, eq=False)
class NoirGraph:
    n: int
    src: np.ndarray  # 0-based origin road j of each edge
    dst: np.ndarray  # 0-based destination road i of each edge
    inlets: tuple[int, ...]  # 0-based
    outlets: tuple[int, ...]  # 0-based
    col_ptr: np.ndarray = field(repr=False)
    _in_edges: tuple = field(repr=False)

    @property
    def n_edges(self) -> int:
        return len(self.src)

    def out_edges(self, j: int) -> slice:
        """Slice into the edge arrays covering every edge leaving road ``j`` (0-based)."""
        return slice(self.col_ptr[j], self.col_ptr[j + 1])

    def out_neighbors(self, j: int) -> np.ndarray:
        return self.dst[self.out_edges(j)]

    def in_edges(self, i: int) -> np.ndarray:
        """Indices of the edges entering road ``i`` (0-based)."""
        return self._in_edges[i]

    def in_neighbors(self, i: int) -> np.ndarray:
        return self.src[self._in_edges[i]]

    def edge_list(self) -> list[tuple[int, int]]:
        """Edges as 1-based (from, to) pairs."""
        return [(int(j) + 1, int(i) + 1) for j, i in zip(self.src, self.dst)]

    def boundary_mask(self) -> np.ndarray:
        """+1 on inlets, -1 on outlets, 0 elsewhere."""
        sign = np.zeros(self.n)
        sign[list(self.inlets)] = 1.0
        sign[list(self.outlets)] = -1.0
        return sign

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "edges": [list(e) for e in self.edge_list()],
            "inlets": [r + 1 for r in self.inlets],
            "outlets": [r + 1 for r in self.outlets],
        }

    def same_structure(self, other: "NoirGraph") -> bool:
        return (
            self.n == other.n
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and self.inlets == other.inlets
            and self.outlets == other.outlets
        )


def _check_id(road, n):
    if isinstance(road, bool) or not isinstance(road, (int, np.integer)):
        raise IdOutOfRange(road, f"IdOutOfRange({road!r}): road ids must be integers")
    if not 1 <= road <= n:
        raise IdOutOfRange(road, f"IdOutOfRange({road}): valid ids are 1..{n}")
    return int(road)


def build_graph(n, edges, inlets=(), outlets=()) -> NoirGraph:
    """Validate a road network given with 1-based ids and index it.

    ``edges`` holds (from, to) pairs: traffic leaving road ``from`` may turn
    onto road ``to``. Every road needs at least one out-neighbor, since its
    turning fractions must sum to one. Roads without in-neighbors are allowed.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise GraphError(None, f"road count must be a positive integer, got {n!r}")
    n = int(n)
    seen = set()
    pairs = []
    for e in edges:
        if len(e) != 2:
            raise GraphError(None, f"edge {e!r} is not a (from, to) pair")
        j, i = _check_id(e[0], n), _check_id(e[1], n)
        if i == j:
            raise SelfLoop(i)
        if (j, i) in seen:
            raise DuplicateEdge((j, i), f"DuplicateEdge({j}, {i})")
        seen.add((j, i))
        pairs.append((j - 1, i - 1))

    ins = [_check_id(r, n) - 1 for r in inlets]
    outs = [_check_id(r, n) - 1 for r in outlets]
    overlap = sorted(set(ins) & set(outs))
    if overlap:
        raise OverlappingBoundary(overlap[0] + 1)

    pairs.sort()
    src = np.array([p[0] for p in pairs], dtype=np.intp)
    dst = np.array([p[1] for p in pairs], dtype=np.intp)
    counts = np.bincount(src, minlength=n)
    dead = np.flatnonzero(counts == 0)
    if dead.size:
        raise DeadEndRoad(int(dead[0]) + 1)
    col_ptr = np.concatenate(([0], np.cumsum(counts))).astype(np.intp)
    in_edges = tuple(np.flatnonzero(dst == i) for i in range(n))
    src.setflags(write=False)
    dst.setflags(write=False)
    col_ptr.setflags(write=False)
    return NoirGraph(
        n=n,
        src=src,
        dst=dst,
        inlets=tuple(sorted(set(ins))),
        outlets=tuple(sorted(set(outs))),
        col_ptr=col_ptr,
        _in_edges=in_edges,
    )


def graph_from_dict(doc: dict) -> NoirGraph:
    return build_graph(doc["n"], doc["edges"], doc.get("inlets", ()), doc.get("outlets", ()))


def neighbors(g: NoirGraph, road: int, direction: str = "out") -> set[int]:
    """1-based in- or out-neighbor set of ``road``."""
    r = _check_id(road, g.n) - 1
    if direction == "out":
        nb = g.out_neighbors(r)
    elif direction == "in":
        nb = g.in_neighbors(r)
    else:
        raise ValueError(f"direction must be 'in' or 'out', got {direction!r}")
    return {int(v) + 1 for v in nb}
