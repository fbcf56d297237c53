"""Hexagonal grid mathematics.

The board uses flat-topped hexes addressed by even-q offset coordinates
``(col, row)``: col increases to the right, row increases upward, and even
columns are the vertically shifted ones. All distance and line math round-trips
through axial/cube coordinates:

    q = col
    r = row - (col + (col % 2)) // 2

Neighbor offsets are derived from that conversion rather than hand-written
tables, so adjacency, distance, and pathfinding can never disagree with each
other. Every function here is pure and safe to call from any thread.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

Cost = float
EntryCostFn = Callable[["HexCoord"], Optional[Cost]]
BlocksFn = Callable[["HexCoord"], bool]


@dataclass(frozen=True, order=True)
class HexCoord:
    """Board position in even-q offset coordinates."""

    col: int
    row: int

    def as_dict(self) -> dict:
        return {"col": self.col, "row": self.row}


@dataclass(frozen=True)
class AxialCoord:
    """Axial form of a board position; used for distance and line math."""

    q: int
    r: int


# Flat-top axial direction ring, starting east and winding counter-clockwise.
AXIAL_DIRECTIONS = ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1))


def offset_to_axial(c: HexCoord) -> AxialCoord:
    return AxialCoord(q=c.col, r=c.row - (c.col + (c.col % 2)) // 2)


def axial_to_offset(a: AxialCoord) -> HexCoord:
    return HexCoord(col=a.q, row=a.r + (a.q + (a.q % 2)) // 2)


def _cube(c: HexCoord) -> tuple[int, int, int]:
    a = offset_to_axial(c)
    return a.q, -a.q - a.r, a.r


def hex_distance(a: HexCoord, b: HexCoord) -> int:
    """Minimum number of adjacency steps between two cells."""
    ax, ay, az = _cube(a)
    bx, by, bz = _cube(b)
    return max(abs(ax - bx), abs(ay - by), abs(az - bz))


def in_bounds(c: HexCoord, width: int, height: int) -> bool:
    return 0 <= c.col < width and 0 <= c.row < height


def neighbors(c: HexCoord, width: int, height: int) -> list[HexCoord]:
    """In-bounds cells adjacent to ``c``, in a fixed direction order."""
    a = offset_to_axial(c)
    out = []
    for dq, dr in AXIAL_DIRECTIONS:
        n = axial_to_offset(AxialCoord(a.q + dq, a.r + dr))
        if in_bounds(n, width, height):
            out.append(n)
    return out


def _cube_round(x: float, y: float, z: float) -> tuple[int, int, int]:
    # Half-way ties round x down and y/z up; the coordinate with the largest
    # rounding error is then recomputed (x preferred on equal errors) so the
    # cube constraint x+y+z=0 holds. Any consistent rule works; this one is
    # pinned for replay determinism.
    rx = math.ceil(x - 0.5)
    ry = math.floor(y + 0.5)
    rz = math.floor(z + 0.5)
    dx, dy, dz = abs(rx - x), abs(ry - y), abs(rz - z)
    if dx >= dy and dx >= dz:
        rx = -ry - rz
    elif dy >= dz:
        ry = -rx - rz
    else:
        rz = -rx - ry
    return rx, ry, rz


def hex_line(a: HexCoord, b: HexCoord) -> list[HexCoord]:
    """Cells of the interpolated hex line from a to b, endpoints included."""
    n = hex_distance(a, b)
    if n == 0:
        return [a]
    ax, ay, az = _cube(a)
    bx, by, bz = _cube(b)
    cells = []
    for i in range(n + 1):
        t = i / n
        rx, ry, rz = _cube_round(
            ax + (bx - ax) * t, ay + (by - ay) * t, az + (bz - az) * t
        )
        cells.append(axial_to_offset(AxialCoord(rx, rz)))
    return cells


def line_of_sight(a: HexCoord, b: HexCoord, blocks: BlocksFn) -> bool:
    """True when no interior cell of the a-b hex line blocks vision.

    Endpoints never block themselves. The line is always drawn from the
    lexicographically smaller endpoint, which makes the result symmetric in
    (a, b) regardless of rounding ties.
    """
    if a == b or hex_distance(a, b) == 1:
        return True
    lo, hi = (a, b) if (a.col, a.row) <= (b.col, b.row) else (b, a)
    for cell in hex_line(lo, hi)[1:-1]:
        if blocks(cell):
            return False
    return True


@dataclass(frozen=True)
class Path:
    """A movement path: steps exclude the start cell and include the goal."""

    steps: tuple[HexCoord, ...]
    total_cost: Cost


def _dijkstra(
    start: HexCoord, entry_cost: EntryCostFn, budget: Optional[Cost], goal: Optional[HexCoord]
) -> tuple[dict[HexCoord, Cost], dict[HexCoord, HexCoord]]:
    """Shared Dijkstra core. entry_cost(cell) -> cost, or None for impassable.

    Out-of-bounds cells must be reported impassable by entry_cost; the search
    itself does not know the grid size. Equal-cost frontier entries pop in
    (cost, col, row) order and the first settled predecessor is kept, so the
    resulting paths are deterministic.
    """
    dist: dict[HexCoord, Cost] = {start: 0}
    parent: dict[HexCoord, HexCoord] = {}
    frontier: list[tuple[Cost, int, int]] = [(0, start.col, start.row)]
    settled: set[HexCoord] = set()
    while frontier:
        d, col, row = heapq.heappop(frontier)
        node = HexCoord(col, row)
        if node in settled:
            continue
        settled.add(node)
        if goal is not None and node == goal:
            break
        a = offset_to_axial(node)
        for dq, dr in AXIAL_DIRECTIONS:
            nxt = axial_to_offset(AxialCoord(a.q + dq, a.r + dr))
            if nxt in settled:
                continue
            step = entry_cost(nxt)
            if step is None:
                continue
            nd = d + step
            if budget is not None and nd > budget:
                continue
            if nxt not in dist or nd < dist[nxt]:
                dist[nxt] = nd
                parent[nxt] = node
                heapq.heappush(frontier, (nd, nxt.col, nxt.row))
    return dist, parent


def find_path(
    start: HexCoord,
    goal: HexCoord,
    entry_cost: EntryCostFn,
    budget: Optional[Cost] = None,
) -> Optional[Path]:
    """Minimum-cost path from start to goal, or None.

    Cost is charged on tile entry; the start tile is free. Returns None when
    no path exists or the cheapest path exceeds ``budget``. Ties between
    equal-cost paths break on (cost, col, row) of the settled cells.
    """
    if start == goal:
        raise ValueError("start and goal must differ")
    dist, parent = _dijkstra(start, entry_cost, budget, goal)
    if goal not in dist:
        return None
    steps: list[HexCoord] = []
    node = goal
    while node != start:
        steps.append(node)
        node = parent[node]
    steps.reverse()
    return Path(steps=tuple(steps), total_cost=dist[goal])


def reachable(
    start: HexCoord, entry_cost: EntryCostFn, budget: Cost
) -> list[tuple[HexCoord, Cost]]:
    """All cells reachable from start within budget, with their path costs.

    Excludes the start cell itself; sorted by (col, row).
    """
    dist, _ = _dijkstra(start, entry_cost, budget, goal=None)
    del dist[start]
    return sorted(dist.items(), key=lambda kv: (kv[0].col, kv[0].row))


def cells_within(center: HexCoord, radius: int, width: int, height: int) -> list[HexCoord]:
    """In-bounds cells at hex distance <= radius from center, (col,row) sorted."""
    cq, _, cr = _cube(center)
    out = []
    for dq in range(-radius, radius + 1):
        for dr in range(max(-radius, -dq - radius), min(radius, -dq + radius) + 1):
            cell = axial_to_offset(AxialCoord(cq + dq, cr + dr))
            if in_bounds(cell, width, height):
                out.append(cell)
    return sorted(out, key=lambda c: (c.col, c.row))


def all_cells(width: int, height: int) -> Iterable[HexCoord]:
    for row in range(height):
        for col in range(width):
            yield HexCoord(col, row)
