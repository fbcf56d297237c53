"""Hex math against independent oracles: BFS distances, a second Dijkstra."""

import random
from collections import deque

import pytest

from hexarena.hexes import (
    AxialCoord,
    HexCoord,
    axial_to_offset,
    cells_within,
    find_path,
    hex_distance,
    hex_line,
    line_of_sight,
    neighbors,
    offset_to_axial,
    reachable,
)

W = H = 15


def all_coords(w=W, h=H):
    return [HexCoord(c, r) for r in range(h) for c in range(w)]


def bfs_steps(start, w=W, h=H):
    """Unweighted shortest step counts from start to every cell."""
    dist = {start: 0}
    q = deque([start])
    while q:
        cur = q.popleft()
        for n in neighbors(cur, w, h):
            if n not in dist:
                dist[n] = dist[cur] + 1
                q.append(n)
    return dist


def test_origin_maps_to_axial_origin():
    assert offset_to_axial(HexCoord(0, 0)) == AxialCoord(0, 0)


def test_offset_axial_round_trip_is_identity():
    for c in all_coords():
        assert axial_to_offset(offset_to_axial(c)) == c


def test_round_trip_specific_cell():
    c = HexCoord(4, 4)
    assert axial_to_offset(offset_to_axial(c)) == c


def test_all_offset_neighbors_have_axial_distance_one():
    for c in all_coords():
        for n in neighbors(c, W, H):
            assert hex_distance(c, n) == 1


def test_distance_identity_and_adjacency():
    a = HexCoord(7, 7)
    assert hex_distance(a, a) == 0
    for n in neighbors(a, W, H):
        assert hex_distance(a, n) == 1


def test_distance_equals_bfs_for_all_pairs():
    coords = all_coords()
    for start in coords:
        oracle = bfs_steps(start)
        for goal in coords:
            assert hex_distance(start, goal) == oracle[goal], (start, goal)


def test_distance_triangle_inequality_random_triples():
    rng = random.Random(171)
    for _ in range(10_000):
        a, b, c = (
            HexCoord(rng.randrange(W), rng.randrange(H)) for _ in range(3)
        )
        assert hex_distance(a, c) <= hex_distance(a, b) + hex_distance(b, c)
        assert hex_distance(a, b) == hex_distance(b, a)


def test_interior_cell_has_six_neighbors():
    ns = neighbors(HexCoord(7, 7), W, H)
    assert len(ns) == 6
    assert all(hex_distance(HexCoord(7, 7), n) == 1 for n in ns)


def test_corner_neighbor_counts_under_convention():
    # Corner degree is fixed by the even-q parity convention.
    assert len(neighbors(HexCoord(0, 0), W, H)) == 3
    assert 2 <= len(neighbors(HexCoord(W - 1, 0), W, H)) <= 3
    assert 2 <= len(neighbors(HexCoord(0, H - 1), W, H)) <= 3


def test_neighbor_relation_is_symmetric():
    for c in all_coords():
        for n in neighbors(c, W, H):
            assert c in neighbors(n, W, H)


def test_every_cell_returns_only_in_bounds_neighbors():
    for c in all_coords():
        for n in neighbors(c, W, H):
            assert 0 <= n.col < W and 0 <= n.row < H


def test_line_endpoints_and_length():
    a, b = HexCoord(2, 3), HexCoord(10, 11)
    line = hex_line(a, b)
    assert line[0] == a and line[-1] == b
    assert len(line) == hex_distance(a, b) + 1
    for prev, cur in zip(line, line[1:]):
        assert hex_distance(prev, cur) == 1


def test_los_trivial_cases():
    blocks_all = lambda c: True
    assert line_of_sight(HexCoord(4, 4), HexCoord(4, 4), blocks_all)
    a = HexCoord(4, 4)
    for n in neighbors(a, W, H):
        assert line_of_sight(a, n, blocks_all)


def test_los_blocked_by_single_interior_cell():
    a, b = HexCoord(3, 5), HexCoord(5, 6)
    interior = hex_line(a, b)[1:-1]
    assert interior, "fixture needs a non-adjacent pair"
    ridge = {interior[0]}
    assert not line_of_sight(a, b, lambda c: c in ridge)
    assert line_of_sight(a, b, lambda c: False)


def test_los_symmetric_under_random_blockers():
    rng = random.Random(99)
    blocked = {HexCoord(rng.randrange(W), rng.randrange(H)) for _ in range(60)}
    blocks = lambda c: c in blocked
    coords = all_coords()
    for _ in range(2_000):
        a = rng.choice(coords)
        b = rng.choice(coords)
        assert line_of_sight(a, b, blocks) == line_of_sight(b, a, blocks)


# --- pathfinding ------------------------------------------------------------


def grid_cost_fn(costs):
    """costs: dict coord -> cost or None (impassable); everything else None."""

    def entry(c):
        return costs.get(c)

    return entry


def uniform_cost_fn(w=W, h=H, cost=1):
    def entry(c):
        if 0 <= c.col < w and 0 <= c.row < h:
            return cost
        return None

    return entry


def oracle_dijkstra(start, goal, entry, w=W, h=H):
    """Independent dense Dijkstra over the grid, no heap: O(n^2) scan."""
    INF = float("inf")
    dist = {c: INF for c in all_coords(w, h)}
    dist[start] = 0
    visited = set()
    while True:
        cur, best = None, INF
        for c, d in dist.items():
            if c not in visited and d < best:
                cur, best = c, d
        if cur is None:
            return None
        if cur == goal:
            return best
        visited.add(cur)
        for n in neighbors(cur, w, h):
            step = entry(n)
            if step is None:
                continue
            if best + step < dist[n]:
                dist[n] = best + step

    return None


def test_adjacent_goal_cost_one_within_budget():
    start = HexCoord(7, 7)
    goal = neighbors(start, W, H)[0]
    path = find_path(start, goal, uniform_cost_fn(), budget=1)
    assert path is not None
    assert path.steps == (goal,)
    assert path.total_cost == 1


def test_adjacent_expensive_goal_exceeds_budget():
    start = HexCoord(7, 7)
    goal = neighbors(start, W, H)[0]
    path = find_path(start, goal, uniform_cost_fn(cost=2), budget=1)
    assert path is None


def test_path_cost_matches_independent_dijkstra_on_random_maps():
    rng = random.Random(4242)
    for trial in range(25):
        costs = {}
        for c in all_coords():
            roll = rng.random()
            if roll < 0.15:
                costs[c] = None  # impassable
            else:
                costs[c] = rng.choice([1, 1, 2, 2, 3])
        entry = grid_cost_fn(costs)
        start, goal = rng.sample(all_coords(), 2)
        path = find_path(start, goal, entry, budget=None)
        expected = oracle_dijkstra(start, goal, entry)
        if expected is None or expected == float("inf"):
            assert path is None
        else:
            assert path is not None, (trial, start, goal)
            assert path.total_cost == expected
            # step validity: adjacency, accumulated cost, no impassables
            prev = start
            acc = 0
            for step in path.steps:
                assert hex_distance(prev, step) == 1
                assert costs[step] is not None
                acc += costs[step]
                prev = step
            assert acc == path.total_cost


def test_path_never_exceeds_budget_and_never_enters_impassable():
    rng = random.Random(7)
    for _ in range(50):
        costs = {c: (None if rng.random() < 0.2 else rng.choice([1, 2, 3])) for c in all_coords()}
        entry = grid_cost_fn(costs)
        start, goal = rng.sample(all_coords(), 2)
        budget = rng.choice([1, 2, 3, 5, 8])
        path = find_path(start, goal, entry, budget=budget)
        if path is not None:
            assert path.total_cost <= budget
            assert all(costs[s] is not None for s in path.steps)


def test_find_path_rejects_equal_endpoints():
    with pytest.raises(ValueError):
        find_path(HexCoord(1, 1), HexCoord(1, 1), uniform_cost_fn())


def test_reachable_matches_budgeted_paths():
    rng = random.Random(88)
    costs = {c: rng.choice([1, 2]) for c in all_coords()}
    entry = grid_cost_fn(costs)
    start = HexCoord(7, 7)
    budget = 3
    cells = dict(reachable(start, entry, budget))
    assert start not in cells
    for cell, cost in cells.items():
        path = find_path(start, cell, entry, budget=budget)
        assert path is not None and path.total_cost == cost
    # anything reportedly unreachable really needs more budget
    for cell in all_coords():
        if cell != start and cell not in cells:
            assert find_path(start, cell, entry, budget=budget) is None


def test_cells_within_radius():
    center = HexCoord(7, 7)
    disk = cells_within(center, 2, W, H)
    assert len(disk) == 19  # 1 + 6 + 12, fully interior
    assert all(hex_distance(center, c) <= 2 for c in disk)
    rim = [c for c in all_coords() if hex_distance(center, c) == 3]
    assert all(c not in disk for c in rim)
