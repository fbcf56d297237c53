"""Procedural terrain: gradient noise elevation bands, hex cellular-automata
smoothing, connectivity repair, and 180-degree mirror symmetrization.

All randomness flows from named child streams of the caller's seed, so a
(seed, params) pair always produces the identical grid.
"""

from __future__ import annotations

import math
from collections import Counter, deque

from .errors import DegenerateMap
from .hexes import HexCoord, hex_distance, hex_line, neighbors
from .scenario import MapParams, Terrain, rng_stream
from .world import TerrainGrid


class GradientNoise:
    """Classic 2D gradient ("Perlin-style") noise over a seeded lattice."""

    _GRADS = [
        (math.cos(k * math.pi / 4.0), math.sin(k * math.pi / 4.0)) for k in range(8)
    ]

    def __init__(self, seed: int):
        rng = rng_stream(seed, "mapgen:permutation")
        perm = list(range(256))
        rng.shuffle(perm)
        self._perm = perm + perm

    @staticmethod
    def _fade(t: float) -> float:
        return t * t * t * (t * (t * 6 - 15) + 10)

    def _grad_dot(self, ix: int, iy: int, dx: float, dy: float) -> float:
        g = self._GRADS[self._perm[self._perm[ix & 255] + (iy & 255)] & 7]
        return g[0] * dx + g[1] * dy

    def sample(self, x: float, y: float) -> float:
        x0, y0 = math.floor(x), math.floor(y)
        fx, fy = x - x0, y - y0
        u, v = self._fade(fx), self._fade(fy)
        n00 = self._grad_dot(x0, y0, fx, fy)
        n10 = self._grad_dot(x0 + 1, y0, fx - 1, fy)
        n01 = self._grad_dot(x0, y0 + 1, fx, fy - 1)
        n11 = self._grad_dot(x0 + 1, y0 + 1, fx - 1, fy - 1)
        top = n00 + u * (n10 - n00)
        bot = n01 + u * (n11 - n01)
        return top + v * (bot - top)


def _band_targets(n: int, params: MapParams) -> dict[Terrain, int]:
    """Cell counts per elevation band, low to high."""
    water = int(params.water_fraction * n)
    forest = int(params.forest_fraction * n)
    hill = int(params.hill_fraction * n)
    mountain = int(params.mountain_fraction * n)
    plain = n - water - forest - hill - mountain
    if plain < 0:
        raise DegenerateMap("terrain fractions exceed 1.0")
    return {
        Terrain.WATER: water,
        Terrain.PLAIN: plain,
        Terrain.FOREST: forest,
        Terrain.HILL: hill,
        Terrain.MOUNTAIN: mountain,
    }


def _assign_bands(width: int, height: int, seed: int, params: MapParams) -> list[Terrain]:
    noise = GradientNoise(seed)
    jitter = rng_stream(seed, "mapgen:jitter")
    ox, oy = jitter.uniform(0, 64), jitter.uniform(0, 64)
    values = []
    for row in range(height):
        for col in range(width):
            v = noise.sample(ox + col * params.noise_scale, oy + row * params.noise_scale)
            values.append((v, col, row))
    ranked = sorted(values)  # ties resolved by (col, row)
    targets = _band_targets(width * height, params)
    tiles = [Terrain.PLAIN] * (width * height)
    i = 0
    for band in (Terrain.WATER, Terrain.PLAIN, Terrain.FOREST, Terrain.HILL, Terrain.MOUNTAIN):
        for _ in range(targets[band]):
            _, col, row = ranked[i]
            tiles[row * width + col] = band
            i += 1
    return tiles


def _smooth_pass(tiles: list[Terrain], width: int, height: int) -> list[Terrain]:
    """Majority rule over the 6 hex neighbors; the current tag wins ties."""
    order = [Terrain.WATER, Terrain.PLAIN, Terrain.FOREST, Terrain.HILL, Terrain.MOUNTAIN]
    out = list(tiles)
    for row in range(height):
        for col in range(width):
            cur = tiles[row * width + col]
            counts = Counter(
                tiles[n.row * width + n.col] for n in neighbors(HexCoord(col, row), width, height)
            )
            best = max(counts.values())
            winners = [t for t in order if counts.get(t, 0) == best]
            out[row * width + col] = cur if cur in winners else winners[0]
    return out


def _land_components(tiles: list[Terrain], width: int, height: int) -> list[list[HexCoord]]:
    seen: set[HexCoord] = set()
    components = []
    for row in range(height):
        for col in range(width):
            c = HexCoord(col, row)
            if tiles[row * width + col] is Terrain.WATER or c in seen:
                continue
            comp = []
            queue = deque([c])
            seen.add(c)
            while queue:
                cur = queue.popleft()
                comp.append(cur)
                for n in neighbors(cur, width, height):
                    if n not in seen and tiles[n.row * width + n.col] is not Terrain.WATER:
                        seen.add(n)
                        queue.append(n)
            components.append(comp)
    # largest first; stable ordering on the anchor cell for determinism
    return sorted(components, key=lambda comp: (-len(comp), min((c.col, c.row) for c in comp)))


def _carve_bridges(
    tiles: list[Terrain], width: int, height: int, mirror: bool
) -> list[Terrain]:
    """Turn water into plain along hex lines until the land is one component.

    With ``mirror`` set, every carved cell's 180-degree image is carved too so
    an already-symmetric grid stays symmetric.
    """
    tiles = list(tiles)
    for _ in range(width * height):
        components = _land_components(tiles, width, height)
        if len(components) <= 1:
            return tiles
        anchor, minor = components[0], components[1]
        _, _, _, _, _, src, dst = min(
            (hex_distance(a, b), a.col, a.row, b.col, b.row, a, b)
            for a in minor
            for b in anchor
        )
        for cell in hex_line(src, dst):
            idx = cell.row * width + cell.col
            if tiles[idx] is Terrain.WATER:
                tiles[idx] = Terrain.PLAIN
            if mirror:
                midx = (height - 1 - cell.row) * width + (width - 1 - cell.col)
                if tiles[midx] is Terrain.WATER:
                    tiles[midx] = Terrain.PLAIN
    raise DegenerateMap("connectivity repair did not converge")


def _place_cities(tiles: list[Terrain], width: int, height: int, k: int) -> list[Terrain]:
    """Cities sit on the k land cells with the most land neighbors."""
    tiles = list(tiles)
    scored = []
    for row in range(height):
        for col in range(width):
            c = HexCoord(col, row)
            if tiles[row * width + col] is Terrain.WATER:
                continue
            land = sum(
                1
                for n in neighbors(c, width, height)
                if tiles[n.row * width + n.col] is not Terrain.WATER
            )
            scored.append((-land, col, row))
    scored.sort()
    for _, col, row in scored[:k]:
        tiles[row * width + col] = Terrain.CITY
    return tiles


def generate_map(seed: int, width: int, height: int, params: MapParams | None = None) -> TerrainGrid:
    """Deterministic terrain for (seed, params); all land is one hex-connected region."""
    if width < 5 or height < 5:
        raise ValueError("map must be at least 5x5")
    params = params or MapParams()
    last_error = None
    for attempt in range(max(1, params.max_attempts)):
        attempt_seed = seed + attempt * 7919
        tiles = _assign_bands(width, height, attempt_seed, params)
        for _ in range(params.ca_passes):
            tiles = _smooth_pass(tiles, width, height)
        if all(t is Terrain.WATER for t in tiles):
            last_error = DegenerateMap("map contains no land")
            continue
        tiles = _carve_bridges(tiles, width, height, mirror=False)
        tiles = _place_cities(tiles, width, height, params.city_count)
        return TerrainGrid(width, height, tiles)
    raise last_error or DegenerateMap("map generation failed")


def mirror_symmetrize(grid: TerrainGrid, seed: int) -> TerrainGrid:
    """Grid made invariant under 180-degree rotation about the center.

    Each orbit pair donates the terrain of one of its two cells, chosen by a
    seeded coin flip; connectivity is then re-established with symmetric
    bridge carving. The input grid is not modified.
    """
    rng = rng_stream(seed, "mapgen:mirror")
    w, h = grid.width, grid.height
    tiles = list(grid.tiles)
    for row in range(h):
        for col in range(w):
            pc, pr = w - 1 - col, h - 1 - row
            if (col, row) >= (pc, pr):
                continue
            donor = tiles[row * w + col] if rng.random() < 0.5 else tiles[pr * w + pc]
            tiles[row * w + col] = donor
            tiles[pr * w + pc] = donor
    if any(t is not Terrain.WATER for t in tiles):
        tiles = _carve_bridges(tiles, w, h, mirror=True)
    return TerrainGrid(w, h, tiles)


def is_rotation_invariant(grid: TerrainGrid) -> bool:
    w, h = grid.width, grid.height
    return all(
        grid.tiles[r * w + c] is grid.tiles[(h - 1 - r) * w + (w - 1 - c)]
        for r in range(h)
        for c in range(w)
    )
