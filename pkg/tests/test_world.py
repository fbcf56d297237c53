"""Registry, spawning, digests, and the map dump format."""

import copy

import pytest

from hexarena.errors import ImpassableTile, OccupiedTile, UnknownEntity
from hexarena.hexes import HexCoord
from hexarena.scenario import ScenarioConfig, Terrain
from hexarena.world import (
    Faction,
    MovementPoints,
    Position,
    TerrainGrid,
    UnitCount,
    UnitStats,
    WorldState,
    dump_grid,
    parse_grid,
    snapshot_digest,
)


def flat_world(mode="turn_based", seed=1):
    cfg = ScenarioConfig()
    grid = TerrainGrid(cfg.width, cfg.height)
    return WorldState(cfg, grid, mode, seed)


def test_spawn_cavalry_has_configured_stats():
    w = flat_world()
    eid = w.spawn_unit("wei", "cavalry", HexCoord(5, 7))
    stats = w.registry.get(eid, UnitStats)
    count = w.registry.get(eid, UnitCount)
    mp = w.registry.get(eid, MovementPoints)
    assert (stats.attack, stats.defense) == (85, 40)
    assert (count.current, count.max) == (100, 100)
    assert (mp.current, mp.max) == (5, 5)
    assert w.registry.get(eid, Faction).name == "wei"


def test_spawn_on_water_rejected():
    w = flat_world()
    w.terrain.set_terrain(HexCoord(3, 3), Terrain.WATER)
    with pytest.raises(ImpassableTile):
        w.spawn_unit("wei", "infantry", HexCoord(3, 3))


def test_spawn_on_occupied_tile_rejected():
    w = flat_world()
    w.spawn_unit("wei", "infantry", HexCoord(4, 4))
    with pytest.raises(OccupiedTile):
        w.spawn_unit("shu", "archer", HexCoord(4, 4))


def test_entity_ids_unique_and_increasing():
    w = flat_world()
    ids = [
        w.spawn_unit("wei", "infantry", HexCoord(i, 0)) for i in range(5)
    ]
    assert ids == sorted(ids)
    assert len(set(ids)) == 5
    assert 0 not in ids
    w.registry.despawn(ids[2])
    new = w.spawn_unit("wei", "archer", HexCoord(2, 0))
    assert new > ids[-1], "despawned ids are never reused"


def test_query_reflects_interleaved_mutations():
    w = flat_world()
    a = w.spawn_unit("wei", "infantry", HexCoord(0, 0))
    b = w.spawn_unit("shu", "archer", HexCoord(1, 0))
    assert [eid for eid, _ in w.registry.query(Position)] == [a, b]
    w.registry.despawn(a)
    assert [eid for eid, _ in w.registry.query(Position)] == [b]
    c = w.spawn_unit("wei", "cavalry", HexCoord(2, 0))
    assert [eid for eid, _ in w.registry.query(Position)] == [b, c]
    with pytest.raises(UnknownEntity):
        w.registry.get(a, Position)


def test_digest_equal_for_deep_copy():
    w = flat_world()
    w.spawn_unit("wei", "cavalry", HexCoord(5, 7))
    w.spawn_unit("shu", "archer", HexCoord(9, 9))
    assert snapshot_digest(w) == snapshot_digest(copy.deepcopy(w))


def test_digest_changes_when_a_unit_moves():
    w = flat_world()
    eid = w.spawn_unit("wei", "cavalry", HexCoord(5, 7))
    before = snapshot_digest(w)
    w.registry.get(eid, Position).coord = HexCoord(6, 7)
    assert snapshot_digest(w) != before


def test_digest_changes_on_terrain_and_turn_changes():
    w = flat_world()
    base = snapshot_digest(w)
    w.terrain.set_terrain(HexCoord(0, 0), Terrain.FOREST)
    after_terrain = snapshot_digest(w)
    assert after_terrain != base
    w.turn_number += 1
    assert snapshot_digest(w) != after_terrain


def test_grid_dump_round_trip():
    cfg = ScenarioConfig()
    grid = TerrainGrid(cfg.width, cfg.height)
    grid.set_terrain(HexCoord(2, 3), Terrain.MOUNTAIN)
    grid.set_terrain(HexCoord(14, 14), Terrain.CITY)
    text = dump_grid(grid)
    assert text.splitlines()[0] == "15 15"
    parsed = parse_grid(text)
    assert parsed.tiles == grid.tiles
    assert (parsed.width, parsed.height) == (15, 15)
