"""ECS world: entity registry, components, terrain grid, and state digests.

Entities are bare integer ids (0 is reserved), components are small mutable
dataclasses, and systems are plain functions elsewhere in the package that
query the registry. WorldState has a single-writer contract: one scheduler
mutates it, everything else reads.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional

from .errors import ImpassableTile, OccupiedTile, OutOfBounds, UnknownEntity
from .hexes import HexCoord, in_bounds
from .scenario import TERRAIN_EFFECTS, ScenarioConfig, Terrain

TURN_BASED = "turn_based"
REAL_TIME = "real_time"

MP_SCALE = 1000  # movement points are stored in integer milli-MP


@dataclass
class Position:
    coord: HexCoord


@dataclass
class UnitStats:
    unit_type: str
    attack: int
    defense: int
    attack_range: int
    vision_range: int


@dataclass
class UnitCount:
    current: int
    max: int


@dataclass
class MovementPoints:
    current_milli: int
    max: int  # whole movement points

    @property
    def current(self) -> int:
        return self.current_milli // MP_SCALE


@dataclass
class ActionPoints:
    current: int
    max: int
    spent_this_turn: int = 0


@dataclass
class Faction:
    name: str


@dataclass
class StatusEffects:
    # tag -> remaining duration in turns; -1 means "until removed"
    active: dict[str, int] = field(default_factory=dict)


@dataclass
class SkillState:
    sp: int
    cooldowns: dict[str, int] = field(default_factory=dict)


COMPONENT_ORDER = (
    Position,
    UnitStats,
    UnitCount,
    MovementPoints,
    ActionPoints,
    Faction,
    StatusEffects,
    SkillState,
)


class Registry:
    """Entity/component store. Queries always walk live state, never caches."""

    def __init__(self) -> None:
        self._next_id = 1
        self._entities: dict[int, dict[type, Any]] = {}

    def spawn(self, *components: Any) -> int:
        eid = self._next_id
        self._next_id += 1
        self._entities[eid] = {type(c): c for c in components}
        return eid

    def despawn(self, eid: int) -> None:
        if eid not in self._entities:
            raise UnknownEntity(f"entity {eid} does not exist")
        del self._entities[eid]

    def exists(self, eid: int) -> bool:
        return eid in self._entities

    def has(self, eid: int, component_type: type) -> bool:
        return component_type in self._entities.get(eid, {})

    def get(self, eid: int, component_type: type) -> Any:
        try:
            return self._entities[eid][component_type]
        except KeyError:
            raise UnknownEntity(
                f"entity {eid} has no {component_type.__name__}"
            ) from None

    def components(self, eid: int) -> dict[type, Any]:
        try:
            return self._entities[eid]
        except KeyError:
            raise UnknownEntity(f"entity {eid} does not exist") from None

    def query(self, *component_types: type) -> Iterator[tuple[int, dict[type, Any]]]:
        for eid in sorted(self._entities):
            comps = self._entities[eid]
            if all(ct in comps for ct in component_types):
                yield eid, comps

    def ids(self) -> list[int]:
        return sorted(self._entities)

    @property
    def next_id(self) -> int:
        return self._next_id


class TerrainGrid:
    """Dense terrain layer plus per-tile ownership and fortification."""

    def __init__(self, width: int, height: int, tiles: Optional[list[Terrain]] = None):
        self.width = width
        self.height = height
        n = width * height
        self.tiles: list[Terrain] = tiles if tiles is not None else [Terrain.PLAIN] * n
        if len(self.tiles) != n:
            raise ValueError("tile array does not match dimensions")
        self.owner: list[Optional[str]] = [None] * n
        self.fort: list[int] = [0] * n

    def _idx(self, c: HexCoord) -> int:
        if not in_bounds(c, self.width, self.height):
            raise OutOfBounds(f"{c} outside {self.width}x{self.height}")
        return c.row * self.width + c.col

    def terrain_at(self, c: HexCoord) -> Terrain:
        return self.tiles[self._idx(c)]

    def set_terrain(self, c: HexCoord, t: Terrain) -> None:
        self.tiles[self._idx(c)] = t

    def owner_at(self, c: HexCoord) -> Optional[str]:
        return self.owner[self._idx(c)]

    def set_owner(self, c: HexCoord, faction: Optional[str]) -> None:
        self.owner[self._idx(c)] = faction

    def fort_at(self, c: HexCoord) -> int:
        return self.fort[self._idx(c)]

    def set_fort(self, c: HexCoord, level: int) -> None:
        self.fort[self._idx(c)] = level

    def move_cost(self, c: HexCoord) -> Optional[int]:
        return TERRAIN_EFFECTS[self.terrain_at(c)].move_cost

    def blocks_vision(self, c: HexCoord) -> bool:
        return TERRAIN_EFFECTS[self.terrain_at(c)].blocks_vision

    def copy(self) -> "TerrainGrid":
        g = TerrainGrid(self.width, self.height, list(self.tiles))
        g.owner = list(self.owner)
        g.fort = list(self.fort)
        return g

    def counts(self) -> dict[Terrain, int]:
        out: dict[Terrain, int] = {t: 0 for t in Terrain}
        for t in self.tiles:
            out[t] += 1
        return out


def dump_grid(grid: TerrainGrid) -> str:
    """Text dump: 'width height' header, then one row of tags per line, row-major."""
    lines = [f"{grid.width} {grid.height}"]
    for row in range(grid.height):
        tags = [grid.tiles[row * grid.width + col].value for col in range(grid.width)]
        lines.append(" ".join(tags))
    return "\n".join(lines) + "\n"


def parse_grid(text: str) -> TerrainGrid:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    width, height = (int(tok) for tok in lines[0].split())
    tiles: list[Terrain] = []
    for ln in lines[1 : height + 1]:
        tiles.extend(Terrain(tok) for tok in ln.split())
    return TerrainGrid(width, height, tiles)


class WorldState:
    """Authoritative match state: registry + terrain + turn/clock bookkeeping."""

    def __init__(self, config: ScenarioConfig, terrain: TerrainGrid, mode: str, seed: int):
        if mode not in (TURN_BASED, REAL_TIME):
            raise ValueError(f"unknown mode: {mode}")
        self.config = config
        self.terrain = terrain
        self.mode = mode
        self.seed = seed
        self.registry = Registry()
        self.factions: tuple[str, str] = tuple(config.factions)
        self.turn_number = 1
        self.active_faction: Optional[str] = config.factions[0] if mode == TURN_BASED else None
        self.clock_ms = 0
        self.game_over = False
        self.cp_pool: dict[str, int] = {f: config.cp_per_faction for f in config.factions}
        self.resources: dict[str, dict[str, int]] = {
            f: dict(config.starting_resources) for f in config.factions
        }
        self.initial_soldiers: dict[str, int] = {f: 0 for f in config.factions}
        self._ended_this_round: set[str] = set()
        # real-time action locks: entity id -> simulated ms when the lock expires
        self.locks: dict[int, int] = {}
        self._last_status_tick_ms = 0
        self._last_income_ms = 0

    # -- unit lifecycle -----------------------------------------------------

    def occupant_at(self, c: HexCoord) -> Optional[int]:
        for eid, comps in self.registry.query(Position):
            if comps[Position].coord == c:
                return eid
        return None

    def spawn_unit(self, faction: str, unit_type: str, position: HexCoord) -> int:
        if not in_bounds(position, self.terrain.width, self.terrain.height):
            raise OutOfBounds(f"spawn position {position} out of bounds")
        if self.terrain.move_cost(position) is None:
            raise ImpassableTile(f"cannot spawn on {self.terrain.terrain_at(position).value}")
        if self.occupant_at(position) is not None:
            raise OccupiedTile(f"{position} already occupied")
        spec = self.config.unit_spec(unit_type)
        eid = self.registry.spawn(
            Position(position),
            UnitStats(unit_type, spec.attack, spec.defense, spec.attack_range, spec.vision_range),
            UnitCount(spec.count_max, spec.count_max),
            MovementPoints(spec.mp_max * MP_SCALE, spec.mp_max),
            ActionPoints(spec.ap_max, spec.ap_max),
            Faction(faction),
            StatusEffects(),
            SkillState(self.config.sp_per_unit),
        )
        self.initial_soldiers[faction] += spec.count_max
        return eid

    def units_of(self, faction: str) -> list[int]:
        return [
            eid
            for eid, comps in self.registry.query(Faction, UnitCount)
            if comps[Faction].name == faction
        ]

    def soldiers_of(self, faction: str) -> int:
        return sum(
            comps[UnitCount].current
            for _, comps in self.registry.query(Faction, UnitCount)
            if comps[Faction].name == faction
        )

    def surviving_fraction(self, faction: str) -> float:
        total = self.initial_soldiers.get(faction, 0)
        if total == 0:
            return 0.0
        return self.soldiers_of(faction) / total

    def opponent_of(self, faction: str) -> str:
        a, b = self.factions
        if faction == a:
            return b
        if faction == b:
            return a
        raise UnknownEntity(f"unknown faction {faction}")

    # -- turn bookkeeping (driven by the rules layer) -------------------------

    def mark_turn_ended(self, faction: str) -> bool:
        """Record an end_turn; returns True when a full round completed."""
        self._ended_this_round.add(faction)
        if self._ended_this_round >= set(self.factions):
            self._ended_this_round.clear()
            self.turn_number += 1
            return True
        return False

    # -- digest ---------------------------------------------------------------

    def snapshot(self) -> dict[str, Any]:
        """Canonical plain-data view of everything gameplay-relevant."""
        entities = []
        for eid in self.registry.ids():
            comps = self.registry.components(eid)
            entry: dict[str, Any] = {}
            for ct in COMPONENT_ORDER:
                if ct not in comps:
                    continue
                comp = comps[ct]
                if ct is Position:
                    entry["Position"] = comp.coord.as_dict()
                elif ct is StatusEffects:
                    entry["StatusEffects"] = dict(sorted(comp.active.items()))
                elif ct is SkillState:
                    entry["SkillState"] = {
                        "sp": comp.sp,
                        "cooldowns": dict(sorted(comp.cooldowns.items())),
                    }
                else:
                    entry[ct.__name__] = {
                        k: v for k, v in vars(comp).items()
                    }
            entities.append([eid, entry])
        return {
            "mode": self.mode,
            "turn": self.turn_number,
            "active": self.active_faction,
            "clock_ms": self.clock_ms,
            "factions": list(self.factions),
            "cp": dict(sorted(self.cp_pool.items())),
            "resources": {f: dict(sorted(r.items())) for f, r in sorted(self.resources.items())},
            "initial_soldiers": dict(sorted(self.initial_soldiers.items())),
            "ended_round": sorted(self._ended_this_round),
            "locks": {str(k): v for k, v in sorted(self.locks.items())},
            "terrain": {
                "width": self.terrain.width,
                "height": self.terrain.height,
                "tiles": [t.value for t in self.terrain.tiles],
                "owner": self.terrain.owner,
                "fort": self.terrain.fort,
            },
            "entities": entities,
            "next_id": self.registry.next_id,
        }


def snapshot_digest(world: WorldState) -> str:
    """Platform-independent digest: canonical JSON (sorted keys) -> sha256."""
    blob = json.dumps(
        world.snapshot(), sort_keys=True, separators=(",", ":"), ensure_ascii=False
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
