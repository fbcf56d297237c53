"""Scenario configuration: terrain table, unit stats, rule constants, RNG streams.

Every tunable lives here with an embedded default and can be overridden from a
JSON scenario file (see ``data/default_scenario.json`` for the documented
shape). Loading is strict: unknown keys are rejected so typos surface early.
"""

from __future__ import annotations

import copy
import hashlib
import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Optional


class ConfigError(ValueError):
    pass


class Terrain(str, Enum):
    PLAIN = "plain"
    FOREST = "forest"
    HILL = "hill"
    MOUNTAIN = "mountain"
    WATER = "water"
    CITY = "city"


@dataclass(frozen=True)
class TerrainEffect:
    move_cost: Optional[int]  # None = impassable
    defense_bonus: float
    blocks_vision: bool


TERRAIN_EFFECTS: dict[Terrain, TerrainEffect] = {
    Terrain.PLAIN: TerrainEffect(1, 0.00, False),
    Terrain.FOREST: TerrainEffect(2, 0.20, True),
    Terrain.HILL: TerrainEffect(2, 0.30, True),
    Terrain.MOUNTAIN: TerrainEffect(3, 0.50, True),
    Terrain.WATER: TerrainEffect(None, 0.00, False),
    Terrain.CITY: TerrainEffect(1, 0.40, True),
}

CONSTRUCTIBLE_TERRAIN = frozenset(
    {Terrain.PLAIN, Terrain.FOREST, Terrain.HILL, Terrain.CITY}
)


def rng_stream(seed: int, name: str) -> random.Random:
    """Named child generator: one stream per subsystem, all hanging off one seed."""
    digest = hashlib.sha256(f"{seed}:{name}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


@dataclass
class UnitSpec:
    attack: int
    defense: int
    attack_range: int
    vision_range: int
    mp_max: int
    count_max: int = 100
    ap_max: int = 2


@dataclass
class MapParams:
    water_fraction: float = 0.12
    forest_fraction: float = 0.18
    hill_fraction: float = 0.15
    mountain_fraction: float = 0.08
    city_count: int = 2
    noise_scale: float = 0.35
    ca_passes: int = 2
    max_attempts: int = 10


@dataclass
class StatusSpec:
    multiplier: float = 1.0
    turns: int = -1  # -1 = persists until removed by an action
    blocks_move: bool = False


@dataclass
class SkillSpec:
    kind: str  # "strike" | "confuse"
    range: int
    sp_cost: int = 1
    ap_cost: int = 1
    cooldown: int = 3


@dataclass
class RealTimeParams:
    tick_ms: int = 100
    c_move: float = 0.5  # seconds of lock per point of path cost
    c_attack: float = 1.0
    c_support: float = 0.5
    mp_regen: float = 1.0  # movement points per second
    status_tick_ms: int = 10_000
    income_interval_ms: int = 10_000


@dataclass
class ScenarioConfig:
    width: int = 15
    height: int = 15
    factions: tuple[str, str] = ("wei", "shu")
    map_params: MapParams = field(default_factory=MapParams)
    units: dict[str, UnitSpec] = field(
        default_factory=lambda: {
            "infantry": UnitSpec(attack=60, defense=70, attack_range=1, vision_range=3, mp_max=3),
            "cavalry": UnitSpec(attack=85, defense=40, attack_range=1, vision_range=4, mp_max=5),
            "archer": UnitSpec(attack=70, defense=30, attack_range=2, vision_range=3, mp_max=3),
        }
    )
    army: tuple[str, ...] = ("infantry", "cavalry", "archer")
    # Spawn cells for the first faction; the second faction gets the 180-degree
    # rotated images. Cells are cleared to plain before spawning.
    spawn_cells: tuple[tuple[int, int], ...] = ((1, 1), (2, 1), (1, 2))
    horizon_turns: int = 100
    horizon_ms: int = 300_000
    curve_w: float = 0.5
    curve_exponent: float = 2.0
    fort_step_bonus: float = 0.15
    fort_max_level: int = 3
    defense_bonus_cap: float = 0.80
    cp_per_faction: int = 5
    sp_per_unit: int = 2
    statuses: dict[str, StatusSpec] = field(
        default_factory=lambda: {
            "MORALE_BOOST": StatusSpec(multiplier=1.2, turns=2),
            "CONFUSION": StatusSpec(multiplier=1.0, turns=1, blocks_move=True),
            "FATIGUE": StatusSpec(multiplier=0.8, turns=-1),
        }
    )
    skills: dict[str, SkillSpec] = field(
        default_factory=lambda: {
            "fire_attack": SkillSpec(kind="strike", range=2),
            "ambush": SkillSpec(kind="confuse", range=1),
        }
    )
    starting_resources: dict[str, int] = field(
        default_factory=lambda: {"manpower": 800, "supplies": 400}
    )
    city_income: dict[str, int] = field(
        default_factory=lambda: {"manpower": 10, "supplies": 5}
    )
    real_time: RealTimeParams = field(default_factory=RealTimeParams)

    def unit_spec(self, unit_type: str) -> UnitSpec:
        try:
            return self.units[unit_type]
        except KeyError:
            raise ConfigError(f"unknown unit type: {unit_type!r}") from None

    def status_spec(self, tag: str) -> StatusSpec:
        try:
            return self.statuses[tag]
        except KeyError:
            raise ConfigError(f"unknown status: {tag!r}") from None

    def mirrored_spawns(self) -> dict[str, list[tuple[int, int]]]:
        """Spawn cells per faction; second faction is rotated 180 degrees."""
        first, second = self.factions
        rot = [
            (self.width - 1 - c, self.height - 1 - r) for (c, r) in self.spawn_cells
        ]
        return {first: list(self.spawn_cells), second: rot}


_SECTION_KEYS = {
    "width",
    "height",
    "factions",
    "map_params",
    "units",
    "army",
    "spawn_cells",
    "horizon_turns",
    "horizon_ms",
    "curve_w",
    "curve_exponent",
    "fort_step_bonus",
    "fort_max_level",
    "defense_bonus_cap",
    "cp_per_faction",
    "sp_per_unit",
    "statuses",
    "skills",
    "starting_resources",
    "city_income",
    "real_time",
}


def scenario_from_dict(data: dict[str, Any]) -> ScenarioConfig:
    """Build a config from a (possibly partial) plain dict, defaults filled in."""
    unknown = set(data) - _SECTION_KEYS
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    cfg = ScenarioConfig()
    data = copy.deepcopy(data)
    if "factions" in data:
        factions = tuple(data.pop("factions"))
        if len(factions) != 2:
            raise ConfigError("exactly two factions are required")
        cfg.factions = factions
    if "map_params" in data:
        cfg.map_params = MapParams(**data.pop("map_params"))
    if "units" in data:
        cfg.units = {name: UnitSpec(**spec) for name, spec in data.pop("units").items()}
    if "army" in data:
        cfg.army = tuple(data.pop("army"))
    if "spawn_cells" in data:
        cfg.spawn_cells = tuple(tuple(cell) for cell in data.pop("spawn_cells"))
    if "statuses" in data:
        cfg.statuses = {tag: StatusSpec(**s) for tag, s in data.pop("statuses").items()}
    if "skills" in data:
        cfg.skills = {name: SkillSpec(**s) for name, s in data.pop("skills").items()}
    if "real_time" in data:
        cfg.real_time = RealTimeParams(**data.pop("real_time"))
    for key, value in data.items():
        setattr(cfg, key, value)
    if len(cfg.army) == 0:
        raise ConfigError("army must contain at least one unit")
    if len(cfg.spawn_cells) < len(cfg.army):
        raise ConfigError("need a spawn cell per army unit")
    for unit_type in cfg.army:
        cfg.unit_spec(unit_type)
    return cfg


def scenario_to_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    return {
        "width": cfg.width,
        "height": cfg.height,
        "factions": list(cfg.factions),
        "map_params": vars(cfg.map_params).copy(),
        "units": {name: vars(spec).copy() for name, spec in cfg.units.items()},
        "army": list(cfg.army),
        "spawn_cells": [list(cell) for cell in cfg.spawn_cells],
        "horizon_turns": cfg.horizon_turns,
        "horizon_ms": cfg.horizon_ms,
        "curve_w": cfg.curve_w,
        "curve_exponent": cfg.curve_exponent,
        "fort_step_bonus": cfg.fort_step_bonus,
        "fort_max_level": cfg.fort_max_level,
        "defense_bonus_cap": cfg.defense_bonus_cap,
        "cp_per_faction": cfg.cp_per_faction,
        "sp_per_unit": cfg.sp_per_unit,
        "statuses": {tag: vars(s).copy() for tag, s in cfg.statuses.items()},
        "skills": {name: vars(s).copy() for name, s in cfg.skills.items()},
        "starting_resources": cfg.starting_resources.copy(),
        "city_income": cfg.city_income.copy(),
        "real_time": vars(cfg.real_time).copy(),
    }


def load_scenario(path: str | Path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))
