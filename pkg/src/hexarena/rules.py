"""Environment rule set: combat resolution, the action-point economy, statuses,
occupation/fortification/skills, turn refresh, and victory determination.

Combat is fully deterministic. Attack power is scaled by a blended
effectiveness curve over the attacker's headcount ratio, so depleted units hit
disproportionately softly ("critical mass"); casualties come from a smooth
attack-vs-defense conversion. Terrain and fortification strengthen the
defender, with the stacked bonus capped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Optional

from . import errors as err
from .hexes import HexCoord, Path, find_path, hex_distance, in_bounds, reachable
from .scenario import CONSTRUCTIBLE_TERRAIN, TERRAIN_EFFECTS, ScenarioConfig, Terrain
from .world import (
    MP_SCALE,
    REAL_TIME,
    TURN_BASED,
    ActionPoints,
    Faction,
    MovementPoints,
    Position,
    SkillState,
    StatusEffects,
    UnitCount,
    UnitStats,
    WorldState,
)


def round_half_up(x: float) -> int:
    """Deterministic rounding for casualty math; .5 always rounds up."""
    return math.floor(x + 0.5)


@dataclass(frozen=True)
class EffectivenessCurve:
    """Blend of a linear and a polynomial decay: w*x + (1-w)*x**exponent."""

    w: float = 0.5
    exponent: float = 2.0


@dataclass(frozen=True)
class CombatInputs:
    a_base: float
    r_count: float
    s_status: float
    t_terrain: float = 1.0


@dataclass(frozen=True)
class BattleReport:
    attacker_id: int
    defender_id: int
    damage_dealt: int
    defender_count_after: int
    terrain_modifier_applied: float
    defender_destroyed: bool

    def as_dict(self) -> dict[str, Any]:
        return {
            "attacker_id": self.attacker_id,
            "defender_id": self.defender_id,
            "damage_dealt": self.damage_dealt,
            "defender_count_after": self.defender_count_after,
            "terrain_modifier_applied": self.terrain_modifier_applied,
            "defender_destroyed": self.defender_destroyed,
        }


@dataclass(frozen=True)
class Outcome:
    winner: Optional[str]  # None = draw
    surviving_fraction: float
    duration: int  # turns (turn-based) or simulated ms (real-time)
    terminal_reason: str  # "elimination" | "horizon"

    def as_dict(self) -> dict[str, Any]:
        return {
            "winner": self.winner,
            "surviving_fraction": self.surviving_fraction,
            "duration": self.duration,
            "terminal_reason": self.terminal_reason,
        }


def effectiveness(x: float, curve: EffectivenessCurve) -> float:
    if not 0.0 <= x <= 1.0:
        raise err.DomainError(f"headcount ratio {x} outside [0, 1]")
    return curve.w * x + (1.0 - curve.w) * x**curve.exponent


def effective_attack(inputs: CombatInputs, curve: EffectivenessCurve) -> float:
    return (
        inputs.a_base
        * effectiveness(inputs.r_count, curve)
        * inputs.s_status
        * inputs.t_terrain
    )


def curve_of(config: ScenarioConfig) -> EffectivenessCurve:
    return EffectivenessCurve(w=config.curve_w, exponent=config.curve_exponent)


def status_multiplier(world: WorldState, eid: int) -> float:
    mult = 1.0
    effects = world.registry.get(eid, StatusEffects)
    for tag in sorted(effects.active):
        mult *= world.config.status_spec(tag).multiplier
    return mult


def defense_bonus(world: WorldState, defender_pos: HexCoord) -> float:
    """Terrain + fortification bonus of the defender's tile, capped."""
    terrain = TERRAIN_EFFECTS[world.terrain.terrain_at(defender_pos)].defense_bonus
    fort = world.terrain.fort_at(defender_pos) * world.config.fort_step_bonus
    return min(terrain + fort, world.config.defense_bonus_cap)


def _live_unit(world: WorldState, eid: int) -> None:
    if not world.registry.exists(eid) or world.registry.get(eid, UnitCount).current < 1:
        raise err.DeadTarget(f"unit {eid} is not alive")


def _spend_ap(world: WorldState, eid: int) -> None:
    ap = world.registry.get(eid, ActionPoints)
    if ap.current < 1 or ap.spent_this_turn >= ap.max:
        raise err.InsufficientAP(f"unit {eid} has no action points left")
    ap.current -= 1
    ap.spent_this_turn += 1


def check_attack_preconditions(world: WorldState, attacker: int, defender: int) -> None:
    """Rule-layer attack checks, in the documented order."""
    _live_unit(world, attacker)
    if not world.registry.exists(defender):
        raise err.DeadTarget(f"target {defender} is not alive")
    if (
        world.registry.get(attacker, Faction).name
        == world.registry.get(defender, Faction).name
    ):
        raise err.FriendlyFire("target belongs to the attacking faction")
    dist = hex_distance(
        world.registry.get(attacker, Position).coord,
        world.registry.get(defender, Position).coord,
    )
    if dist > world.registry.get(attacker, UnitStats).attack_range:
        raise err.OutOfRange(f"target at distance {dist} exceeds attack range")
    if world.mode == TURN_BASED:
        ap = world.registry.get(attacker, ActionPoints)
        if ap.current < 1 or ap.spent_this_turn >= ap.max:
            raise err.InsufficientAP("attack requires 1 action point")


def _apply_casualties(
    world: WorldState, attacker: int, defender: int, a_eff: float
) -> BattleReport:
    bonus = defense_bonus(world, world.registry.get(defender, Position).coord)
    d_eff = world.registry.get(defender, UnitStats).defense * (1.0 + bonus)
    count = world.registry.get(defender, UnitCount)
    casualties = min(round_half_up(a_eff * 100.0 / (100.0 + d_eff)), count.current)
    count.current -= casualties
    destroyed = count.current <= 0
    report = BattleReport(
        attacker_id=attacker,
        defender_id=defender,
        damage_dealt=casualties,
        defender_count_after=max(count.current, 0),
        terrain_modifier_applied=bonus,
        defender_destroyed=destroyed,
    )
    if destroyed:
        world.registry.despawn(defender)
    return report


def resolve_combat(world: WorldState, attacker: int, defender: int) -> BattleReport:
    """Deterministic attack resolution; costs the attacker 1 AP (turn-based)."""
    check_attack_preconditions(world, attacker, defender)
    stats = world.registry.get(attacker, UnitStats)
    count = world.registry.get(attacker, UnitCount)
    inputs = CombatInputs(
        a_base=stats.attack,
        r_count=count.current / count.max,
        s_status=status_multiplier(world, attacker),
        t_terrain=1.0,  # terrain strengthens the defender via defense_bonus
    )
    a_eff = effective_attack(inputs, curve_of(world.config))
    if world.mode == TURN_BASED:
        _spend_ap(world, attacker)
    return _apply_casualties(world, attacker, defender, a_eff)


# -- movement -----------------------------------------------------------------


def entry_cost_fn(world: WorldState, mover: Optional[int] = None):
    """Terrain entry costs; tiles holding any living unit are impassable."""

    def entry(c: HexCoord) -> Optional[int]:
        if not in_bounds(c, world.terrain.width, world.terrain.height):
            return None
        cost = world.terrain.move_cost(c)
        if cost is None:
            return None
        occupant = world.occupant_at(c)
        if occupant is not None and occupant != mover:
            return None
        return cost

    return entry


def plan_move(world: WorldState, unit_id: int, target: HexCoord) -> Path:
    """Cheapest path to target, before charging MP.

    Raises Blocked when no path exists at any cost, InsufficientMP when the
    cheapest path overruns the unit's current movement points.
    """
    pos = world.registry.get(unit_id, Position).coord
    if target == pos:
        raise err.Blocked("unit is already on the target tile")
    effects = world.registry.get(unit_id, StatusEffects)
    for tag in effects.active:
        if world.config.status_spec(tag).blocks_move:
            raise err.StatusForbids(f"{tag} prevents movement")
    path = find_path(pos, target, entry_cost_fn(world, mover=unit_id), budget=None)
    if path is None:
        raise err.Blocked(f"no open path to {target}")
    mp = world.registry.get(unit_id, MovementPoints)
    if path.total_cost * MP_SCALE > mp.current_milli:
        raise err.InsufficientMP(
            f"path costs {path.total_cost}, unit has {mp.current} movement points"
        )
    return path


def apply_move(world: WorldState, unit_id: int, path: Path) -> int:
    """Commit a planned path; returns remaining whole movement points."""
    mp = world.registry.get(unit_id, MovementPoints)
    world.registry.get(unit_id, Position).coord = path.steps[-1]
    mp.current_milli -= int(path.total_cost * MP_SCALE)
    return mp.current

def reachable_tiles(world: WorldState, unit_id: int) -> list[tuple[HexCoord, int]]:
    """Tiles the unit could reach right now with its remaining MP."""
    pos = world.registry.get(unit_id, Position).coord
    budget = world.registry.get(unit_id, MovementPoints).current
    return [
        (cell, int(cost))
        for cell, cost in reachable(pos, entry_cost_fn(world, mover=unit_id), budget)
    ]


# -- support actions ----------------------------------------------------------


def apply_rest(world: WorldState, unit_id: int) -> dict[str, Any]:
    ap = world.registry.get(unit_id, ActionPoints)
    if ap.current < 1:
        raise err.InsufficientAP("resting requires an unspent action")
    ap.current = min(ap.current + 1, ap.max)
    effects = world.registry.get(unit_id, StatusEffects)
    relieved = None
    for tag in sorted(effects.active):
        spec = world.config.status_spec(tag)
        if spec.multiplier < 1.0 or spec.blocks_move:
            relieved = tag
            if effects.active[tag] < 0 or effects.active[tag] <= 1:
                del effects.active[tag]
            else:
                effects.active[tag] -= 1
            break
    return {"ap": ap.current, "status_relieved": relieved}


def apply_occupy(world: WorldState, unit_id: int, target: HexCoord) -> dict[str, Any]:
    faction = world.registry.get(unit_id, Faction).name
    pos = world.registry.get(unit_id, Position).coord
    if hex_distance(pos, target) > 1:
        raise err.OutOfRange("can only occupy the current or an adjacent tile")
    if world.terrain.move_cost(target) is None:
        raise err.ImpassableTile("water cannot be occupied")
    if world.terrain.owner_at(target) == faction:
        raise err.AlreadyOwned(f"{target} already belongs to {faction}")
    if world.mode == TURN_BASED:
        _spend_ap(world, unit_id)
    world.terrain.set_owner(target, faction)
    return {"position": target.as_dict(), "owner": faction}


def apply_fortify(world: WorldState, unit_id: int, target: HexCoord) -> dict[str, Any]:
    faction = world.registry.get(unit_id, Faction).name
    pos = world.registry.get(unit_id, Position).coord
    if hex_distance(pos, target) > 1:
        raise err.OutOfRange("can only fortify the current or an adjacent tile")
    if world.terrain.terrain_at(target) not in CONSTRUCTIBLE_TERRAIN:
        raise err.TerrainForbidsConstruction(
            f"{world.terrain.terrain_at(target).value} does not support construction"
        )
    if world.terrain.owner_at(target) != faction:
        raise err.NotOwnedTile(f"{target} is not owned by {faction}")
    level = world.terrain.fort_at(target)
    if level >= world.config.fort_max_level:
        raise err.MaxFortification(f"{target} is already at level {level}")
    if world.cp_pool[faction] < 1:
        raise err.InsufficientCP("no construction points left")
    if world.mode == TURN_BASED:
        _spend_ap(world, unit_id)
    world.cp_pool[faction] -= 1
    world.terrain.set_fort(target, level + 1)
    return {"position": target.as_dict(), "level": level + 1, "cp_left": world.cp_pool[faction]}


def apply_skill(
    world: WorldState, unit_id: int, skill_name: str, target: Any
) -> dict[str, Any]:
    spec = world.config.skills.get(skill_name)
    if spec is None:
        raise err.UnknownSkill(f"no such skill: {skill_name!r}")
    skill_state = world.registry.get(unit_id, SkillState)
    if skill_state.cooldowns.get(skill_name, 0) > 0:
        raise err.SkillOnCooldown(
            f"{skill_name} ready in {skill_state.cooldowns[skill_name]} turns"
        )
    if skill_state.sp < spec.sp_cost:
        raise err.InsufficientSP(f"{skill_name} costs {spec.sp_cost} skill points")

    faction = world.registry.get(unit_id, Faction).name
    pos = world.registry.get(unit_id, Position).coord
    if not isinstance(target, int):
        raise err.SchemaViolation("skill target must be an enemy unit id")
    if not world.registry.exists(target):
        raise err.DeadTarget(f"target {target} is not alive")
    if world.registry.get(target, Faction).name == faction:
        raise err.FriendlyFire("skills target enemies")
    dist = hex_distance(pos, world.registry.get(target, Position).coord)
    if dist > spec.range:
        raise err.OutOfRange(f"target at distance {dist} exceeds skill range {spec.range}")

    if world.mode == TURN_BASED and spec.ap_cost:
        _spend_ap(world, unit_id)
    skill_state.sp -= spec.sp_cost
    skill_state.cooldowns[skill_name] = spec.cooldown

    detail: dict[str, Any] = {"skill": skill_name, "sp_left": skill_state.sp}
    if spec.kind == "strike":
        stats = world.registry.get(unit_id, UnitStats)
        count = world.registry.get(unit_id, UnitCount)
        inputs = CombatInputs(
            a_base=stats.attack,
            r_count=count.current / count.max,
            s_status=1.0,  # strikes ignore status multipliers
        )
        a_eff = effective_attack(inputs, curve_of(world.config))
        detail["report"] = _apply_casualties(world, unit_id, target, a_eff).as_dict()
    elif spec.kind == "confuse":
        effects = world.registry.get(target, StatusEffects)
        effects.active["CONFUSION"] = world.config.status_spec("CONFUSION").turns
        detail["applied"] = {"target": target, "status": "CONFUSION"}
    else:
        raise err.UnknownSkill(f"skill kind {spec.kind!r} not implemented")
    return detail


# -- turn transitions ----------------------------------------------------------


def _tick_statuses(world: WorldState, faction: str) -> None:
    for eid, comps in world.registry.query(Faction, StatusEffects):
        if comps[Faction].name != faction:
            continue
        active = comps[StatusEffects].active
        for tag in sorted(active):
            if active[tag] < 0:
                continue  # persists until removed explicitly
            active[tag] -= 1
            if active[tag] <= 0:
                del active[tag]


def _tick_cooldowns(world: WorldState, faction: str) -> None:
    for eid, comps in world.registry.query(Faction, SkillState):
        if comps[Faction].name != faction:
            continue
        cds = comps[SkillState].cooldowns
        for name in sorted(cds):
            cds[name] -= 1
            if cds[name] <= 0:
                del cds[name]


def _award_city_income(world: WorldState, faction: str) -> None:
    cities = sum(
        1
        for i, t in enumerate(world.terrain.tiles)
        if t is Terrain.CITY and world.terrain.owner[i] == faction
    )
    if cities:
        for key, amount in world.config.city_income.items():
            world.resources[faction][key] = (
                world.resources[faction].get(key, 0) + cities * amount
            )


def refresh_faction(world: WorldState, faction: str) -> None:
    """Restore AP and MP of every unit of the faction to maximum."""
    for eid, comps in world.registry.query(Faction, ActionPoints, MovementPoints):
        if comps[Faction].name != faction:
            continue
        ap = comps[ActionPoints]
        ap.current = ap.max
        ap.spent_this_turn = 0
        mp = comps[MovementPoints]
        mp.current_milli = mp.max * MP_SCALE


def end_turn(world: WorldState, faction: str) -> dict[str, Any]:
    """Close the active faction's turn and hand activation to the opponent."""
    if world.mode != TURN_BASED:
        raise err.WrongMode("end_turn only exists in turn-based play")
    if world.active_faction != faction:
        raise err.NotYourTurn(f"it is {world.active_faction}'s turn")
    _tick_statuses(world, faction)
    _tick_cooldowns(world, faction)
    _award_city_income(world, faction)
    world.mark_turn_ended(faction)
    nxt = world.opponent_of(faction)
    world.active_faction = nxt
    refresh_faction(world, nxt)
    return {"turn_number": world.turn_number, "active_faction": nxt}


def check_victory(world: WorldState) -> Optional[Outcome]:
    """Elimination ends the match immediately; the horizon falls back to the
    surviving-soldier-fraction tiebreak."""
    a, b = world.factions
    if world.initial_soldiers[a] == 0 or world.initial_soldiers[b] == 0:
        return None  # armies not spawned yet; nothing to win
    alive = {f: len(world.units_of(f)) for f in world.factions}
    if alive[a] == 0 or alive[b] == 0:
        winner = a if alive[b] == 0 else b
        if alive[a] == 0 and alive[b] == 0:
            winner = None
        duration = world.turn_number if world.mode == TURN_BASED else world.clock_ms
        frac = world.surviving_fraction(winner) if winner else 0.0
        return Outcome(winner, frac, duration, "elimination")

    horizon_hit = (
        world.turn_number > world.config.horizon_turns
        if world.mode == TURN_BASED
        else world.clock_ms >= world.config.horizon_ms
    )
    if not horizon_hit:
        return None
    fa, fb = world.surviving_fraction(a), world.surviving_fraction(b)
    duration = (
        world.config.horizon_turns if world.mode == TURN_BASED else world.clock_ms
    )
    if fa > fb:
        return Outcome(a, fa, duration, "horizon")
    if fb > fa:
        return Outcome(b, fb, duration, "horizon")
    return Outcome(None, 0.0, duration, "horizon")
