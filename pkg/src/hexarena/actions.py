"""Action routing: schema checks, the four-layer validator, dispatch to rule
handlers, fog-of-war observation building, and telemetry ingestion.

Validation runs in a fixed layered order (boundaries, ownership/turn,
components, action rules) and the first failing layer wins, so a request that
is wrong in several ways always reports the earliest violation. Spatial errors
(bounds, range, path, movement budget) carry a flag that feeds the spatial
error share statistic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from . import errors as err
from . import rules
from .hexes import HexCoord, hex_distance, in_bounds, line_of_sight
from .protocol import AgentSession, EventNotice, MsgType, SessionHub
from .world import (
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
    snapshot_digest,
)

OBSERVATION_LEVELS = ("basic", "detailed", "tactical")

UNIT_ACTIONS = ("move", "attack", "rest", "occupy", "fortify", "skill")
INFO_ACTIONS = ("observation", "get_faction_state", "get_action_list")
TELEMETRY_ACTIONS = ("strategy_ping", "report_llm_stats")

# name -> (params spec, category); params spec: name -> (type tag, required)
ACTION_CATALOG: dict[str, dict[str, Any]] = {
    "move": {
        "category": "unit",
        "params": {"unit_id": ("int", True), "target_position": ("position", True)},
        "description": "Move a unit along the cheapest path to a target hex.",
    },
    "attack": {
        "category": "unit",
        "params": {"unit_id": ("int", True), "target_id": ("int", True)},
        "description": "Engage a hostile unit within attack range; costs 1 AP.",
    },
    "rest": {
        "category": "unit",
        "params": {"unit_id": ("int", True)},
        "description": "Hold position, recover 1 AP and relieve a negative status.",
    },
    "occupy": {
        "category": "unit",
        "params": {"unit_id": ("int", True), "position": ("position", True)},
        "description": "Claim the current or an adjacent tile for the faction.",
    },
    "fortify": {
        "category": "unit",
        "params": {"unit_id": ("int", True), "position": ("position", True)},
        "description": "Raise a friendly tile's fortification; costs 1 AP + 1 CP.",
    },
    "skill": {
        "category": "unit",
        "params": {
            "unit_id": ("int", True),
            "skill_name": ("str", True),
            "target": ("any", False),
        },
        "description": "Trigger a unit skill; validates cooldown and skill points.",
    },
    "observation": {
        "category": "info",
        "params": {"unit_id": ("int", False), "observation_level": ("str", False)},
        "description": "Fog-filtered observation; whole faction or a single unit.",
    },
    "get_faction_state": {
        "category": "info",
        "params": {"faction": ("str", True)},
        "description": "Faction status; opponents reveal only their match state.",
    },
    "end_turn": {
        "category": "system",
        "params": {"faction": ("str", True)},
        "description": "Finish the active turn; AP/MP restore at next activation.",
    },
    "get_action_list": {
        "category": "info",
        "params": {},
        "description": "This catalog, with parameter signatures.",
    },
    "register_agent_info": {
        "category": "system",
        "params": {
            "faction": ("str", True),
            "agent_id": ("str", True),
            "model_id": ("str", True),
        },
        "description": "Bind the session to a faction; required before gameplay.",
    },
    "strategy_ping": {
        "category": "telemetry",
        "params": {
            "faction": ("str", True),
            "score": ("number", True),
            "evidence": ("str", True),
        },
        "description": "Self-reported strategic insight; no game-state effect.",
    },
    "report_llm_stats": {
        "category": "telemetry",
        "params": {},
        "description": "Token/latency/error statistics; free-form payload.",
    },
}


@dataclass(frozen=True)
class ActionResult:
    ok: bool
    detail: Any = None
    error_code: Optional[str] = None
    spatial: bool = False
    warnings: tuple[str, ...] = ()

    def as_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"ok": self.ok}
        if self.detail is not None:
            out["detail"] = self.detail
        if self.error_code is not None:
            out["error_code"] = self.error_code
            out["spatial"] = self.spatial
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out


# hard failures abort the rest of a batch; everything else is a recorded
# rejection that later actions may still recover from
HARD_FAILURES = frozenset(
    {"UnknownAction", "SchemaViolation", "NotRegistered", "NotYourTurn", "GameOver"}
)


class GameOver(err.ArenaError):
    code = "GameOver"


def _positions_of(params: dict[str, Any]) -> list[HexCoord]:
    out = []
    for key in ("target_position", "position"):
        if key in params and isinstance(params[key], dict):
            pos = params[key]
            out.append(HexCoord(int(pos["col"]), int(pos["row"])))
    return out


def check_schema(action: str, params: dict[str, Any]) -> list[str]:
    """Schema layer: unknown action or malformed params fail, unknown extra
    parameters are tolerated with a warning."""
    if action not in ACTION_CATALOG:
        raise err.UnknownAction(f"unknown action {action!r}")
    if not isinstance(params, dict):
        raise err.SchemaViolation("params must be an object")
    spec = ACTION_CATALOG[action]["params"]
    warnings = []
    for name, (kind, required) in spec.items():
        if name not in params:
            if required:
                raise err.SchemaViolation(f"{action} requires parameter {name!r}")
            continue
        value = params[name]
        if kind == "int" and (not isinstance(value, int) or isinstance(value, bool)):
            raise err.SchemaViolation(f"{name} must be an integer")
        if kind == "str" and not isinstance(value, str):
            raise err.SchemaViolation(f"{name} must be a string")
        if kind == "number" and not isinstance(value, (int, float)):
            raise err.SchemaViolation(f"{name} must be a number")
        if kind == "position":
            if (
                not isinstance(value, dict)
                or not isinstance(value.get("col"), int)
                or not isinstance(value.get("row"), int)
            ):
                raise err.SchemaViolation(f"{name} must be {{col: int, row: int}}")
    if action != "report_llm_stats":
        for name in params:
            if name not in spec:
                warnings.append(f"ignored unknown parameter {name!r}")
    return warnings


@dataclass
class Executor:
    """Single entry point for everything that wants to act on a world."""

    world: WorldState
    hub: SessionHub
    recorder: Any = None  # duck-typed MatchRecorder; may be None
    game_end_hook: Optional[Callable[[rules.Outcome], None]] = None
    outcome: Optional[rules.Outcome] = None

    # -- validation layers ---------------------------------------------------

    def _layer_boundaries(self, params: dict[str, Any]) -> None:
        for pos in _positions_of(params):
            if not in_bounds(pos, self.world.terrain.width, self.world.terrain.height):
                raise err.OutOfBounds(
                    f"{pos} outside {self.world.terrain.width}x{self.world.terrain.height}"
                )

    def _layer_ownership_and_turn(
        self, session: AgentSession, action: str, params: dict[str, Any]
    ) -> None:
        if action in UNIT_ACTIONS:
            unit_id = params["unit_id"]
            if not self.world.registry.exists(unit_id):
                raise err.NotYourUnit(f"unit {unit_id} does not exist")
            owner = self.world.registry.get(unit_id, Faction).name
            if owner != session.faction:
                raise err.NotYourUnit(f"unit {unit_id} belongs to {owner}")
        if action == "end_turn" and params["faction"] != session.faction:
            raise err.NotYourTurn(f"cannot end {params['faction']}'s turn")
        if action in UNIT_ACTIONS or action == "end_turn":
            if (
                self.world.mode == TURN_BASED
                and self.world.active_faction != session.faction
            ):
                raise err.NotYourTurn(f"it is {self.world.active_faction}'s turn")

    def _layer_components(self, action: str, params: dict[str, Any]) -> None:
        needed: dict[str, tuple[type, ...]] = {
            "move": (Position, MovementPoints, StatusEffects),
            "attack": (Position, UnitStats, UnitCount, ActionPoints),
            "rest": (ActionPoints, StatusEffects),
            "occupy": (Position, Faction, ActionPoints),
            "fortify": (Position, Faction, ActionPoints),
            "skill": (Position, UnitStats, UnitCount, SkillState),
        }
        for ct in needed.get(action, ()):
            if not self.world.registry.has(params["unit_id"], ct):
                raise err.MissingComponent(
                    f"unit {params['unit_id']} lacks {ct.__name__}"
                )

    def _layer_rules(self, session: AgentSession, action: str, params: dict[str, Any]) -> dict:
        """Final layer; returns context reused by dispatch (e.g. planned path)."""
        ctx: dict[str, Any] = {}
        world = self.world
        if action == "move":
            target = HexCoord(params["target_position"]["col"], params["target_position"]["row"])
            self._check_lock(params["unit_id"])
            ctx["path"] = rules.plan_move(world, params["unit_id"], target)
        elif action == "attack":
            self._check_lock(params["unit_id"])
            rules.check_attack_preconditions(world, params["unit_id"], params["target_id"])
        elif action in ("rest", "occupy", "fortify", "skill"):
            self._check_lock(params["unit_id"])
        elif action == "end_turn":
            if world.mode != TURN_BASED:
                raise err.WrongMode("end_turn does not exist in real-time mode")
        elif action == "observation":
            if "observation_level" in params and params["observation_level"] not in OBSERVATION_LEVELS:
                raise err.SchemaViolation(
                    f"observation_level must be one of {OBSERVATION_LEVELS}"
                )
            if "unit_id" in params and not world.registry.exists(params["unit_id"]):
                raise err.UnknownEntity(f"unit {params['unit_id']} does not exist")
        elif action == "get_faction_state":
            if params["faction"] not in world.factions:
                raise err.UnknownFaction(f"unknown faction {params['faction']!r}")
        elif action == "strategy_ping":
            if params["faction"] != session.faction:
                raise err.SchemaViolation("strategy_ping faction must match the session")
        return ctx

    def _check_lock(self, unit_id: int) -> None:
        if self.world.mode != REAL_TIME:
            return
        until = self.world.locks.get(unit_id, 0)
        if self.world.clock_ms < until:
            raise err.UnitBusy(f"unit {unit_id} locked until t={until}ms")

    def validate(
        self, session: AgentSession, action: str, params: dict[str, Any]
    ) -> tuple[dict, list[str]]:
        warnings = check_schema(action, params)
        if action in UNIT_ACTIONS or action in ("end_turn",):
            if self.outcome is not None or self.world.game_over:
                raise GameOver("the match has ended")
        self._layer_boundaries(params)
        self._layer_ownership_and_turn(session, action, params)
        self._layer_components(action, params)
        ctx = self._layer_rules(session, action, params)
        return ctx, warnings

    # -- dispatch --------------------------------------------------------------

    def execute(
        self,
        session: AgentSession,
        action: str,
        params: dict[str, Any],
        at_ms: Optional[int] = None,
    ) -> ActionResult:
        if self.recorder is not None:
            self.recorder.record_request(session.faction, action, params, at_ms)
        session.total_calls += 1
        try:
            ctx, warnings = self.validate(session, action, params)
            detail = self._dispatch(session, action, params, ctx)
            result = ActionResult(ok=True, detail=detail, warnings=tuple(warnings))
        except err.ArenaError as exc:
            result = ActionResult(
                ok=False,
                detail=None,
                error_code=exc.code,
                spatial=exc.spatial,
            )
        if result.ok:
            session.ok_calls += 1
            if action in UNIT_ACTIONS:
                session.ok_gameplay += 1
        else:
            session.failed_calls += 1
            if result.spatial:
                session.spatial_failed += 1
        if self.recorder is not None:
            self.recorder.record_result(result)
        if result.ok and (action in UNIT_ACTIONS or action == "end_turn"):
            self._after_mutation(action)
        return result

    def execute_batch(
        self,
        session: AgentSession,
        actions: list[dict[str, Any]],
        at_ms: Optional[int] = None,
    ) -> list[ActionResult]:
        """Run a batch in order; a hard failure aborts the remainder."""
        results = []
        for item in actions:
            if not isinstance(item, dict) or "action" not in item:
                results.append(
                    ActionResult(ok=False, error_code="SchemaViolation", spatial=False)
                )
                break
            result = self.execute(
                session, item["action"], item.get("params", {}), at_ms=at_ms
            )
            results.append(result)
            if not result.ok and result.error_code in HARD_FAILURES:
                break
        return results

    def _dispatch(
        self, session: AgentSession, action: str, params: dict[str, Any], ctx: dict
    ) -> Any:
        world = self.world
        if action == "move":
            path = ctx["path"]
            mp_left = rules.apply_move(world, params["unit_id"], path)
            self._apply_lock(params["unit_id"], "move", path.total_cost)
            return {
                "position": path.steps[-1].as_dict(),
                "path_cost": path.total_cost,
                "mp_left": mp_left,
            }
        if action == "attack":
            report = rules.resolve_combat(world, params["unit_id"], params["target_id"])
            self._apply_lock(params["unit_id"], "attack")
            return report.as_dict()
        if action == "rest":
            detail = rules.apply_rest(world, params["unit_id"])
            self._apply_lock(params["unit_id"], "support")
            return detail
        if action == "occupy":
            pos = HexCoord(params["position"]["col"], params["position"]["row"])
            detail = rules.apply_occupy(world, params["unit_id"], pos)
            self._apply_lock(params["unit_id"], "support")
            return detail
        if action == "fortify":
            pos = HexCoord(params["position"]["col"], params["position"]["row"])
            detail = rules.apply_fortify(world, params["unit_id"], pos)
            self._apply_lock(params["unit_id"], "support")
            return detail
        if action == "skill":
            detail = rules.apply_skill(
                world, params["unit_id"], params["skill_name"], params.get("target")
            )
            self._apply_lock(params["unit_id"], "support")
            return detail
        if action == "end_turn":
            return rules.end_turn(world, params["faction"])
        if action == "observation":
            level = params.get("observation_level", "basic")
            if "unit_id" in params:
                return unit_observation(world, session.faction, params["unit_id"], level)
            return build_observation(world, session.faction, level)
        if action == "get_faction_state":
            return faction_state(world, session.faction, params["faction"], self.outcome)
        if action == "get_action_list":
            return action_list()
        if action == "register_agent_info":
            if session.faction != params["faction"]:
                raise err.FactionTaken("session already bound to another faction")
            return {"faction": session.faction, "agent_id": session.agent_id}
        if action == "strategy_ping":
            return self._ingest_ping(session, params)
        if action == "report_llm_stats":
            session.llm_stats.append(dict(params))
            if self.recorder is not None:
                self.recorder.record_telemetry(session.faction, "report_llm_stats", params)
            return {"recorded": True}
        raise err.UnknownAction(action)

    def _ingest_ping(self, session: AgentSession, params: dict[str, Any]) -> dict:
        score = float(params["score"])
        clamped = min(max(score, 0.0), 1.0)
        entry = {
            "score": clamped,
            "evidence": params["evidence"],
            "clamped": clamped != score,
        }
        session.telemetry.append(entry)
        if self.recorder is not None:
            self.recorder.record_telemetry(session.faction, "strategy_ping", entry)
        out = {"recorded": True, "score": clamped}
        if entry["clamped"]:
            out["warning"] = "score clamped to [0, 1]"
        return out

    def _apply_lock(self, unit_id: int, kind: str, path_cost: float = 0.0) -> None:
        if self.world.mode != REAL_TIME:
            return
        seconds = action_lock_seconds(self.world.config, kind, path_cost)
        if seconds > 0 and self.world.registry.exists(unit_id):
            self.world.locks[unit_id] = self.world.clock_ms + int(round(seconds * 1000))

    def _after_mutation(self, action: str) -> None:
        outcome = rules.check_victory(self.world)
        if outcome is not None and self.outcome is None:
            self._declare(outcome)
            return
        if action == "end_turn" and self.outcome is None:
            self.emit_turn_events()

    def check_end(self) -> None:
        """Re-check terminal conditions (used by the real-time tick loop)."""
        outcome = rules.check_victory(self.world)
        if outcome is not None and self.outcome is None:
            self._declare(outcome)

    def declare_forfeit(self, loser: str, reason: str) -> None:
        winner = self.world.opponent_of(loser)
        self._declare(
            rules.Outcome(
                winner,
                self.world.surviving_fraction(winner),
                self.world.turn_number if self.world.mode == TURN_BASED else self.world.clock_ms,
                reason,
            )
        )

    def _declare(self, outcome: rules.Outcome) -> None:
        self.outcome = outcome
        self.world.game_over = True
        notice = EventNotice(
            "game_end",
            {"outcome": outcome.as_dict(), "final_digest": snapshot_digest(self.world)},
        )
        if self.recorder is not None:
            self.recorder.record_event(notice)
        self.hub.publish_event(notice)
        if self.game_end_hook is not None:
            self.game_end_hook(outcome)

    def emit_turn_events(self) -> None:
        """Publish the turn transition: turn_start plus a state-update notice
        in turn-based play, a bare state-update in real-time play."""
        detail = {
            "active_faction": self.world.active_faction,
            "turn_number": self.world.turn_number,
        }
        events = ("turn_start", "state_update") if self.world.mode == TURN_BASED else ("state_update",)
        for event in events:
            notice = EventNotice(event, detail)
            if self.recorder is not None:
                self.recorder.record_event(notice)
            self.hub.publish_event(notice)


def action_lock_seconds(config, kind: str, path_cost: float = 0.0) -> float:
    rt = config.real_time
    if kind == "move":
        return rt.c_move * path_cost
    if kind == "attack":
        return rt.c_attack
    if kind == "support":
        return rt.c_support
    return 0.0


def action_list() -> dict[str, Any]:
    return {
        "actions": [
            {
                "name": name,
                "category": spec["category"],
                "description": spec["description"],
                "params": {
                    pname: {"type": kind, "required": required}
                    for pname, (kind, required) in spec["params"].items()
                },
            }
            for name, spec in ACTION_CATALOG.items()
        ]
    }


# -- observations ---------------------------------------------------------------


def estimate_band(current: int, maximum: int) -> str:
    pct = 100.0 * current / maximum
    if pct < 34.0:
        return "low"
    if pct <= 66.0:
        return "medium"
    return "high"


def terrain_blocks_fn(world: WorldState):
    """Vision blocker over terrain; cells off the map never block (the hex
    line between two in-bounds cells may clip the rectangle's edge)."""

    def blocks(c: HexCoord) -> bool:
        return in_bounds(c, world.terrain.width, world.terrain.height) and world.terrain.blocks_vision(c)

    return blocks


def visible_cells(world: WorldState, faction: str) -> set[HexCoord]:
    """Union of every owned unit's vision disk, line-of-sight filtered."""
    blocks = terrain_blocks_fn(world)
    seen: set[HexCoord] = set()
    for eid, comps in world.registry.query(Faction, Position, UnitStats):
        if comps[Faction].name != faction:
            continue
        pos = comps[Position].coord
        for cell in _vision_disk(world, pos, comps[UnitStats].vision_range):
            if cell in seen:
                continue
            if line_of_sight(pos, cell, blocks):
                seen.add(cell)
    return seen


def _vision_disk(world: WorldState, pos: HexCoord, radius: int) -> list[HexCoord]:
    from .hexes import cells_within

    return cells_within(pos, radius, world.terrain.width, world.terrain.height)


def _own_unit_record(world: WorldState, eid: int, level: str) -> dict[str, Any]:
    comps = world.registry.components(eid)
    record: dict[str, Any] = {
        "id": eid,
        "type": comps[UnitStats].unit_type,
        "position": comps[Position].coord.as_dict(),
        "unit_count": {
            "current": comps[UnitCount].current,
            "max": comps[UnitCount].max,
        },
    }
    if level in ("detailed", "tactical"):
        record["movement"] = {
            "current": comps[MovementPoints].current,
            "max": comps[MovementPoints].max,
        }
        record["action_points"] = {
            "current": comps[ActionPoints].current,
            "max": comps[ActionPoints].max,
        }
        record["combat"] = {
            "attack": comps[UnitStats].attack,
            "defense": comps[UnitStats].defense,
            "attack_range": comps[UnitStats].attack_range,
            "vision_range": comps[UnitStats].vision_range,
        }
        record["statuses"] = dict(sorted(comps[StatusEffects].active.items()))
        if world.mode == REAL_TIME:
            record["locked_until_ms"] = world.locks.get(eid, 0)
    return record


def build_observation(world: WorldState, faction: str, level: str = "basic") -> dict[str, Any]:
    """Fog-filtered faction observation.

    Levels only add detail about the observer's own side; enemy units always
    appear with banded count estimates, never exact numbers.
    """
    if faction not in world.factions:
        raise err.UnknownFaction(f"unknown faction {faction!r}")
    if level not in OBSERVATION_LEVELS:
        raise err.SchemaViolation(f"observation_level must be one of {OBSERVATION_LEVELS}")
    visible = visible_cells(world, faction)
    own_units = []
    for eid, comps in world.registry.query(Faction, Position, UnitStats, UnitCount):
        if comps[Faction].name != faction:
            continue
        record = _own_unit_record(world, eid, level)
        if level == "tactical":
            blocked = any(
                world.config.status_spec(tag).blocks_move
                for tag in comps[StatusEffects].active
            )
            record["reachable"] = (
                []
                if blocked
                else [
                    {"col": cell.col, "row": cell.row, "cost": cost}
                    for cell, cost in rules.reachable_tiles(world, eid)
                ]
            )
            record["in_range_enemy_ids"] = [
                other
                for other, oc in world.registry.query(Faction, Position)
                if oc[Faction].name != faction
                and oc[Position].coord in visible
                and hex_distance(comps[Position].coord, oc[Position].coord)
                <= comps[UnitStats].attack_range
            ]
        own_units.append(record)

    known_enemy_units = []
    for eid, comps in world.registry.query(Faction, Position, UnitStats, UnitCount):
        if comps[Faction].name == faction:
            continue
        if comps[Position].coord not in visible:
            continue
        known_enemy_units.append(
            {
                "id": eid,
                "type": comps[UnitStats].unit_type,
                "position": comps[Position].coord.as_dict(),
                "estimate_count": estimate_band(
                    comps[UnitCount].current, comps[UnitCount].max
                ),
            }
        )

    strategic_info: dict[str, Any] = {
        "turn_number": world.turn_number,
        "resources": dict(sorted(world.resources[faction].items())),
        "mode": world.mode,
        "map": {"width": world.terrain.width, "height": world.terrain.height},
    }
    if world.mode == TURN_BASED:
        strategic_info["active_faction"] = world.active_faction
    else:
        strategic_info["clock_ms"] = world.clock_ms

    return {
        "faction": faction,
        "own_units": own_units,
        "known_enemy_units": known_enemy_units,
        "strategic_info": strategic_info,
        "visible_tiles": [c.as_dict() for c in sorted(visible, key=lambda c: (c.col, c.row))],
    }


def unit_observation(world: WorldState, faction: str, unit_id: int, level: str) -> dict[str, Any]:
    """Single-unit view: the unit's record plus what that unit alone can see."""
    owner = world.registry.get(unit_id, Faction).name
    if owner != faction:
        raise err.NotYourUnit(f"unit {unit_id} belongs to {owner}")
    record = _own_unit_record(world, unit_id, level)
    doc = build_observation(world, faction, level)
    pos = world.registry.get(unit_id, Position).coord
    stats = world.registry.get(unit_id, UnitStats)
    blocks = terrain_blocks_fn(world)
    record["visible_tiles"] = [
        c.as_dict()
        for c in _vision_disk(world, pos, stats.vision_range)
        if line_of_sight(pos, c, blocks)
    ]
    record["known_enemy_units"] = [
        enemy
        for enemy in doc["known_enemy_units"]
        if hex_distance(pos, HexCoord(enemy["position"]["col"], enemy["position"]["row"]))
        <= stats.vision_range
    ]
    return record


def faction_state(
    world: WorldState, viewer: str, faction: str, outcome: Optional[rules.Outcome]
) -> dict[str, Any]:
    """Own faction: full status. Opponent: just the coarse match state."""
    alive = world.units_of(faction)
    if outcome is None:
        state = "active"
    elif outcome.winner is None:
        state = "draw"
    elif outcome.winner == faction:
        state = "victory"
    else:
        state = "eliminated" if not alive else "defeat"
    doc: dict[str, Any] = {"faction": faction, "state": state}
    if faction == viewer:
        doc["unit_count"] = len(alive)
        doc["units"] = sorted(alive)
        doc["soldiers"] = world.soldiers_of(faction)
        doc["surviving_fraction"] = world.surviving_fraction(faction)
        doc["construction_points"] = world.cp_pool[faction]
    return doc
