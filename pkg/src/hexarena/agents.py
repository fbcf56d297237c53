"""Deterministic scripted agents.

Policies are pure decision functions over observation documents: they never
touch the world, and a fixed (policy, seed, observation stream) triple always
reproduces the same action stream. Turn-based batches always finish with
exactly one end_turn.

The greedy decision procedure is deliberately specified to the last tie-break
because protocol clients re-implement it for parity testing:

  per own unit, ascending id, skipping units without AP (turn-based) or under
  an action lock (real-time):
    1. if any visible enemy is within attack range, attack the one minimizing
       (hex distance, id);
    2. otherwise pick a goal: the visible enemy minimizing (distance, id),
       else the remembered enemy position minimizing (distance, col, row),
       else the map center;
    3. move to the reachable tile (minus tiles already claimed this batch)
       minimizing (hex distance to goal, path cost, col, row), but only when
       that strictly improves on the unit's current distance to the goal.
  memory: every visible enemy updates its last-seen entry; an entry whose
  tile is currently visible but empty of that enemy is dropped.
"""

from __future__ import annotations

import random
from typing import Any, Optional

from .hexes import HexCoord, hex_distance, hex_line

BAND_RANK = {"low": 0, "medium": 1, "high": 2}


def _pos(doc: dict[str, Any]) -> HexCoord:
    return HexCoord(doc["position"]["col"], doc["position"]["row"])


def _is_real_time(obs: dict[str, Any]) -> bool:
    return obs["strategic_info"]["mode"] == "real_time"


def _unit_available(unit: dict[str, Any], obs: dict[str, Any]) -> bool:
    if _is_real_time(obs):
        locked_until = unit.get("locked_until_ms", 0)
        return obs["strategic_info"].get("clock_ms", 0) >= locked_until
    return unit.get("action_points", {}).get("current", 1) >= 1


def _nearest_enemy(unit_pos: HexCoord, enemies: list[dict]) -> Optional[dict]:
    if not enemies:
        return None
    return min(enemies, key=lambda e: (hex_distance(unit_pos, _pos(e)), e["id"]))


class RandomPolicy:
    """Uniform sampling over legal-looking unit actions, then end_turn."""

    def __init__(self, seed: int):
        self.name = f"random:{seed}"
        self.rng = random.Random(seed)

    def decide(self, obs: dict[str, Any]) -> list[dict[str, Any]]:
        batch: list[dict[str, Any]] = []
        taken = {(u["position"]["col"], u["position"]["row"]) for u in obs["own_units"]}
        for unit in obs["own_units"]:
            if not _unit_available(unit, obs):
                continue
            options: list[tuple[str, Any]] = [("pass", None)]
            for enemy_id in unit.get("in_range_enemy_ids", []):
                options.append(("attack", enemy_id))
            for tile in unit.get("reachable", []):
                if (tile["col"], tile["row"]) not in taken:
                    options.append(("move", (tile["col"], tile["row"])))
            kind, arg = self.rng.choice(options)
            if kind == "attack":
                batch.append(
                    {"action": "attack", "params": {"unit_id": unit["id"], "target_id": arg}}
                )
            elif kind == "move":
                col, row = arg
                taken.add(arg)
                batch.append(
                    {
                        "action": "move",
                        "params": {
                            "unit_id": unit["id"],
                            "target_position": {"col": col, "row": row},
                        },
                    }
                )
        if not _is_real_time(obs):
            batch.append({"action": "end_turn", "params": {"faction": obs["faction"]}})
        return batch


class GreedyPolicy:
    """Attack the nearest visible enemy, otherwise close the distance."""

    def __init__(self, seed: int = 0):
        self.name = f"greedy:{seed}"
        self.last_seen: dict[int, tuple[int, int]] = {}

    def _update_memory(self, obs: dict[str, Any]) -> None:
        visible = {(t["col"], t["row"]) for t in obs["visible_tiles"]}
        now = {e["id"]: (e["position"]["col"], e["position"]["row"])
               for e in obs["known_enemy_units"]}
        self.last_seen.update(now)
        for enemy_id, cell in list(self.last_seen.items()):
            if enemy_id not in now and cell in visible:
                del self.last_seen[enemy_id]

    def _goal_for(self, unit_pos: HexCoord, obs: dict[str, Any]) -> HexCoord:
        enemy = _nearest_enemy(unit_pos, obs["known_enemy_units"])
        if enemy is not None:
            return _pos(enemy)
        if self.last_seen:
            col, row = min(
                self.last_seen.values(),
                key=lambda cell: (hex_distance(unit_pos, HexCoord(*cell)), cell[0], cell[1]),
            )
            return HexCoord(col, row)
        grid = obs["strategic_info"]["map"]
        return HexCoord(grid["width"] // 2, grid["height"] // 2)

    def decide(self, obs: dict[str, Any]) -> list[dict[str, Any]]:
        self._update_memory(obs)
        enemies_by_id = {e["id"]: e for e in obs["known_enemy_units"]}
        batch: list[dict[str, Any]] = []
        taken = {(u["position"]["col"], u["position"]["row"]) for u in obs["own_units"]}
        for unit in obs["own_units"]:
            if not _unit_available(unit, obs):
                continue
            unit_pos = _pos(unit)
            in_range = [
                enemies_by_id[i] for i in unit.get("in_range_enemy_ids", []) if i in enemies_by_id
            ]
            target = _nearest_enemy(unit_pos, in_range)
            if target is not None:
                batch.append(
                    {
                        "action": "attack",
                        "params": {"unit_id": unit["id"], "target_id": target["id"]},
                    }
                )
                continue
            goal = self._goal_for(unit_pos, obs)
            move = _step_toward(unit, goal, taken)
            if move is not None:
                batch.append(move)
        if not _is_real_time(obs):
            batch.append({"action": "end_turn", "params": {"faction": obs["faction"]}})
        return batch


def _step_toward(
    unit: dict[str, Any], goal: HexCoord, taken: set[tuple[int, int]]
) -> Optional[dict[str, Any]]:
    """Best reachable tile toward goal; None when no tile strictly improves."""
    unit_pos = _pos(unit)
    best = None
    for tile in unit.get("reachable", []):
        cell = (tile["col"], tile["row"])
        if cell in taken:
            continue
        key = (
            hex_distance(HexCoord(*cell), goal),
            tile["cost"],
            tile["col"],
            tile["row"],
        )
        if best is None or key < best[0]:
            best = (key, cell)
    if best is None or best[0][0] >= hex_distance(unit_pos, goal):
        return None
    taken.add(best[1])
    return {
        "action": "move",
        "params": {
            "unit_id": unit["id"],
            "target_position": {"col": best[1][0], "row": best[1][1]},
        },
    }


class KitingPolicy:
    """Hit-and-run micro against one-action-per-unit opponents.

    Skirmishers (archers and cavalry) strike the highest-threat target and
    fall back out of contact; infantry screens between the archers and the
    nearest threat; units below 30 percent strength withdraw toward the start
    zone instead of fighting.
    """

    RETREAT_RATIO = 0.3
    DANGER_RANGE = 2

    def __init__(self, seed: int = 0):
        self.name = f"kiting:{seed}"
        self.home: Optional[tuple[int, int]] = None

    def decide(self, obs: dict[str, Any]) -> list[dict[str, Any]]:
        if self.home is None and obs["own_units"]:
            anchor = min(obs["own_units"], key=lambda u: u["id"])
            self.home = (anchor["position"]["col"], anchor["position"]["row"])
        enemies = obs["known_enemy_units"]
        enemies_by_id = {e["id"]: e for e in enemies}
        batch: list[dict[str, Any]] = []
        taken = {(u["position"]["col"], u["position"]["row"]) for u in obs["own_units"]}
        for unit in obs["own_units"]:
            if not _unit_available(unit, obs):
                continue
            unit_pos = _pos(unit)
            counts = unit["unit_count"]
            hurt = counts["current"] / counts["max"] < self.RETREAT_RATIO
            if hurt and self.home is not None:
                move = _step_toward(unit, HexCoord(*self.home), taken)
                if move is not None:
                    batch.append(move)
                continue
            in_range = [
                enemies_by_id[i] for i in unit.get("in_range_enemy_ids", []) if i in enemies_by_id
            ]
            if not enemies:
                # no contact yet: probe toward the map center
                grid = obs["strategic_info"]["map"]
                center = HexCoord(grid["width"] // 2, grid["height"] // 2)
                move = _step_toward(unit, center, taken)
                if move is not None:
                    batch.append(move)
            elif unit["type"] == "infantry":
                batch.extend(
                    self._screen_actions(unit, unit_pos, in_range, enemies, obs, taken)
                )
            else:
                batch.extend(
                    self._skirmish_actions(unit, unit_pos, in_range, enemies, taken)
                )
        if not _is_real_time(obs):
            batch.append({"action": "end_turn", "params": {"faction": obs["faction"]}})
        return batch

    @staticmethod
    def _focus_target(unit_pos, candidates):
        """Enemy cavalry is the priority threat (it is the only catcher);
        then the weakest band, then nearest, then lowest id."""
        return min(
            candidates,
            key=lambda e: (
                0 if e["type"] == "cavalry" else 1,
                BAND_RANK.get(e["estimate_count"], 2),
                hex_distance(unit_pos, _pos(e)),
                e["id"],
            ),
        )

    # how far each enemy type can strike from where it stands now
    THREAT_RANGE = {"archer": 2}

    @classmethod
    def _safety(cls, cell: HexCoord, enemies) -> int:
        """Margin beyond every enemy's strike radius; >= 1 means untouchable
        by opponents that only attack what is in range at their turn start."""
        return min(
            hex_distance(cell, _pos(e)) - cls.THREAT_RANGE.get(e["type"], 1)
            for e in enemies
        )

    def _skirmish_actions(self, unit, unit_pos, in_range, enemies, taken):
        """Strike, then end the turn outside everyone's strike radius."""
        actions = []
        if in_range:
            target = self._focus_target(unit_pos, in_range)
            actions.append(
                {"action": "attack", "params": {"unit_id": unit["id"], "target_id": target["id"]}}
            )
        if self._safety(unit_pos, enemies) < 1:
            move = self._retreat_move(unit, unit_pos, enemies, taken)
            if move is not None:
                actions.append(move)
        elif not in_range:
            move = self._approach_move(unit, unit_pos, enemies, taken)
            if move is not None:
                actions.append(move)
        return actions

    def _retreat_move(self, unit, unit_pos, enemies, taken):
        """Maximize the safety margin, leaning toward home ground."""
        home = HexCoord(*self.home) if self.home else unit_pos
        current = self._safety(unit_pos, enemies)
        best = None
        for tile in unit.get("reachable", []):
            cell = (tile["col"], tile["row"])
            if cell in taken:
                continue
            coord = HexCoord(*cell)
            key = (
                -self._safety(coord, enemies),
                hex_distance(coord, home),
                tile["cost"],
                tile["col"],
                tile["row"],
            )
            if best is None or key < best[0]:
                best = (key, cell)
        if best is None or -best[0][0] <= current:
            return None
        taken.add(best[1])
        return {
            "action": "move",
            "params": {
                "unit_id": unit["id"],
                "target_position": {"col": best[1][0], "row": best[1][1]},
            },
        }

    def _approach_move(self, unit, unit_pos, enemies, taken):
        """Close on the focus target without entering anyone's strike radius."""
        target = self._focus_target(unit_pos, enemies)
        goal = _pos(target)
        best = None
        for tile in unit.get("reachable", []):
            cell = (tile["col"], tile["row"])
            if cell in taken:
                continue
            coord = HexCoord(*cell)
            if self._safety(coord, enemies) < 1:
                continue
            key = (hex_distance(coord, goal), tile["cost"], tile["col"], tile["row"])
            if best is None or key < best[0]:
                best = (key, cell)
        if best is None or best[0][0] >= hex_distance(unit_pos, goal):
            return None
        taken.add(best[1])
        return {
            "action": "move",
            "params": {
                "unit_id": unit["id"],
                "target_position": {"col": best[1][0], "row": best[1][1]},
            },
        }

    def _screen_actions(self, unit, unit_pos, in_range, enemies, obs, taken):
        if in_range:
            target = self._focus_target(unit_pos, in_range)
            return [
                {"action": "attack", "params": {"unit_id": unit["id"], "target_id": target["id"]}}
            ]
        screen = self._screen_move(unit, enemies, obs, taken)
        if screen is not None:
            return [screen]
        threat = _nearest_enemy(unit_pos, enemies)
        if threat is not None:
            move = _step_toward(unit, _pos(threat), taken)
            if move is not None:
                return [move]
        return []

    def _screen_move(self, unit, enemies, obs, taken):
        """Place the unit on the line between the most threatened own archer
        and that archer's nearest enemy."""
        if not enemies:
            return None
        archers = [
            u
            for u in obs["own_units"]
            if u.get("combat", {}).get("attack_range", 1) >= 2 and u["id"] != unit["id"]
        ]
        if not archers:
            return None
        scored = []
        for archer in archers:
            threat = _nearest_enemy(_pos(archer), enemies)
            scored.append(
                (hex_distance(_pos(archer), _pos(threat)), archer["id"], archer, threat)
            )
        _, _, archer, threat = min(scored, key=lambda s: (s[0], s[1]))
        line_cells = {
            (c.col, c.row) for c in hex_line(_pos(archer), _pos(threat))[1:-1]
        }
        if not line_cells:
            return None
        best = None
        for tile in unit.get("reachable", []):
            cell = (tile["col"], tile["row"])
            if cell in taken or cell not in line_cells:
                continue
            # stand at the front of the line, between the threat and the archer
            key = (
                hex_distance(HexCoord(*cell), _pos(threat)),
                tile["cost"],
                tile["col"],
                tile["row"],
            )
            if best is None or key < best[0]:
                best = (key, cell)
        if best is None:
            return None
        taken.add(best[1])
        return {
            "action": "move",
            "params": {
                "unit_id": unit["id"],
                "target_position": {"col": best[1][0], "row": best[1][1]},
            },
        }


POLICY_KINDS = {"random": RandomPolicy, "greedy": GreedyPolicy, "kiting": KitingPolicy}


def make_policy(spec: str):
    """Parse "kind:seed" (seed optional) into a policy instance."""
    kind, _, seed_text = spec.partition(":")
    if kind not in POLICY_KINDS:
        raise ValueError(f"unknown policy {kind!r}; expected one of {sorted(POLICY_KINDS)}")
    seed = int(seed_text) if seed_text else 0
    return POLICY_KINDS[kind](seed)
