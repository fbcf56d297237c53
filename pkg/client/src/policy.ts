/**
 * Policy seam: an async function from observation to an action batch.
 *
 * Three bundled implementations:
 *  - scriptedGreedy: byte-for-byte mirror of the server's builtin greedy
 *    (used for protocol parity tests), including every tie-break;
 *  - replayPolicy: feeds canned model outputs through the tool-call parser;
 *  - llm.ts provides an optional chat-completions adapter with the same seam.
 */

import { hexDistance, tupleLess, OffsetCoord } from "./hex.js";
import { ActionCall, EnemyUnit, Observation, OwnUnit } from "./protocol.js";

export type Policy = (obs: Observation) => Promise<ActionCall[]>;

function pos(u: { position: { col: number; row: number } }): OffsetCoord {
  return { col: u.position.col, row: u.position.row };
}

function isRealTime(obs: Observation): boolean {
  return obs.strategic_info.mode === "real_time";
}

function unitAvailable(unit: OwnUnit, obs: Observation): boolean {
  if (isRealTime(obs)) {
    return (obs.strategic_info.clock_ms ?? 0) >= (unit.locked_until_ms ?? 0);
  }
  return (unit.action_points?.current ?? 1) >= 1;
}

function nearestEnemy(from: OffsetCoord, enemies: EnemyUnit[]): EnemyUnit | null {
  let best: EnemyUnit | null = null;
  let bestKey: number[] | null = null;
  for (const enemy of enemies) {
    const key = [hexDistance(from, pos(enemy)), enemy.id];
    if (bestKey === null || tupleLess(key, bestKey)) {
      best = enemy;
      bestKey = key;
    }
  }
  return best;
}

/**
 * Greedy decision procedure, identical to the server's builtin:
 * per own unit in ascending id (skipping units without AP in turn-based play,
 * or locked units in real time): attack the in-range enemy minimizing
 * (distance, id); otherwise pick a goal (nearest visible enemy by
 * (distance, id), else remembered enemy position by (distance, col, row),
 * else the map center) and move to the reachable tile minimizing
 * (distance-to-goal, cost, col, row) when it strictly improves the distance.
 * Memory keeps the last seen position per enemy id and drops entries whose
 * tile is visible but empty.
 */
export function scriptedGreedy(): Policy {
  const lastSeen = new Map<number, [number, number]>();

  return async (obs: Observation): Promise<ActionCall[]> => {
    const visible = new Set(obs.visible_tiles.map((t) => `${t.col},${t.row}`));
    const now = new Map<number, [number, number]>();
    for (const enemy of obs.known_enemy_units) {
      now.set(enemy.id, [enemy.position.col, enemy.position.row]);
      lastSeen.set(enemy.id, [enemy.position.col, enemy.position.row]);
    }
    for (const [id, cell] of [...lastSeen.entries()]) {
      if (!now.has(id) && visible.has(`${cell[0]},${cell[1]}`)) {
        lastSeen.delete(id);
      }
    }

    const enemiesById = new Map(obs.known_enemy_units.map((e) => [e.id, e]));
    const batch: ActionCall[] = [];
    const taken = new Set(obs.own_units.map((u) => `${u.position.col},${u.position.row}`));

    for (const unit of obs.own_units) {
      if (!unitAvailable(unit, obs)) continue;
      const unitPos = pos(unit);
      const inRange = (unit.in_range_enemy_ids ?? [])
        .map((id) => enemiesById.get(id))
        .filter((e): e is EnemyUnit => e !== undefined);
      const target = nearestEnemy(unitPos, inRange);
      if (target !== null) {
        batch.push({ action: "attack", params: { unit_id: unit.id, target_id: target.id } });
        continue;
      }
      const goal = goalFor(unitPos, obs, lastSeen);
      const move = stepToward(unit, goal, taken);
      if (move !== null) batch.push(move);
    }

    if (!isRealTime(obs)) {
      batch.push({ action: "end_turn", params: { faction: obs.faction } });
    }
    return batch;
  };
}

function goalFor(
  unitPos: OffsetCoord,
  obs: Observation,
  lastSeen: Map<number, [number, number]>,
): OffsetCoord {
  const enemy = nearestEnemy(unitPos, obs.known_enemy_units);
  if (enemy !== null) return pos(enemy);
  if (lastSeen.size > 0) {
    let best: [number, number] | null = null;
    let bestKey: number[] | null = null;
    for (const cell of lastSeen.values()) {
      const key = [hexDistance(unitPos, { col: cell[0], row: cell[1] }), cell[0], cell[1]];
      if (bestKey === null || tupleLess(key, bestKey)) {
        best = cell;
        bestKey = key;
      }
    }
    return { col: best![0], row: best![1] };
  }
  const grid = obs.strategic_info.map;
  return { col: Math.floor(grid.width / 2), row: Math.floor(grid.height / 2) };
}

function stepToward(
  unit: OwnUnit,
  goal: OffsetCoord,
  taken: Set<string>,
): ActionCall | null {
  const unitPos = pos(unit);
  let best: { col: number; row: number } | null = null;
  let bestKey: number[] | null = null;
  for (const tile of unit.reachable ?? []) {
    const cellKey = `${tile.col},${tile.row}`;
    if (taken.has(cellKey)) continue;
    const key = [
      hexDistance({ col: tile.col, row: tile.row }, goal),
      tile.cost,
      tile.col,
      tile.row,
    ];
    if (bestKey === null || tupleLess(key, bestKey)) {
      best = { col: tile.col, row: tile.row };
      bestKey = key;
    }
  }
  if (best === null || bestKey![0] >= hexDistance(unitPos, goal)) return null;
  taken.add(`${best.col},${best.row}`);
  return {
    action: "move",
    params: { unit_id: unit.id, target_position: { col: best.col, row: best.row } },
  };
}

/** Feeds pre-recorded model outputs through a render/parse pipeline. */
export function replayPolicy(
  outputs: string[],
  parse: (text: string) => ActionCall[],
): Policy {
  let index = 0;
  return async (): Promise<ActionCall[]> => {
    const text = outputs[Math.min(index, outputs.length - 1)];
    index += 1;
    return parse(text);
  };
}
