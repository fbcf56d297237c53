/**
 * Prompt rendering: the structured observation becomes a deterministic text
 * context with the standing rules an agent needs (coordinates, the AP/MP
 * economy, the low-strength damage penalty, and the tool-call protocol).
 */

import { Observation } from "./protocol.js";

export const RULES_PREAMBLE = `Core Rules

1. Objectives & Factions
You command your faction in a 1v1 hexagonal wargame. Victory comes from
eliminating every opposing unit; if the horizon is reached first, the side
with the greater surviving soldier fraction wins.

2. Map & Coordinates
The board is a hex grid using flat-topped even-q offset coordinates (col,row):
col increases to the right, row increases upward. Distances are hex distances
(convert to axial and take the cube metric). Euclidean or Manhattan distances
are wrong and will produce illegal moves.

3. Tool Call Protocol
Every action and data request MUST be issued as a tool call from the catalog
(move, attack, rest, occupy, fortify, skill, observation, get_faction_state,
end_turn, get_action_list, register_agent_info, strategy_ping,
report_llm_stats). Do not invent game state: query observations before acting.

4. Resource Management
Each unit has 2 Action Points (AP) per turn; an attack costs 1 AP. Movement
spends Movement Points (MP) per entered tile, more on rough terrain. AP and MP
fully restore after end_turn.

5. Combat Mechanics
Attack power scales with remaining headcount (critical-mass effect). Units
below 30% strength suffer significant damage penalties; avoid sending lone,
depleted units into enemy lines.

6. Recommended Cycle
Observe (query state), Orient (identify threats), Decide (plan the batch),
Act (send tool calls), Assess (on failure, correct and retry).`;

function describeUnit(unit: Observation["own_units"][number]): string {
  const parts = [
    `#${unit.id} ${unit.type} at (col ${unit.position.col}, row ${unit.position.row})`,
    `soldiers ${unit.unit_count.current}/${unit.unit_count.max}`,
  ];
  if (unit.movement) parts.push(`MP ${unit.movement.current}/${unit.movement.max}`);
  if (unit.action_points) parts.push(`AP ${unit.action_points.current}/${unit.action_points.max}`);
  if (unit.combat) {
    parts.push(
      `attack ${unit.combat.attack} defense ${unit.combat.defense} range ${unit.combat.attack_range}`,
    );
  }
  if (unit.statuses && Object.keys(unit.statuses).length > 0) {
    parts.push(`statuses ${Object.keys(unit.statuses).sort().join(",")}`);
  }
  if (unit.in_range_enemy_ids && unit.in_range_enemy_ids.length > 0) {
    parts.push(`enemies in range: ${unit.in_range_enemy_ids.join(",")}`);
  }
  return "  - " + parts.join("; ");
}

export function renderPrompt(obs: Observation, history: string[] = []): string {
  const lines: string[] = [RULES_PREAMBLE, ""];
  const info = obs.strategic_info;
  lines.push(`You are the ${obs.faction} faction. Turn ${info.turn_number}.`);
  if (info.clock_ms !== undefined) lines.push(`Simulated clock: ${info.clock_ms} ms.`);
  const resources = Object.keys(info.resources)
    .sort()
    .map((k) => `${k} ${info.resources[k]}`)
    .join(", ");
  lines.push(`Resources: ${resources}.`);
  lines.push("");
  lines.push("Your units:");
  for (const unit of obs.own_units) lines.push(describeUnit(unit));
  lines.push("");
  if (obs.known_enemy_units.length === 0) {
    lines.push("No enemy units are currently known. Scout before committing.");
  } else {
    lines.push("Known enemy units (counts are fog-of-war estimates):");
    for (const enemy of obs.known_enemy_units) {
      lines.push(
        `  - #${enemy.id} ${enemy.type} at (col ${enemy.position.col}, row ${enemy.position.row}), strength ${enemy.estimate_count}`,
      );
    }
  }
  lines.push("");
  lines.push(`Visible tiles: ${obs.visible_tiles.length}.`);
  if (history.length > 0) {
    lines.push("");
    lines.push("Recent context:");
    for (const note of history) lines.push(`  * ${note}`);
  }
  return lines.join("\n");
}
