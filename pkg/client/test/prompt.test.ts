import { describe, expect, it } from "vitest";

import { renderPrompt, RULES_PREAMBLE } from "../src/prompt.js";
import { scanForStrategy } from "../src/strategy.js";
import { Observation } from "../src/protocol.js";

const OBS: Observation = {
  faction: "shu",
  own_units: [
    {
      id: 101,
      type: "cavalry",
      position: { col: 5, row: 7 },
      unit_count: { current: 95, max: 100 },
      movement: { current: 3, max: 5 },
      action_points: { current: 2, max: 2 },
      combat: { attack: 85, defense: 40, attack_range: 1, vision_range: 4 },
      statuses: {},
      in_range_enemy_ids: [],
    },
  ],
  known_enemy_units: [
    { id: 204, type: "archer", position: { col: 6, row: 8 }, estimate_count: "high" },
  ],
  strategic_info: {
    turn_number: 12,
    resources: { manpower: 850, supplies: 400 },
    mode: "turn_based",
    map: { width: 15, height: 15 },
    active_faction: "shu",
  },
  visible_tiles: [
    { col: 5, row: 7 },
    { col: 6, row: 8 },
  ],
};

describe("prompt rendering", () => {
  it("carries every observation field into the text", () => {
    const text = renderPrompt(OBS);
    for (const needle of [
      "shu",
      "col 5",
      "row 7",
      "#101 cavalry",
      "95/100",
      "MP 3/5",
      "attack 85 defense 40",
      "#204 archer",
      "strength high",
      "Turn 12",
      "manpower 850",
      "supplies 400",
    ]) {
      expect(text, `missing: ${needle}`).toContain(needle);
    }
  });

  it("includes the standing rule sections", () => {
    const text = renderPrompt(OBS);
    expect(text).toContain("even-q offset");
    expect(text).toContain("2 Action Points");
    expect(text).toContain("attack costs 1 AP");
    expect(text).toContain("below 30% strength");
    expect(text).toContain("tool call");
    expect(text).toContain(RULES_PREAMBLE.split("\n")[0]);
  });

  it("states when no enemies are known", () => {
    const quiet = { ...OBS, known_enemy_units: [] };
    expect(renderPrompt(quiet)).toContain("No enemy units are currently known");
  });

  it("is deterministic for identical inputs", () => {
    expect(renderPrompt(OBS, ["note"])).toBe(renderPrompt(OBS, ["note"]));
  });

  it("appends bounded history notes", () => {
    const text = renderPrompt(OBS, ["turn 11 ended", "enemy spotted"]);
    expect(text).toContain("turn 11 ended");
    expect(text).toContain("enemy spotted");
  });
});

describe("strategy scanning", () => {
  it("detects focus fire with an evidence snippet", () => {
    const signal = scanForStrategy(
      "Priority target is the cavalry. Focus fire to eliminate it before it acts.",
    );
    expect(signal).not.toBeNull();
    expect(signal!.score).toBeGreaterThan(0.8);
    expect(signal!.evidence.toLowerCase()).toContain("focus fire");
  });

  it("returns null on bland text", () => {
    expect(scanForStrategy("I will move a unit somewhere.")).toBeNull();
  });

  it("prefers the strongest keyword", () => {
    const signal = scanForStrategy("We should withdraw and then encircle them.");
    expect(signal!.score).toBe(0.85);
  });
});
