import { describe, expect, it } from "vitest";

import { parseToolCalls, toActionCalls, ToolCallError } from "../src/parser.js";

type Case =
  | { name: string; text: string; expect: { name: string; arguments: Record<string, unknown> }[] }
  | { name: string; text: string; fails: "ParseFailure" | "UnknownTool" | "BadArguments" };

const MOVE = { name: "move", arguments: { unit_id: 1, target_position: { col: 5, row: 7 } } };
const ATTACK = { name: "attack", arguments: { unit_id: 1, target_id: 204 } };
const END = { name: "end_turn", arguments: { faction: "wei" } };

const CASES: Case[] = [
  // --- well-formed: OpenAI tool_calls shapes -------------------------------
  { name: "tool_calls with object args", text: JSON.stringify({ tool_calls: [MOVE] }), expect: [MOVE] },
  {
    name: "tool_calls with stringified args",
    text: JSON.stringify({ tool_calls: [{ name: "move", arguments: JSON.stringify(MOVE.arguments) }] }),
    expect: [MOVE],
  },
  {
    name: "nested function shape",
    text: JSON.stringify({ tool_calls: [{ id: "c1", type: "function", function: { name: "attack", arguments: JSON.stringify(ATTACK.arguments) } }] }),
    expect: [ATTACK],
  },
  {
    name: "multiple calls in order",
    text: JSON.stringify({ tool_calls: [ATTACK, MOVE, END] }),
    expect: [ATTACK, MOVE, END],
  },
  { name: "bare array", text: JSON.stringify([MOVE, END]), expect: [MOVE, END] },
  { name: "single object call", text: JSON.stringify(MOVE), expect: [MOVE] },
  {
    name: "wire shape action/params",
    text: JSON.stringify({ actions: [{ action: "attack", params: ATTACK.arguments }] }),
    expect: [ATTACK],
  },
  {
    name: "single wire-shaped call",
    text: JSON.stringify({ action: "end_turn", params: { faction: "wei" } }),
    expect: [END],
  },
  {
    name: "fenced json block",
    text: "I will advance.\n```json\n" + JSON.stringify({ tool_calls: [MOVE] }) + "\n```",
    expect: [MOVE],
  },
  {
    name: "fenced block without language tag",
    text: "```\n" + JSON.stringify([ATTACK]) + "\n```",
    expect: [ATTACK],
  },
  {
    name: "prose before and after the json",
    text: "Thinking... the cavalry should strike.\n" + JSON.stringify({ tool_calls: [ATTACK] }) + "\nDone.",
    expect: [ATTACK],
  },
  {
    name: "rest call",
    text: JSON.stringify({ tool_calls: [{ name: "rest", arguments: { unit_id: 3 } }] }),
    expect: [{ name: "rest", arguments: { unit_id: 3 } }],
  },
  {
    name: "occupy call",
    text: JSON.stringify({ tool_calls: [{ name: "occupy", arguments: { unit_id: 3, position: { col: 2, row: 2 } } }] }),
    expect: [{ name: "occupy", arguments: { unit_id: 3, position: { col: 2, row: 2 } } }],
  },
  {
    name: "fortify call",
    text: JSON.stringify([{ name: "fortify", arguments: { unit_id: 3, position: { col: 2, row: 2 } } }]),
    expect: [{ name: "fortify", arguments: { unit_id: 3, position: { col: 2, row: 2 } } }],
  },
  {
    name: "skill with optional target",
    text: JSON.stringify({ tool_calls: [{ name: "skill", arguments: { unit_id: 3, skill_name: "fire_attack", target: 204 } }] }),
    expect: [{ name: "skill", arguments: { unit_id: 3, skill_name: "fire_attack", target: 204 } }],
  },
  {
    name: "skill without optional target",
    text: JSON.stringify({ tool_calls: [{ name: "skill", arguments: { unit_id: 3, skill_name: "ambush" } }] }),
    expect: [{ name: "skill", arguments: { unit_id: 3, skill_name: "ambush" } }],
  },
  {
    name: "observation without params",
    text: JSON.stringify({ tool_calls: [{ name: "observation", arguments: {} }] }),
    expect: [{ name: "observation", arguments: {} }],
  },
  {
    name: "observation with level",
    text: JSON.stringify({ tool_calls: [{ name: "observation", arguments: { observation_level: "tactical" } }] }),
    expect: [{ name: "observation", arguments: { observation_level: "tactical" } }],
  },
  {
    name: "get_faction_state",
    text: JSON.stringify({ tool_calls: [{ name: "get_faction_state", arguments: { faction: "shu" } }] }),
    expect: [{ name: "get_faction_state", arguments: { faction: "shu" } }],
  },
  {
    name: "get_action_list",
    text: JSON.stringify({ tool_calls: [{ name: "get_action_list", arguments: {} }] }),
    expect: [{ name: "get_action_list", arguments: {} }],
  },
  {
    name: "register_agent_info",
    text: JSON.stringify({ tool_calls: [{ name: "register_agent_info", arguments: { faction: "wei", agent_id: "a", model_id: "m" } }] }),
    expect: [{ name: "register_agent_info", arguments: { faction: "wei", agent_id: "a", model_id: "m" } }],
  },
  {
    name: "strategy_ping",
    text: JSON.stringify({ tool_calls: [{ name: "strategy_ping", arguments: { faction: "wei", score: 0.8, evidence: "flank" } }] }),
    expect: [{ name: "strategy_ping", arguments: { faction: "wei", score: 0.8, evidence: "flank" } }],
  },
  {
    name: "report_llm_stats free-form",
    text: JSON.stringify({ tool_calls: [{ name: "report_llm_stats", arguments: { tokens: 120 } }] }),
    expect: [{ name: "report_llm_stats", arguments: { tokens: 120 } }],
  },
  {
    name: "whitespace-padded json",
    text: "\n\n   " + JSON.stringify({ tool_calls: [END] }) + "   \n",
    expect: [END],
  },
  {
    name: "unicode in evidence",
    text: JSON.stringify({ tool_calls: [{ name: "strategy_ping", arguments: { faction: "wei", score: 0.5, evidence: "包围 maneuver" } }] }),
    expect: [{ name: "strategy_ping", arguments: { faction: "wei", score: 0.5, evidence: "包围 maneuver" } }],
  },
  {
    name: "crlf line endings",
    text: '```json\r\n{"tool_calls": [' + JSON.stringify(END) + "]}\r\n```",
    expect: [END],
  },
  {
    name: "params key instead of arguments",
    text: JSON.stringify({ tool_calls: [{ name: "rest", params: { unit_id: 9 } }] }),
    expect: [{ name: "rest", arguments: { unit_id: 9 } }],
  },
  {
    name: "extra unknown argument tolerated",
    text: JSON.stringify({ tool_calls: [{ name: "rest", arguments: { unit_id: 9, speed: "fast" } }] }),
    expect: [{ name: "rest", arguments: { unit_id: 9, speed: "fast" } }],
  },
  {
    name: "numeric strings preserved as given",
    text: JSON.stringify({ tool_calls: [{ name: "end_turn", arguments: { faction: "shu" } }] }),
    expect: [{ name: "end_turn", arguments: { faction: "shu" } }],
  },
  {
    name: "second fenced block is the valid one",
    text: "```\nnot json at all\n```\n```json\n" + JSON.stringify([MOVE]) + "\n```",
    expect: [MOVE],
  },

  // --- malformed: ParseFailure ---------------------------------------------
  { name: "plain prose", text: "I will move my cavalry north and attack.", fails: "ParseFailure" },
  { name: "empty string", text: "", fails: "ParseFailure" },
  { name: "truncated json", text: '{"tool_calls": [{"name": "move", "argu', fails: "ParseFailure" },
  { name: "json but no calls", text: JSON.stringify({ thoughts: "hmm" }), fails: "ParseFailure" },
  { name: "empty tool_calls", text: JSON.stringify({ tool_calls: [] }), fails: "ParseFailure" },
  { name: "tool_calls not an array", text: JSON.stringify({ tool_calls: "move" }), fails: "ParseFailure" },
  { name: "call missing name", text: JSON.stringify({ tool_calls: [{ arguments: { unit_id: 1 } }] }), fails: "ParseFailure" },
  { name: "arguments invalid json string", text: JSON.stringify({ tool_calls: [{ name: "move", arguments: "{col:" }] }), fails: "ParseFailure" },
  { name: "arguments is an array", text: JSON.stringify({ tool_calls: [{ name: "move", arguments: [1, 2] }] }), fails: "ParseFailure" },
  { name: "scalar json", text: "42", fails: "ParseFailure" },
  { name: "null json", text: "null", fails: "ParseFailure" },
  { name: "call entry is a string", text: JSON.stringify({ tool_calls: ["move"] }), fails: "ParseFailure" },

  // --- unknown tools ---------------------------------------------------------
  { name: "teleport is not a tool", text: JSON.stringify({ tool_calls: [{ name: "teleport", arguments: { unit_id: 1 } }] }), fails: "UnknownTool" },
  { name: "typo in tool name", text: JSON.stringify({ tool_calls: [{ name: "atack", arguments: ATTACK.arguments }] }), fails: "UnknownTool" },
  { name: "unknown tool after valid one", text: JSON.stringify({ tool_calls: [MOVE, { name: "summon_dragon", arguments: {} }] }), fails: "UnknownTool" },
  { name: "empty tool name", text: JSON.stringify({ tool_calls: [{ name: "", arguments: {} }] }), fails: "UnknownTool" },

  // --- bad arguments ----------------------------------------------------------
  { name: "move without unit_id", text: JSON.stringify({ tool_calls: [{ name: "move", arguments: { target_position: { col: 1, row: 1 } } }] }), fails: "BadArguments" },
  { name: "move without target", text: JSON.stringify({ tool_calls: [{ name: "move", arguments: { unit_id: 1 } }] }), fails: "BadArguments" },
  { name: "attack without target_id", text: JSON.stringify({ tool_calls: [{ name: "attack", arguments: { unit_id: 1 } }] }), fails: "BadArguments" },
  { name: "end_turn without faction", text: JSON.stringify({ tool_calls: [{ name: "end_turn", arguments: {} }] }), fails: "BadArguments" },
  { name: "skill without skill_name", text: JSON.stringify({ tool_calls: [{ name: "skill", arguments: { unit_id: 1 } }] }), fails: "BadArguments" },
  { name: "strategy_ping without score", text: JSON.stringify({ tool_calls: [{ name: "strategy_ping", arguments: { faction: "wei", evidence: "x" } }] }), fails: "BadArguments" },
  { name: "register without model_id", text: JSON.stringify({ tool_calls: [{ name: "register_agent_info", arguments: { faction: "wei", agent_id: "a" } }] }), fails: "BadArguments" },
];

describe("tool-call parser corpus", () => {
  it("has at least 50 cases", () => {
    expect(CASES.length).toBeGreaterThanOrEqual(50);
  });

  for (const testCase of CASES) {
    it(testCase.name, () => {
      if ("expect" in testCase) {
        const calls = parseToolCalls(testCase.text);
        expect(calls).toEqual(testCase.expect);
      } else {
        let thrown: unknown = null;
        try {
          parseToolCalls(testCase.text);
        } catch (exc) {
          thrown = exc;
        }
        expect(thrown).toBeInstanceOf(ToolCallError);
        expect((thrown as ToolCallError).kind).toBe(testCase.fails);
      }
    });
  }

  it("reports the missing field by name", () => {
    try {
      parseToolCalls(JSON.stringify({ tool_calls: [{ name: "move", arguments: { unit_id: 1 } }] }));
      throw new Error("should have thrown");
    } catch (exc) {
      expect((exc as ToolCallError).field).toBe("target_position");
    }
  });

  it("converts to wire action calls", () => {
    const calls = parseToolCalls(JSON.stringify({ tool_calls: [MOVE] }));
    expect(toActionCalls(calls)).toEqual([
      { action: "move", params: MOVE.arguments },
    ]);
  });
});
