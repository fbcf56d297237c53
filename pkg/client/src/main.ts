/**
 * Runnable agent: connects to a game server and plays a faction.
 *
 *   node dist/main.js --url ws://127.0.0.1:8765/ws/default --faction wei \
 *        --policy greedy [--mode turn|real] [--stats-out stats.json]
 *
 * Policies: greedy (scripted), llm (requires HEXARENA_LLM_URL/_MODEL env).
 */

import { writeFileSync } from "node:fs";

import { ClientSession } from "./client.js";
import { llmConfigFromEnv, llmPolicy } from "./llm.js";
import { Policy, scriptedGreedy } from "./policy.js";

function argValue(flag: string, fallback?: string): string | undefined {
  const at = process.argv.indexOf(flag);
  if (at >= 0 && at + 1 < process.argv.length) return process.argv[at + 1];
  return fallback;
}

async function main(): Promise<number> {
  const url = argValue("--url", "ws://127.0.0.1:8765/ws/default")!;
  const faction = argValue("--faction", "wei")!;
  const policyName = argValue("--policy", "greedy")!;
  const mode = argValue("--mode", "turn")!;
  const statsOut = argValue("--stats-out");

  let policy: Policy;
  if (policyName === "greedy") {
    policy = scriptedGreedy();
  } else if (policyName === "llm") {
    const config = llmConfigFromEnv();
    if (config === null) {
      console.error("llm policy needs HEXARENA_LLM_URL and HEXARENA_LLM_MODEL");
      return 1;
    }
    policy = llmPolicy(config);
  } else {
    console.error(`unknown policy ${policyName}`);
    return 1;
  }

  const session = new ClientSession({
    url,
    faction,
    agentId: `${policyName}-${faction}`,
    modelId: policyName,
  });
  await session.connect();
  if (mode === "real") {
    await session.runRealTime(policy);
  } else {
    await session.runTurnBased(policy);
  }
  const summary = {
    faction,
    policy: policyName,
    stats: session.stats,
    outcome: session.gameOver,
  };
  if (statsOut) writeFileSync(statsOut, JSON.stringify(summary, null, 2) + "\n");
  console.log(JSON.stringify(summary));
  return 0;
}

main().then(
  (code) => process.exit(code),
  (exc) => {
    console.error(String(exc));
    process.exit(1);
  },
);
