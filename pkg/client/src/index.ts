export { ClientSession } from "./client.js";
export type { ClientConfig, SessionStats } from "./client.js";
export { scriptedGreedy, replayPolicy } from "./policy.js";
export type { Policy } from "./policy.js";
export { renderPrompt, RULES_PREAMBLE } from "./prompt.js";
export { parseToolCalls, toActionCalls, ToolCallError, TOOL_SCHEMAS } from "./parser.js";
export type { ToolCall, ParseFailureKind } from "./parser.js";
export { scanForStrategy, DEFAULT_KEYWORDS } from "./strategy.js";
export { hexDistance, offsetToAxial, axialToOffset } from "./hex.js";
export { encodeEnvelope, decodeEnvelope, canonicalJson } from "./protocol.js";
export type { Envelope, Observation, ActionCall, ActionResult } from "./protocol.js";
export { llmPolicy, llmConfigFromEnv } from "./llm.js";
