/**
 * Tool-call extraction from model output.
 *
 * Accepts the shapes models actually produce: an OpenAI-style object with a
 * tool_calls array (arguments as objects or JSON strings), a bare array of
 * calls, a single call object, or any of those inside a fenced code block.
 * Failures are typed so the agent loop can build a corrective retry prompt.
 */

export type ParseFailureKind = "ParseFailure" | "UnknownTool" | "BadArguments";

export class ToolCallError extends Error {
  kind: ParseFailureKind;
  field?: string;

  constructor(kind: ParseFailureKind, message: string, field?: string) {
    super(message);
    this.kind = kind;
    this.field = field;
  }
}

export interface ToolCall {
  name: string;
  arguments: Record<string, unknown>;
}

/** Required/optional params per catalogued action (mirrors the server schema). */
export const TOOL_SCHEMAS: Record<string, { required: string[]; optional: string[] }> = {
  move: { required: ["unit_id", "target_position"], optional: [] },
  attack: { required: ["unit_id", "target_id"], optional: [] },
  rest: { required: ["unit_id"], optional: [] },
  occupy: { required: ["unit_id", "position"], optional: [] },
  fortify: { required: ["unit_id", "position"], optional: [] },
  skill: { required: ["unit_id", "skill_name"], optional: ["target"] },
  observation: { required: [], optional: ["unit_id", "observation_level"] },
  get_faction_state: { required: ["faction"], optional: [] },
  end_turn: { required: ["faction"], optional: [] },
  get_action_list: { required: [], optional: [] },
  register_agent_info: { required: ["faction", "agent_id", "model_id"], optional: [] },
  strategy_ping: { required: ["faction", "score", "evidence"], optional: [] },
  report_llm_stats: { required: [], optional: [] },
};

function extractJsonCandidates(text: string): string[] {
  const candidates: string[] = [];
  const fenced = [...text.matchAll(/```(?:json)?\s*([\s\S]*?)```/g)];
  for (const match of fenced) candidates.push(match[1].trim());
  const trimmed = text.trim();
  if (trimmed.startsWith("{") || trimmed.startsWith("[")) candidates.push(trimmed);
  // last resort: first {...} or [...] span
  const firstObj = trimmed.indexOf("{");
  const firstArr = trimmed.indexOf("[");
  const start = [firstObj, firstArr].filter((i) => i >= 0).sort((a, b) => a - b)[0];
  if (start !== undefined) {
    const open = trimmed[start];
    const close = open === "{" ? "}" : "]";
    const end = trimmed.lastIndexOf(close);
    if (end > start) candidates.push(trimmed.slice(start, end + 1));
  }
  return candidates;
}

function coerceCall(entry: unknown): ToolCall {
  if (entry === null || typeof entry !== "object" || Array.isArray(entry)) {
    throw new ToolCallError("ParseFailure", "tool call must be an object");
  }
  const rec = entry as Record<string, unknown>;
  // OpenAI nests under .function; flat {name, arguments} also accepted
  const fn = (rec.function ?? rec) as Record<string, unknown>;
  const name = fn.name ?? rec.name;
  if (typeof name !== "string") {
    throw new ToolCallError("ParseFailure", "tool call missing a name");
  }
  let args = fn.arguments ?? rec.arguments ?? rec.params ?? {};
  if (typeof args === "string") {
    try {
      args = JSON.parse(args);
    } catch {
      throw new ToolCallError("ParseFailure", `arguments for ${name} are not valid JSON`);
    }
  }
  if (args === null || typeof args !== "object" || Array.isArray(args)) {
    throw new ToolCallError("ParseFailure", `arguments for ${name} must be an object`);
  }
  return { name, arguments: args as Record<string, unknown> };
}

function validateCall(call: ToolCall): void {
  const schema = TOOL_SCHEMAS[call.name];
  if (schema === undefined) {
    throw new ToolCallError("UnknownTool", `no such tool: ${call.name}`);
  }
  for (const field of schema.required) {
    if (!(field in call.arguments)) {
      throw new ToolCallError("BadArguments", `${call.name} is missing ${field}`, field);
    }
  }
}

/**
 * Extract and validate tool calls from raw model output.
 * Throws ToolCallError with kind ParseFailure / UnknownTool / BadArguments.
 */
export function parseToolCalls(text: string): ToolCall[] {
  const candidates = extractJsonCandidates(text);
  if (candidates.length === 0) {
    throw new ToolCallError("ParseFailure", "no JSON found in model output");
  }
  let lastError: ToolCallError | null = null;
  for (const candidate of candidates) {
    let doc: unknown;
    try {
      doc = JSON.parse(candidate);
    } catch {
      lastError = lastError ?? new ToolCallError("ParseFailure", "candidate is not valid JSON");
      continue;
    }
    try {
      return interpret(doc);
    } catch (exc) {
      if (exc instanceof ToolCallError) {
        // schema-level failures are authoritative: the JSON parsed, the
        // content is wrong, so report it rather than trying weaker spans
        if (exc.kind !== "ParseFailure") throw exc;
        lastError = exc;
        continue;
      }
      throw exc;
    }
  }
  throw lastError ?? new ToolCallError("ParseFailure", "no usable JSON candidate");
}

function interpret(doc: unknown): ToolCall[] {
  let entries: unknown[];
  if (Array.isArray(doc)) {
    entries = doc;
  } else if (doc !== null && typeof doc === "object") {
    const rec = doc as Record<string, unknown>;
    if (Array.isArray(rec.tool_calls)) {
      entries = rec.tool_calls;
    } else if (Array.isArray(rec.actions)) {
      entries = rec.actions;
    } else if ("name" in rec || "function" in rec || "action" in rec) {
      entries = [normalizeActionShape(rec)];
    } else {
      throw new ToolCallError("ParseFailure", "JSON has no tool_calls, actions, or call shape");
    }
  } else {
    throw new ToolCallError("ParseFailure", "JSON is not an object or array");
  }
  const calls = entries.map((e) =>
    coerceCall(typeof e === "object" && e !== null ? normalizeActionShape(e as Record<string, unknown>) : e),
  );
  if (calls.length === 0) {
    throw new ToolCallError("ParseFailure", "tool call list is empty");
  }
  for (const call of calls) validateCall(call);
  return calls;
}

/** {action, params} is the wire shape; map it onto {name, arguments}. */
function normalizeActionShape(rec: Record<string, unknown>): Record<string, unknown> {
  if (typeof rec.action === "string" && !("name" in rec) && !("function" in rec)) {
    return { name: rec.action, arguments: rec.params ?? {} };
  }
  return rec;
}

export function toActionCalls(calls: ToolCall[]): { action: string; params: Record<string, unknown> }[] {
  return calls.map((c) => ({ action: c.name, params: c.arguments }));
}
