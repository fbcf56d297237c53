/** Envelope framing for the game server's websocket protocol. */

export type MsgType =
  | "OBSERVATION"
  | "ACTION_REQUEST"
  | "ACTION_RESULT"
  | "EVENT"
  | "REGISTER"
  | "REGISTER_ACK"
  | "ERROR"
  | "STATS_REPORT"
  | "PING";

export interface Envelope {
  msg_type: MsgType;
  sender: string;
  receiver: string;
  timestamp: number;
  seq: number;
  payload: unknown;
}

export interface ActionCall {
  action: string;
  params: Record<string, unknown>;
}

export interface ActionResult {
  ok: boolean;
  detail?: unknown;
  error_code?: string;
  spatial?: boolean;
  warnings?: string[];
}

export interface Observation {
  faction: string;
  own_units: OwnUnit[];
  known_enemy_units: EnemyUnit[];
  strategic_info: StrategicInfo;
  visible_tiles: { col: number; row: number }[];
}

export interface OwnUnit {
  id: number;
  type: string;
  position: { col: number; row: number };
  unit_count: { current: number; max: number };
  movement?: { current: number; max: number };
  action_points?: { current: number; max: number };
  combat?: { attack: number; defense: number; attack_range: number; vision_range: number };
  statuses?: Record<string, number>;
  locked_until_ms?: number;
  reachable?: { col: number; row: number; cost: number }[];
  in_range_enemy_ids?: number[];
}

export interface EnemyUnit {
  id: number;
  type: string;
  position: { col: number; row: number };
  estimate_count: "low" | "medium" | "high";
}

export interface StrategicInfo {
  turn_number: number;
  resources: Record<string, number>;
  mode: "turn_based" | "real_time";
  map: { width: number; height: number };
  active_faction?: string;
  clock_ms?: number;
}

const MSG_TYPES = new Set<string>([
  "OBSERVATION",
  "ACTION_REQUEST",
  "ACTION_RESULT",
  "EVENT",
  "REGISTER",
  "REGISTER_ACK",
  "ERROR",
  "STATS_REPORT",
  "PING",
]);

/** Canonical JSON: keys sorted recursively, compact separators. The server
 * accepts any valid JSON but emitting the canonical form keeps traffic
 * byte-reproducible for audits. */
export function canonicalJson(value: unknown): string {
  return JSON.stringify(sortKeys(value));
}

function sortKeys(value: unknown): unknown {
  if (Array.isArray(value)) return value.map(sortKeys);
  if (value !== null && typeof value === "object") {
    const src = value as Record<string, unknown>;
    const out: Record<string, unknown> = {};
    for (const key of Object.keys(src).sort()) out[key] = sortKeys(src[key]);
    return out;
  }
  if (typeof value === "number" && !Number.isFinite(value)) {
    throw new Error("non-finite numbers are not serializable");
  }
  return value;
}

export function encodeEnvelope(env: Envelope): string {
  return canonicalJson(env);
}

export function decodeEnvelope(raw: string): Envelope {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch (exc) {
    throw new Error(`malformed frame: ${exc}`);
  }
  if (doc === null || typeof doc !== "object" || Array.isArray(doc)) {
    throw new Error("envelope must be a JSON object");
  }
  const rec = doc as Record<string, unknown>;
  for (const field of ["msg_type", "sender", "receiver", "timestamp", "seq", "payload"]) {
    if (!(field in rec)) throw new Error(`envelope missing ${field}`);
  }
  if (!MSG_TYPES.has(String(rec.msg_type))) {
    throw new Error(`unknown msg_type ${rec.msg_type}`);
  }
  return rec as unknown as Envelope;
}
