/**
 * Agent session over the websocket protocol: registration, the turn-gated
 * loop, and the self-throttled real-time loop.
 *
 * The turn-based loop is event-gated: it acts only when the server pushes an
 * observation at the agent's own turn_start, injects a temporal note into the
 * bounded history, sends the policy's batch (guaranteeing exactly one
 * end_turn), and suspends until the next activation. The real-time loop polls
 * observations and throttles itself with the same lock schedule the server
 * enforces, so lock rejections stay rare.
 */

import WebSocket from "ws";

import { ActionCall, ActionResult, Envelope, MsgType, Observation, decodeEnvelope, encodeEnvelope } from "./protocol.js";
import { Policy } from "./policy.js";
import { scanForStrategy } from "./strategy.js";

export interface ClientConfig {
  url: string;
  faction: string;
  agentId: string;
  modelId: string;
  historyWindow?: number; // exchanges kept in the rolling context
}

export interface SessionStats {
  total_calls: number;
  ok_calls: number;
  failed_calls: number;
  rejected_codes: Record<string, number>;
  retries: number;
  turns_played: number;
  end_turns_sent: number;
  unit_busy: number;
  gameplay_calls: number;
  server_report: unknown | null;
}

interface RealTimeParams {
  tick_ms: number;
  c_move: number;
  c_attack: number;
  c_support: number;
  mp_regen: number;
}

const HISTORY_DEFAULT = 8;

export class ClientSession {
  readonly config: ClientConfig;
  readonly history: string[] = [];
  readonly stats: SessionStats = {
    total_calls: 0,
    ok_calls: 0,
    failed_calls: 0,
    rejected_codes: {},
    retries: 0,
    turns_played: 0,
    end_turns_sent: 0,
    unit_busy: 0,
    gameplay_calls: 0,
    server_report: null,
  };
  gameOver: unknown | null = null;
  realTime: RealTimeParams | null = null;

  private ws: WebSocket | null = null;
  private seq = 0;
  private inbox: Envelope[] = [];
  private obsQueue: Observation[] = [];
  private waiters: ((env: Envelope) => void)[] = [];
  private closed = false;

  constructor(config: ClientConfig) {
    this.config = config;
  }

  private pushHistory(note: string): void {
    this.history.push(note);
    const window = this.config.historyWindow ?? HISTORY_DEFAULT;
    while (this.history.length > window) this.history.shift();
  }

  private send(msgType: MsgType, payload: unknown): number {
    const env: Envelope = {
      msg_type: msgType,
      sender: this.config.agentId,
      receiver: "server",
      timestamp: Date.now(),
      seq: this.seq++,
      payload,
    };
    this.ws!.send(encodeEnvelope(env));
    return env.seq;
  }

  private nextEnvelope(timeoutMs = 60_000): Promise<Envelope> {
    const queued = this.inbox.shift();
    if (queued !== undefined) return Promise.resolve(queued);
    return new Promise((resolve, reject) => {
      const waiter = (env: Envelope) => {
        clearTimeout(timer);
        resolve(env);
      };
      const timer = setTimeout(() => {
        // deregister so a later frame is not swallowed by a settled promise
        const at = this.waiters.indexOf(waiter);
        if (at >= 0) this.waiters.splice(at, 1);
        reject(new Error("timed out waiting for server"));
      }, timeoutMs);
      this.waiters.push(waiter);
    });
  }

  private dispatch(env: Envelope): void {
    const waiter = this.waiters.shift();
    if (waiter !== undefined) waiter(env);
    else this.inbox.push(env);
  }

  async connect(): Promise<void> {
    const ws = new WebSocket(this.config.url);
    this.ws = ws;
    ws.on("message", (data) => {
      try {
        this.dispatch(decodeEnvelope(data.toString()));
      } catch {
        // undecodable server frame: drop, the protocol is canonical JSON
      }
    });
    ws.on("close", () => {
      this.closed = true;
      const waiter = this.waiters.shift();
      if (waiter !== undefined) {
        waiter({
          msg_type: "ERROR",
          sender: "client",
          receiver: this.config.agentId,
          timestamp: Date.now(),
          seq: -1,
          payload: { code: "ConnectionClosed", message: "socket closed", spatial: false },
        });
      }
    });
    await new Promise<void>((resolve, reject) => {
      ws.once("open", () => resolve());
      ws.once("error", (exc) => reject(exc));
    });
    this.send("REGISTER", {
      faction: this.config.faction,
      agent_id: this.config.agentId,
      model_id: this.config.modelId,
    });
    const ack = await this.nextEnvelope();
    if (ack.msg_type !== "REGISTER_ACK") {
      throw new Error(`registration failed: ${JSON.stringify(ack.payload)}`);
    }
    const payload = ack.payload as { real_time?: RealTimeParams };
    this.realTime = payload.real_time ?? null;
    this.pushHistory(`registered as ${this.config.faction}`);
  }

  private recordResults(results: ActionResult[], batch: ActionCall[]): void {
    results.forEach((result, i) => {
      this.stats.total_calls += 1;
      const action = batch[i]?.action ?? "?";
      if (action !== "observation" && action !== "get_faction_state" && action !== "get_action_list") {
        this.stats.gameplay_calls += 1;
      }
      if (result.ok) {
        this.stats.ok_calls += 1;
      } else {
        this.stats.failed_calls += 1;
        const code = result.error_code ?? "Unknown";
        this.stats.rejected_codes[code] = (this.stats.rejected_codes[code] ?? 0) + 1;
        if (code === "UnitBusy") this.stats.unit_busy += 1;
      }
    });
  }

  /** Send a batch and wait for its ACTION_RESULT (other envelopes are queued).
   * If the match ends while waiting, the pending request is abandoned. */
  private async sendBatch(batch: ActionCall[]): Promise<ActionResult[]> {
    const seq = this.send("ACTION_REQUEST", { actions: batch });
    for (;;) {
      let env: Envelope;
      try {
        env = await this.nextEnvelope(5_000);
      } catch (exc) {
        if (this.gameOver !== null || this.closed) return [];
        throw exc;
      }
      if (env.msg_type === "ACTION_RESULT") {
        const payload = env.payload as { request_seq: number; results: ActionResult[] };
        if (payload.request_seq === seq) {
          this.recordResults(payload.results, batch);
          return payload.results;
        }
      } else {
        this.consumeAsync(env);
        if (this.gameOver !== null) return [];
      }
    }
  }

  private consumeAsync(env: Envelope): void {
    if (env.msg_type === "EVENT") {
      const payload = env.payload as { event: string; detail: unknown };
      if (payload.event === "game_end") this.gameOver = payload.detail;
      else if (payload.event === "turn_start") {
        const detail = payload.detail as { active_faction: string; turn_number: number };
        this.pushHistory(
          `turn ${detail.turn_number} started for ${detail.active_faction}; AP/MP restored`,
        );
      }
    } else if (env.msg_type === "STATS_REPORT") {
      this.stats.server_report = env.payload;
    } else if (env.msg_type === "OBSERVATION") {
      // the loops read these from their own queue; never recycled through the
      // envelope inbox (a resolved-promise recycle loop would starve the
      // event loop and the socket would never be read again)
      this.obsQueue.push(env.payload as Observation);
    }
  }

  /** Next server-pushed observation; null once the match is over. */
  private async nextObservation(timeoutMs = 60_000): Promise<Observation | null> {
    for (;;) {
      const queued = this.obsQueue.shift();
      if (queued !== undefined) return queued;
      if (this.gameOver !== null || this.closed) return null;
      let env: Envelope;
      try {
        env = await this.nextEnvelope(timeoutMs);
      } catch {
        return null;
      }
      this.consumeAsync(env);
    }
  }

  /**
   * Turn-gated loop: acts only when the server pushes the own-turn
   * observation; exactly one end_turn per own turn; stops on game_end.
   */
  async runTurnBased(policy: Policy): Promise<void> {
    while (this.gameOver === null && !this.closed) {
      const obs = await this.nextObservation();
      if (obs === null) break;
      this.pushHistory(
        `own activation: turn ${obs.strategic_info.turn_number}, ` +
          `${obs.own_units.length} units, ${obs.known_enemy_units.length} enemies known`,
      );
      const batch = await this.decideWithRetries(policy, obs);
      const withEnd = this.ensureSingleEndTurn(batch, obs.faction);
      this.stats.turns_played += 1;
      await this.sendBatch(withEnd);
    }
    await this.reportAndClose();
  }

  private ensureSingleEndTurn(batch: ActionCall[], faction: string): ActionCall[] {
    const withoutEnd = batch.filter((a) => a.action !== "end_turn");
    withoutEnd.push({ action: "end_turn", params: { faction } });
    this.stats.end_turns_sent += 1;
    return withoutEnd;
  }

  private async decideWithRetries(policy: Policy, obs: Observation): Promise<ActionCall[]> {
    for (let attempt = 0; ; attempt++) {
      try {
        return await policy(obs);
      } catch (exc) {
        this.stats.retries += 1;
        if (attempt >= 2) {
          // bounded retries exhausted: fall back to resting the first unit
          const fallback: ActionCall[] = [];
          if (obs.own_units.length > 0) {
            fallback.push({ action: "rest", params: { unit_id: obs.own_units[0].id } });
          }
          return fallback;
        }
      }
    }
  }

  /**
   * Real-time loop: poll observation, act for units the client believes are
   * free (server lock state plus a local ledger of locks this client just
   * caused), scan policy text for strategy signals off the action path.
   */
  async runRealTime(policy: Policy, pollMs = 200, maxMs = 600_000): Promise<void> {
    if (this.realTime === null) {
      throw new Error("server did not advertise real-time parameters");
    }
    const rt = this.realTime;
    const localLocks = new Map<number, number>(); // unit id -> sim ms when free
    const started = Date.now();
    while (this.gameOver === null && !this.closed && Date.now() - started < maxMs) {
      const results = await this.sendBatch([{ action: "observation", params: { observation_level: "tactical" } }]);
      if (this.gameOver !== null) break;
      const first = results[0];
      if (!first?.ok) continue;
      const obs = first.detail as Observation;
      const clock = obs.strategic_info.clock_ms ?? 0;
      const batch = (await this.decideWithRetries(policy, obs)).filter((call) => {
        const unitId = call.params.unit_id as number | undefined;
        if (unitId === undefined) return call.action !== "end_turn";
        const serverLock = obs.own_units.find((u) => u.id === unitId)?.locked_until_ms ?? 0;
        const localLock = localLocks.get(unitId) ?? 0;
        return clock >= serverLock && clock >= localLock;
      });
      if (batch.length > 0) {
        for (const call of batch) {
          const unitId = call.params.unit_id as number | undefined;
          if (unitId === undefined) continue;
          localLocks.set(unitId, clock + this.estimateLockMs(call, obs, rt));
        }
        await this.sendBatch(batch);
      }
      await new Promise((resolve) => setTimeout(resolve, pollMs));
    }
    await this.reportAndClose();
  }

  private estimateLockMs(call: ActionCall, obs: Observation, rt: RealTimeParams): number {
    if (call.action === "attack") return Math.round(rt.c_attack * 1000);
    if (call.action === "move") {
      const unit = obs.own_units.find((u) => u.id === call.params.unit_id);
      const target = call.params.target_position as { col: number; row: number };
      const tile = unit?.reachable?.find((t) => t.col === target.col && t.row === target.row);
      return Math.round(rt.c_move * (tile?.cost ?? 1) * 1000);
    }
    if (["rest", "occupy", "fortify", "skill"].includes(call.action)) {
      return Math.round(rt.c_support * 1000);
    }
    return 0;
  }

  /** Scan free text for strategic intent and report it without blocking. */
  reportStrategy(text: string): void {
    const signal = scanForStrategy(text);
    if (signal !== null && this.ws !== null && !this.closed) {
      this.send("ACTION_REQUEST", {
        actions: [
          {
            action: "strategy_ping",
            params: { faction: this.config.faction, score: signal.score, evidence: signal.evidence },
          },
        ],
      });
    }
  }

  private async reportAndClose(): Promise<void> {
    if (this.ws !== null && !this.closed) {
      try {
        this.send("STATS_REPORT", {
          total_calls: this.stats.total_calls,
          failed_calls: this.stats.failed_calls,
          retries: this.stats.retries,
          turns_played: this.stats.turns_played,
        });
        // drain briefly so the server's final stats report can land
        const until = Date.now() + 500;
        while (Date.now() < until && this.stats.server_report === null) {
          try {
            this.consumeAsync(await this.nextEnvelope(until - Date.now()));
          } catch {
            break;
          }
        }
        this.ws.close();
      } catch {
        // already gone
      }
    }
    this.closed = true;
  }
}
