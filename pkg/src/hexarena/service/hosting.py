"""Hosted matches: the bridge between websocket sessions and the engine.

Every match has exactly one scheduler task that owns the world; connection
readers only decode and enqueue, so all mutations stay single-writer. Builtin
policies may hold one or both factions, acting inline on the scheduler task.
"""

from __future__ import annotations

import asyncio
import time
from typing import Any, Optional

from .. import errors as err
from ..actions import Executor, build_observation
from ..agents import make_policy
from ..match import MatchConfig, MatchRecorder, build_world, session_stats
from ..protocol import (
    SERVER_ID,
    AgentSession,
    Envelope,
    MsgType,
    SessionHub,
    error_payload,
    now_ms,
)
from ..world import TURN_BASED, snapshot_digest

HEARTBEAT_INTERVAL_MS = 10_000
HEARTBEAT_MISS_LIMIT = 3


class HostedMatch:
    """One live match: world, hub, scheduler queue, and builtin opponents."""

    def __init__(self, match_id: str, config: MatchConfig, builtin: dict[str, str]):
        self.match_id = match_id
        self.config = config
        self.world = build_world(config)
        self.recorder = MatchRecorder(self.world)
        self.hub = SessionHub(self.world.factions)
        self.executor = Executor(self.world, self.hub, self.recorder)
        self.builtin = {
            faction: make_policy(spec) for faction, spec in builtin.items()
        }
        for faction, policy in self.builtin.items():
            self.hub.register(
                faction, agent_id=f"builtin:{policy.name}", model_id=policy.name,
                send=lambda env: None,
            )
        self.queue: asyncio.Queue[tuple[AgentSession, Envelope]] = asyncio.Queue()
        self.state = "waiting"
        self.registration_event = asyncio.Event()
        self.started_event = asyncio.Event()
        self.finished_event = asyncio.Event()
        self._task: Optional[asyncio.Task] = None
        self.recorder.record_header(
            {
                "mode": config.mode,
                "seed": config.seed,
                "observation_level": config.observation_level,
                "scenario": _scenario_dict(config),
                "agents": {f: p.name for f, p in self.builtin.items()},
            }
        )

    @property
    def human_factions(self) -> set[str]:
        return set(self.world.factions) - set(self.builtin)

    def ready(self) -> bool:
        return self.hub.all_registered(set(self.world.factions))

    # -- scheduler ------------------------------------------------------------

    def ensure_task(self) -> None:
        if self._task is None:
            runner = self._run_turn_based if self.config.mode == TURN_BASED else self._run_real_time
            self._task = asyncio.create_task(runner())

    async def _wait_ready(self) -> None:
        while not self.ready():
            await self.registration_event.wait()
            self.registration_event.clear()
        self.state = "running"
        self.started_event.set()

    async def _run_turn_based(self) -> None:
        await self._wait_ready()
        self.executor.emit_turn_events()
        self._push_observation(self.world.active_faction)
        await self._drive_builtin_turns()
        while self.executor.outcome is None:
            session, env = await self.queue.get()
            self._handle_gameplay(session, env)
            if self.executor.outcome is None:
                await self._drive_builtin_turns()
        await self._finish()

    async def _run_real_time(self) -> None:
        await self._wait_ready()
        self.executor.emit_turn_events()
        for faction in self.human_factions:
            self._push_observation(faction)
        rt = self.config.scenario.real_time
        from ..match import _regen_mp, _rt_periodic

        regen = int(round(rt.mp_regen * rt.tick_ms))
        while self.executor.outcome is None:
            tick_started = time.monotonic()
            self.world.clock_ms += rt.tick_ms
            _regen_mp(self.world, regen)
            _rt_periodic(self.world, rt)
            while not self.queue.empty():
                session, env = self.queue.get_nowait()
                self._handle_gameplay(session, env, at_ms=self.world.clock_ms)
                if self.executor.outcome is not None:
                    break
            for faction, policy in self.builtin.items():
                if self.executor.outcome is not None:
                    break
                obs = build_observation(self.world, faction, self.config.observation_level)
                batch = policy.decide(obs)
                if batch:
                    self.executor.execute_batch(
                        self.hub.sessions[faction], batch, at_ms=self.world.clock_ms
                    )
            if (
                self.executor.outcome is None
                and self.world.clock_ms >= self.config.scenario.horizon_ms
            ):
                self.executor.check_end()
            if self.executor.outcome is None:
                self._check_liveness()
            elapsed = time.monotonic() - tick_started
            await asyncio.sleep(max(rt.tick_ms / 1000.0 - elapsed, 0))
        await self._finish()

    def _check_liveness(self) -> None:
        """A real-time session missing three heartbeats forfeits the match."""
        deadline = HEARTBEAT_INTERVAL_MS * HEARTBEAT_MISS_LIMIT
        for faction in self.human_factions:
            session = self.hub.sessions.get(faction)
            if session is None:
                continue
            last = max(session.last_seen_ms, session.connected_at)
            if now_ms() - last > deadline:
                self.executor.declare_forfeit(faction, "disconnect")
                return

    async def _drive_builtin_turns(self) -> None:
        """Let builtin factions play whenever they hold the activation."""
        while (
            self.executor.outcome is None
            and self.world.active_faction in self.builtin
        ):
            faction = self.world.active_faction
            policy = self.builtin[faction]
            obs = build_observation(self.world, faction, self.config.observation_level)
            self.executor.execute_batch(self.hub.sessions[faction], policy.decide(obs))
            if self.world.active_faction == faction and self.executor.outcome is None:
                self.executor.execute(
                    self.hub.sessions[faction], "end_turn", {"faction": faction}
                )
            if self.executor.outcome is None:
                self._push_observation(self.world.active_faction)
        # yield so connection writers flush between turns
        await asyncio.sleep(0)

    def _handle_gameplay(
        self, session: AgentSession, env: Envelope, at_ms: Optional[int] = None
    ) -> None:
        payload = env.payload if isinstance(env.payload, dict) else {}
        actions = payload.get("actions")
        if not isinstance(actions, list) or not actions:
            self._reply_error(session, err.SchemaViolation("payload.actions must be a non-empty list"))
            return
        received = now_ms()
        was_active = self.world.active_faction
        results = self.executor.execute_batch(session, actions, at_ms=at_ms)
        session.latency_samples_ms.append(float(now_ms() - received))
        self.hub.send_to(
            session.faction,
            MsgType.ACTION_RESULT,
            {"request_seq": env.seq, "results": [r.as_dict() for r in results]},
        )
        if (
            self.config.mode == TURN_BASED
            and self.executor.outcome is None
            and self.world.active_faction != was_active
        ):
            self._push_observation(self.world.active_faction)

    def _push_observation(self, faction: Optional[str]) -> None:
        if faction is None or faction in self.builtin:
            return
        if faction not in self.hub.sessions:
            return
        obs = build_observation(self.world, faction, self.config.observation_level)
        self.hub.send_to(faction, MsgType.OBSERVATION, obs)

    def _reply_error(self, session: AgentSession, exc: err.ArenaError) -> None:
        self.hub.send_to(
            session.faction,
            MsgType.ERROR,
            error_payload(exc.code, exc.message, exc.spatial),
        )

    async def _finish(self) -> None:
        self.state = "finished"
        stats = {f: session_stats(s) for f, s in self.hub.sessions.items()}
        counters = {
            f: {
                "total_calls": s.total_calls,
                "ok_calls": s.ok_calls,
                "failed_calls": s.failed_calls,
                "spatial_failed": s.spatial_failed,
                "ok_gameplay": s.ok_gameplay,
            }
            for f, s in self.hub.sessions.items()
        }
        self.recorder.record_summary(
            {
                "outcome": self.executor.outcome.as_dict(),
                "stats": {f: s.as_dict() for f, s in stats.items()},
                "counters": counters,
                "final_digest": snapshot_digest(self.world),
            }
        )
        for faction in sorted(self.hub.sessions):
            if faction in self.builtin:
                continue
            self.hub.send_to(
                faction,
                MsgType.STATS_REPORT,
                {"stats": stats[faction].as_dict(), "counters": counters[faction]},
            )
        self.finished_event.set()

    def info(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "match_id": self.match_id,
            "state": self.state,
            "mode": self.config.mode,
            "factions": list(self.world.factions),
            "ws_path": f"/ws/{self.match_id}",
        }
        if self.executor.outcome is not None:
            out["outcome"] = self.executor.outcome.as_dict()
            out["final_digest"] = snapshot_digest(self.world)
        return out


def _scenario_dict(config: MatchConfig) -> dict[str, Any]:
    from ..scenario import scenario_to_dict

    return scenario_to_dict(config.scenario)


class ConnectionPump:
    """Per-connection outbound queue; the hub's send callback feeds it."""

    def __init__(self) -> None:
        self.outbound: asyncio.Queue[Envelope] = asyncio.Queue()
        self.closed = False

    def send(self, env: Envelope) -> None:
        if not self.closed:
            self.outbound.put_nowait(env)
