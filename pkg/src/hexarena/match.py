"""Match orchestration for both regimes.

Turn-based play enforces strict alternation: only the active faction's
gameplay actions are accepted, each transition emits turn_start plus a
state-update notice, and the match ends on elimination or the turn horizon.
Real-time play replaces action points with per-unit action locks whose
durations scale with action complexity, regenerates movement points over
simulated time, and ends on elimination or the clock horizon. The real-time
scheduler is tick-driven over a simulated clock, so scripted matches are
exactly reproducible; the service layer paces the same scheduler against wall
time for live play.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Protocol

from .actions import Executor, action_lock_seconds, build_observation
from .hexes import HexCoord
from .mapgen import generate_map, mirror_symmetrize
from .protocol import AgentSession, EventNotice, SessionHub
from .rules import Outcome, refresh_faction
from .scenario import ScenarioConfig, Terrain
from .world import REAL_TIME, TURN_BASED, WorldState, snapshot_digest

DIGEST_EVERY = 20  # records between digest checkpoints in the replay log


class PolicyLike(Protocol):
    name: str

    def decide(self, observation: dict[str, Any]) -> list[dict[str, Any]]: ...


@dataclass
class MatchConfig:
    mode: str = TURN_BASED
    seed: int = 0
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    observation_level: str = "tactical"
    turn_budget_ms: Optional[int] = None  # per-turn wall clock; None = unlimited
    max_ticks: Optional[int] = None  # real-time override for tests


class MatchRecorder:
    """Append-only JSONL-able event log with periodic digest checkpoints."""

    def __init__(self, world: Optional[WorldState] = None):
        self.records: list[dict[str, Any]] = []
        self._world = world
        self._since_digest = 0
        self._index = 0

    def attach(self, world: WorldState) -> None:
        self._world = world

    def _checkpoint(self) -> None:
        self._since_digest += 1
        if self._world is not None and self._since_digest >= DIGEST_EVERY:
            self._since_digest = 0
            self.records.append(
                {
                    "type": "digest",
                    "after_index": self._index,
                    "digest": snapshot_digest(self._world),
                }
            )

    def record_header(self, header: dict[str, Any]) -> None:
        self.records.append({"type": "header", **header})

    def record_request(
        self, faction: str, action: str, params: dict[str, Any], at_ms: Optional[int]
    ) -> None:
        self._index += 1
        rec = {
            "type": "request",
            "index": self._index,
            "faction": faction,
            "action": action,
            "params": params,
            "ts_wall": int(time.time() * 1000),
        }
        if at_ms is not None:
            rec["at_ms"] = at_ms
        self.records.append(rec)

    def record_result(self, result) -> None:
        self.records.append({"type": "result", "index": self._index, **result.as_dict()})
        self._checkpoint()

    def record_event(self, notice: EventNotice) -> None:
        self.records.append({"type": "event", "event": notice.event, "detail": notice.detail})

    def record_telemetry(self, faction: str, kind: str, payload: dict[str, Any]) -> None:
        self.records.append(
            {"type": "telemetry", "faction": faction, "kind": kind, "payload": payload}
        )

    def record_summary(self, summary: dict[str, Any]) -> None:
        self.records.append({"type": "summary", **summary})


@dataclass(frozen=True)
class GameStats:
    tce: float
    sae: float
    actions_per_game: int
    mean_latency_ms: float

    def as_dict(self) -> dict[str, Any]:
        return {
            "tce": self.tce,
            "sae": self.sae,
            "actions_per_game": self.actions_per_game,
            "mean_latency_ms": self.mean_latency_ms,
        }


def session_stats(session: AgentSession) -> GameStats:
    total, failed = session.total_calls, session.failed_calls
    tce = failed / total if total else 0.0
    sae = session.spatial_failed / failed if failed else 0.0
    latency = (
        sum(session.latency_samples_ms) / len(session.latency_samples_ms)
        if session.latency_samples_ms
        else 0.0
    )
    return GameStats(tce, sae, session.ok_gameplay, latency)


@dataclass
class MatchRecord:
    config: dict[str, Any]
    outcome: Outcome
    stats: dict[str, GameStats]
    final_digest: str
    records: list[dict[str, Any]]
    counters: dict[str, dict[str, int]]

    def summary(self) -> dict[str, Any]:
        return {
            "outcome": self.outcome.as_dict(),
            "stats": {f: s.as_dict() for f, s in self.stats.items()},
            "counters": self.counters,
            "final_digest": self.final_digest,
        }


def build_world(config: MatchConfig) -> WorldState:
    """Seeded, mirror-symmetric world with both armies spawned."""
    scenario = config.scenario
    grid = mirror_symmetrize(
        generate_map(config.seed, scenario.width, scenario.height, scenario.map_params),
        config.seed,
    )
    spawns = scenario.mirrored_spawns()
    for cells in spawns.values():
        for col, row in cells:
            grid.set_terrain(HexCoord(col, row), Terrain.PLAIN)
    world = WorldState(scenario, grid, config.mode, config.seed)
    for faction in scenario.factions:
        for unit_type, (col, row) in zip(scenario.army, spawns[faction]):
            world.spawn_unit(faction, unit_type, HexCoord(col, row))
    return world


def _mk_session(faction: str, hub: SessionHub, name: str) -> AgentSession:
    return hub.register(faction, agent_id=name, model_id=f"builtin:{name}", send=lambda env: None)


def _header(config: MatchConfig, agents: dict[str, PolicyLike]) -> dict[str, Any]:
    from .scenario import scenario_to_dict

    return {
        "mode": config.mode,
        "seed": config.seed,
        "observation_level": config.observation_level,
        "scenario": scenario_to_dict(config.scenario),
        "agents": {f: p.name for f, p in agents.items()},
    }


def _finish(
    config: MatchConfig,
    executor: Executor,
    recorder: MatchRecorder,
    hub: SessionHub,
    agents: dict[str, PolicyLike],
) -> MatchRecord:
    outcome = executor.outcome
    assert outcome is not None
    digest = snapshot_digest(executor.world)
    stats = {f: session_stats(hub.sessions[f]) for f in hub.sessions}
    counters = {
        f: {
            "total_calls": s.total_calls,
            "ok_calls": s.ok_calls,
            "failed_calls": s.failed_calls,
            "spatial_failed": s.spatial_failed,
            "ok_gameplay": s.ok_gameplay,
        }
        for f, s in hub.sessions.items()
    }
    summary = {
        "outcome": outcome.as_dict(),
        "stats": {f: s.as_dict() for f, s in stats.items()},
        "counters": counters,
        "final_digest": digest,
    }
    recorder.record_summary(summary)
    return MatchRecord(
        config=_header(config, agents),
        outcome=outcome,
        stats=stats,
        final_digest=digest,
        records=recorder.records,
        counters=counters,
    )


def run_turn_based(agents: dict[str, PolicyLike], config: MatchConfig) -> MatchRecord:
    """Scripted turn-based match; strict alternation, deterministic for a seed."""
    if config.mode != TURN_BASED:
        raise ValueError("config.mode must be turn_based")
    world = build_world(config)
    hub = SessionHub(world.factions)
    recorder = MatchRecorder(world)
    recorder.record_header(_header(config, agents))
    executor = Executor(world, hub, recorder)
    sessions = {f: _mk_session(f, hub, agents[f].name) for f in world.factions}

    executor.emit_turn_events()
    while executor.outcome is None:
        active = world.active_faction
        obs = build_observation(world, active, config.observation_level)
        started = time.monotonic()
        batch = agents[active].decide(obs)
        if config.turn_budget_ms is not None:
            elapsed_ms = (time.monotonic() - started) * 1000
            if elapsed_ms > config.turn_budget_ms:
                executor.declare_forfeit(active, "timeout")
                break
        executor.execute_batch(sessions[active], batch)
        if executor.outcome is not None:
            break
        if world.active_faction == active:
            # the batch never ended the turn; the engine closes it to guarantee
            # progress (recorded, so replays see the same injected request)
            executor.execute(sessions[active], "end_turn", {"faction": active})
    return _finish(config, executor, recorder, hub, agents)


def action_lock_duration(config: ScenarioConfig, action: str, path_cost: float = 0.0) -> float:
    """Lock seconds for an action kind: move scales with path cost, combat and
    support actions are fixed, information actions are free."""
    kind = {
        "move": "move",
        "attack": "attack",
        "rest": "support",
        "occupy": "support",
        "fortify": "support",
        "skill": "support",
    }.get(action)
    if kind is None:
        return 0.0
    return action_lock_seconds(config, kind, path_cost)


class SimClock:
    """Deterministic simulated clock stepped by the scheduler."""

    def __init__(self) -> None:
        self.now_ms = 0

    def advance(self, ms: int) -> None:
        self.now_ms += ms


def run_real_time(
    agents: dict[str, PolicyLike],
    config: MatchConfig,
    on_tick: Optional[Callable[[WorldState], None]] = None,
) -> MatchRecord:
    """Simulated-clock real-time match.

    Policies are invoked once per tick per faction (fixed order) and may emit
    any number of actions; locked units are rejected with UnitBusy. Movement
    points regenerate continuously.
    """
    if config.mode != REAL_TIME:
        raise ValueError("config.mode must be real_time")
    world = build_world(config)
    hub = SessionHub(world.factions)
    recorder = MatchRecorder(world)
    recorder.record_header(_header(config, agents))
    executor = Executor(world, hub, recorder)
    sessions = {f: _mk_session(f, hub, agents[f].name) for f in world.factions}
    rt = config.scenario.real_time
    regen_milli_per_tick = int(round(rt.mp_regen * rt.tick_ms))

    executor.emit_turn_events()
    ticks = 0
    while executor.outcome is None:
        world.clock_ms += rt.tick_ms
        ticks += 1
        _regen_mp(world, regen_milli_per_tick)
        _rt_periodic(world, rt)
        for faction in world.factions:
            if executor.outcome is not None:
                break
            obs = build_observation(world, faction, config.observation_level)
            batch = agents[faction].decide(obs)
            if batch:
                executor.execute_batch(sessions[faction], batch, at_ms=world.clock_ms)
        if on_tick is not None:
            on_tick(world)
        if executor.outcome is None and world.clock_ms >= config.scenario.horizon_ms:
            executor.check_end()
        if config.max_ticks is not None and ticks >= config.max_ticks and executor.outcome is None:
            world.clock_ms = config.scenario.horizon_ms
            executor.check_end()
            break
    return _finish(config, executor, recorder, hub, agents)


def _regen_mp(world: WorldState, milli: int) -> None:
    from .world import Faction, MovementPoints

    for _, comps in world.registry.query(MovementPoints):
        mp = comps[MovementPoints]
        mp.current_milli = min(mp.current_milli + milli, mp.max * 1000)


def _rt_periodic(world: WorldState, rt) -> None:
    from .rules import _award_city_income, _tick_statuses

    if world.clock_ms - world._last_status_tick_ms >= rt.status_tick_ms:
        world._last_status_tick_ms = world.clock_ms
        for faction in world.factions:
            _tick_statuses(world, faction)
    if world.clock_ms - world._last_income_ms >= rt.income_interval_ms:
        world._last_income_ms = world.clock_ms
        for faction in world.factions:
            _award_city_income(world, faction)


def compute_stats(record: MatchRecord, faction: str) -> GameStats:
    return record.stats[faction]


def stats_from_counters(
    total_calls: int, failed_calls: int, spatial_failed: int, ok_gameplay: int,
    mean_latency_ms: float = 0.0,
) -> GameStats:
    """Stats from raw counters; used for fixture logs and external records."""
    tce = failed_calls / total_calls if total_calls else 0.0
    sae = spatial_failed / failed_calls if failed_calls else 0.0
    return GameStats(tce, sae, ok_gameplay, mean_latency_ms)
