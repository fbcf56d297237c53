"""FastAPI service: REST wrappers over the engine plus the websocket
transport for live agent play.

REST endpoints run scripted matches, tournaments, rating computations, and
replay verification; the /ws/{match_id} endpoint speaks the envelope protocol
for hosted matches. The CLI is a thin client of this app.
"""

from __future__ import annotations

import asyncio
import concurrent.futures
from typing import Any, Optional

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect

from .. import __version__
from .. import errors as err
from ..agents import make_policy
from ..match import MatchConfig, run_real_time, run_turn_based
from ..protocol import (
    Envelope,
    MsgType,
    decode_envelope,
    encode_envelope,
    error_payload,
    now_ms,
)
from ..rating import MatchOutcomeRecord, RatingParams, outcome_from_match, run_tournament
from ..replay import from_jsonl, to_jsonl, verify
from ..scenario import ConfigError, ScenarioConfig, rng_stream, scenario_from_dict
from ..world import REAL_TIME, TURN_BASED
from .hosting import ConnectionPump, HostedMatch
from .models import (
    GameStatsModel,
    HealthResponse,
    HostedMatchInfo,
    HostedMatchRequest,
    LeaderboardResponse,
    LeaderboardRowModel,
    OutcomeModel,
    OutcomeRecordModel,
    RateRequest,
    ReplayVerifyRequest,
    ReplayVerifyResponse,
    ScriptedMatchRequest,
    ScriptedMatchResponse,
    TournamentRequest,
    TournamentResponse,
)

MODE_ALIASES = {
    "turn": TURN_BASED,
    "turn_based": TURN_BASED,
    "real": REAL_TIME,
    "real_time": REAL_TIME,
}


def resolve_mode(mode: str) -> str:
    try:
        return MODE_ALIASES[mode]
    except KeyError:
        raise HTTPException(422, f"unknown mode {mode!r}") from None


def build_match_config(
    mode: str,
    seed: int,
    scenario: Optional[dict[str, Any]],
    observation_level: str = "tactical",
) -> MatchConfig:
    try:
        scenario_cfg = scenario_from_dict(scenario) if scenario else ScenarioConfig()
    except (ConfigError, TypeError) as exc:
        raise HTTPException(422, f"bad scenario: {exc}") from exc
    return MatchConfig(
        mode=resolve_mode(mode),
        seed=seed,
        scenario=scenario_cfg,
        observation_level=observation_level,
    )


def run_scripted_match(req: ScriptedMatchRequest) -> ScriptedMatchResponse:
    config = build_match_config(req.mode, req.seed, req.scenario, req.observation_level)
    factions = config.scenario.factions
    try:
        agents = {factions[0]: make_policy(req.red), factions[1]: make_policy(req.blue)}
    except ValueError as exc:
        raise HTTPException(422, str(exc)) from exc
    runner = run_turn_based if config.mode == TURN_BASED else run_real_time
    record = runner(agents, config)
    return ScriptedMatchResponse(
        outcome=OutcomeModel(**record.outcome.as_dict()),
        stats={f: GameStatsModel(**s.as_dict()) for f, s in record.stats.items()},
        counters=record.counters,
        final_digest=record.final_digest,
        factions=list(factions),
        record_jsonl=to_jsonl(record.records) if req.include_record else None,
    )


def _play_tournament_game(
    mode: str,
    seed: int,
    scenario: Optional[dict[str, Any]],
    spec_first: str,
    spec_second: str,
    player_a: str,
    a_plays_first: bool,
) -> dict[str, Any]:
    """One tournament game; module-level so process pools can pickle it."""
    config = build_match_config(mode, seed, scenario)
    factions = config.scenario.factions
    agents = {
        factions[0]: make_policy(spec_first),
        factions[1]: make_policy(spec_second),
    }
    runner = run_turn_based if config.mode == TURN_BASED else run_real_time
    record = runner(agents, config)
    player_b = spec_second if player_a == spec_first else spec_first
    faction_a = factions[0] if a_plays_first else factions[1]
    return outcome_from_match(player_a, player_b, faction_a, record).as_dict()


def run_tournament_endpoint(req: TournamentRequest) -> TournamentResponse:
    players = list(req.players)
    if len(players) != len(set(players)):
        raise HTTPException(422, "player specs must be unique")
    if len(players) < 2:
        raise HTTPException(422, "need at least two players")
    for spec in players:
        try:
            make_policy(spec)
        except ValueError as exc:
            raise HTTPException(422, str(exc)) from exc

    tasks = []
    for i, a in enumerate(players):
        for b in players[i + 1 :]:
            for game in range(req.games_per_pair):
                game_seed = rng_stream(req.seed, f"tournament:{a}|{b}|{game}").randrange(2**31)
                a_first = game % 2 == 0
                spec_first, spec_second = (a, b) if a_first else (b, a)
                tasks.append(
                    (
                        (a, b, game),
                        (req.mode, game_seed, req.scenario, spec_first, spec_second, a, a_first),
                    )
                )

    results: dict[tuple, dict[str, Any]] = {}
    if req.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=req.jobs) as pool:
            futures = {
                pool.submit(_play_tournament_game, *args): key for key, args in tasks
            }
            for future in concurrent.futures.as_completed(futures):
                results[futures[future]] = future.result()
    else:
        for key, args in tasks:
            results[key] = _play_tournament_game(*args)

    # deterministic merge order regardless of completion order
    outcomes = [MatchOutcomeRecord(**results[key]) for key in sorted(results)]
    board = run_tournament(
        players,
        outcomes,
        RatingParams(),
        n_orderings=100,
        seed=req.seed,
    )
    return TournamentResponse(
        outcomes=[OutcomeRecordModel(**o.as_dict()) for o in outcomes],
        leaderboard=LeaderboardResponse(
            rows=[LeaderboardRowModel(**r.as_dict()) for r in board.rows],
            n_orderings=board.n_orderings,
            text=board.render_text(),
        ),
    )


def run_rating(req: RateRequest) -> LeaderboardResponse:
    outcomes = [MatchOutcomeRecord(**o.model_dump()) for o in req.outcomes]
    players = sorted({o.player_a for o in outcomes} | {o.player_b for o in outcomes})
    if len(players) < 2:
        raise HTTPException(422, "outcomes must involve at least two players")
    board = run_tournament(
        players,
        outcomes,
        RatingParams(k=req.k, xi=req.xi, alpha=req.alpha, beta=req.beta),
        n_orderings=req.orderings,
        seed=req.seed,
    )
    return LeaderboardResponse(
        rows=[LeaderboardRowModel(**r.as_dict()) for r in board.rows],
        n_orderings=board.n_orderings,
        text=board.render_text(),
    )


def create_app(default_match: Optional[HostedMatchRequest] = None) -> FastAPI:
    app = FastAPI(title="hexarena", version=__version__)
    app.state.matches: dict[str, HostedMatch] = {}

    def _create_hosted(req: HostedMatchRequest) -> HostedMatch:
        if req.match_id in app.state.matches:
            raise HTTPException(409, f"match {req.match_id!r} already exists")
        config = build_match_config(req.mode, req.seed, req.scenario, req.observation_level)
        for faction in req.builtin:
            if faction not in config.scenario.factions:
                raise HTTPException(422, f"unknown faction {faction!r}")
        try:
            match = HostedMatch(req.match_id, config, req.builtin)
        except ValueError as exc:
            raise HTTPException(422, str(exc)) from exc
        app.state.matches[req.match_id] = match
        return match

    if default_match is not None:
        _create_hosted(default_match)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/scripted-matches", response_model=ScriptedMatchResponse)
    def scripted_match(req: ScriptedMatchRequest) -> ScriptedMatchResponse:
        return run_scripted_match(req)

    @app.post("/tournaments", response_model=TournamentResponse)
    def tournament(req: TournamentRequest) -> TournamentResponse:
        return run_tournament_endpoint(req)

    @app.post("/ratings", response_model=LeaderboardResponse)
    def ratings(req: RateRequest) -> LeaderboardResponse:
        return run_rating(req)

    @app.post("/replays/verify", response_model=ReplayVerifyResponse)
    def replay_verify(req: ReplayVerifyRequest) -> ReplayVerifyResponse:
        try:
            records = from_jsonl(req.record_jsonl)
        except ValueError as exc:
            return ReplayVerifyResponse(ok=False, message=f"unparsable record: {exc}", mismatch_index=0)
        result = verify(records)
        return ReplayVerifyResponse(**result.as_dict())

    @app.post("/matches", response_model=HostedMatchInfo)
    def create_match(req: HostedMatchRequest) -> HostedMatchInfo:
        match = _create_hosted(req)
        return HostedMatchInfo(**match.info())

    @app.get("/matches/{match_id}", response_model=HostedMatchInfo)
    def match_info(match_id: str) -> HostedMatchInfo:
        match = app.state.matches.get(match_id)
        if match is None:
            raise HTTPException(404, f"no match {match_id!r}")
        return HostedMatchInfo(**match.info())

    @app.websocket("/ws/{match_id}")
    async def websocket_endpoint(ws: WebSocket, match_id: str) -> None:
        await _serve_connection(app, ws, match_id)

    @app.websocket("/ws")
    async def websocket_default(ws: WebSocket) -> None:
        await _serve_connection(app, ws, "default")

    return app


async def _serve_connection(app: FastAPI, ws: WebSocket, match_id: str) -> None:
    match: Optional[HostedMatch] = app.state.matches.get(match_id)
    await ws.accept()
    if match is None:
        await ws.send_text(
            encode_envelope(
                _server_envelope(MsgType.ERROR, error_payload("UnknownMatch", f"no match {match_id!r}"))
            ).decode()
        )
        await ws.close()
        return

    pump = ConnectionPump()
    session = None
    writer = asyncio.create_task(_writer_loop(ws, pump))
    match.ensure_task()
    try:
        while True:
            raw = await ws.receive_text()
            try:
                env = decode_envelope(raw)
            except err.ArenaError as exc:
                pump.send(_server_envelope(MsgType.ERROR, error_payload(exc.code, exc.message)))
                continue
            if session is None:
                session = _try_register(match, env, pump)
                continue
            session.last_seen_ms = now_ms()
            try:
                match.hub.check_inbound_seq(session, env.seq)
            except err.ArenaError as exc:
                pump.send(_server_envelope(MsgType.ERROR, error_payload(exc.code, exc.message)))
                continue
            if env.msg_type is MsgType.PING:
                pump.send(_server_envelope(MsgType.PING, env.payload))
            elif env.msg_type is MsgType.ACTION_REQUEST:
                await match.queue.put((session, env))
            elif env.msg_type is MsgType.STATS_REPORT:
                payload = env.payload if isinstance(env.payload, dict) else {}
                session.llm_stats.append(payload)
                match.recorder.record_telemetry(session.faction, "report_llm_stats", payload)
            elif env.msg_type is MsgType.REGISTER:
                pump.send(
                    _server_envelope(
                        MsgType.ERROR,
                        error_payload("FactionTaken", "session already registered"),
                    )
                )
            else:
                pump.send(
                    _server_envelope(
                        MsgType.ERROR,
                        error_payload("SchemaViolation", f"unexpected {env.msg_type.value} from agent"),
                    )
                )
    except WebSocketDisconnect:
        pass
    finally:
        pump.closed = True
        writer.cancel()


def _try_register(match: HostedMatch, env: Envelope, pump: ConnectionPump):
    """First envelope must register; both REGISTER and the catalogued
    register_agent_info action are accepted."""
    info: Optional[dict[str, Any]] = None
    if env.msg_type is MsgType.REGISTER and isinstance(env.payload, dict):
        info = env.payload
    elif env.msg_type is MsgType.ACTION_REQUEST and isinstance(env.payload, dict):
        actions = env.payload.get("actions")
        if (
            isinstance(actions, list)
            and len(actions) == 1
            and isinstance(actions[0], dict)
            and actions[0].get("action") == "register_agent_info"
        ):
            info = actions[0].get("params")
    if info is None:
        pump.send(
            _server_envelope(
                MsgType.ERROR,
                error_payload("NotRegistered", "register before any gameplay message"),
            )
        )
        return None
    faction = info.get("faction")
    if faction in match.builtin:
        pump.send(
            _server_envelope(MsgType.ERROR, error_payload("FactionTaken", f"{faction} is builtin"))
        )
        return None
    try:
        session = match.hub.register(
            str(faction),
            agent_id=str(info.get("agent_id", "agent")),
            model_id=str(info.get("model_id", "unknown")),
            send=pump.send,
        )
    except err.ArenaError as exc:
        pump.send(_server_envelope(MsgType.ERROR, error_payload(exc.code, exc.message)))
        return None
    session.last_inbound_seq = env.seq
    session.last_seen_ms = now_ms()
    match.registration_event.set()
    rt = match.config.scenario.real_time
    match.hub.send_to(
        session.faction,
        MsgType.REGISTER_ACK,
        {
            "faction": session.faction,
            "agent_id": session.agent_id,
            "match_id": match.match_id,
            "mode": match.config.mode,
            "observation_level": match.config.observation_level,
            "real_time": {
                "tick_ms": rt.tick_ms,
                "c_move": rt.c_move,
                "c_attack": rt.c_attack,
                "c_support": rt.c_support,
                "mp_regen": rt.mp_regen,
            },
        },
    )
    return session


def _server_envelope(msg_type: MsgType, payload: Any) -> Envelope:
    return Envelope(
        msg_type=msg_type,
        sender="server",
        receiver="agent",
        timestamp=now_ms(),
        seq=0,
        payload=payload,
    )


async def _writer_loop(ws: WebSocket, pump: ConnectionPump) -> None:
    try:
        while True:
            env = await pump.outbound.get()
            await ws.send_text(encode_envelope(env).decode())
    except Exception:
        pump.closed = True
