"""Pydantic request/response models for the HTTP surface."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class OutcomeModel(BaseModel):
    winner: Optional[str]
    surviving_fraction: float
    duration: float
    terminal_reason: str


class GameStatsModel(BaseModel):
    tce: float
    sae: float
    actions_per_game: int
    mean_latency_ms: float


class ScriptedMatchRequest(BaseModel):
    mode: str = "turn_based"
    seed: int = 0
    red: str = "greedy:0"  # first faction's policy, "kind:seed"
    blue: str = "random:0"
    scenario: Optional[dict[str, Any]] = None
    observation_level: str = "tactical"
    include_record: bool = False


class ScriptedMatchResponse(BaseModel):
    outcome: OutcomeModel
    stats: dict[str, GameStatsModel]
    counters: dict[str, dict[str, int]]
    final_digest: str
    factions: list[str]
    record_jsonl: Optional[str] = None


class OutcomeRecordModel(BaseModel):
    player_a: str
    player_b: str
    score_a: float
    u: float
    t_game: float
    t_max: float
    mode: str = "turn_based"


class TournamentRequest(BaseModel):
    players: list[str]
    games_per_pair: int = 2
    mode: str = "turn_based"
    seed: int = 0
    scenario: Optional[dict[str, Any]] = None
    jobs: int = 1


class TournamentResponse(BaseModel):
    outcomes: list[OutcomeRecordModel]
    leaderboard: LeaderboardResponse


class RateRequest(BaseModel):
    outcomes: list[OutcomeRecordModel]
    k: float = 32.0
    xi: float = 400.0
    alpha: float = 0.5
    beta: float = 0.5
    orderings: int = 100
    seed: int = 0


class LeaderboardRowModel(BaseModel):
    player: str
    pwer: float
    pwer_sigma: float
    ser: float
    ser_sigma: float
    win_rate: float


class LeaderboardResponse(BaseModel):
    rows: list[LeaderboardRowModel]
    n_orderings: int
    text: str


class ReplayVerifyRequest(BaseModel):
    record_jsonl: str


class ReplayVerifyResponse(BaseModel):
    ok: bool
    message: str
    mismatch_index: Optional[int] = None


class HostedMatchRequest(BaseModel):
    match_id: str = "default"
    mode: str = "turn_based"
    seed: int = 0
    scenario: Optional[dict[str, Any]] = None
    observation_level: str = "tactical"
    # faction -> builtin policy spec; omitted factions await a protocol agent
    builtin: dict[str, str] = Field(default_factory=dict)


class HostedMatchInfo(BaseModel):
    match_id: str
    state: str  # waiting | running | finished
    mode: str
    factions: list[str]
    ws_path: str
    outcome: Optional[OutcomeModel] = None
    final_digest: Optional[str] = None


TournamentResponse.model_rebuild()
