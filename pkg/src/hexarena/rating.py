"""Tournament ratings: win rate, the classical logistic pairwise rating, and
its performance-weighted variant.

The performance-weighted update scales the classical delta by
M = 1 + alpha * preservation + beta * time_efficiency, so decisive fast wins
move ratings further than grinding ones. Both players receive the same scaled
delta with opposite signs, which keeps the rating sum conserved. Uncertainty
is reported as the standard deviation of final ratings over seeded shuffles
of the match order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable

from .errors import InsufficientPlayers, InvalidScore
from .scenario import rng_stream

INITIAL_RATING = 1000.0
VALID_SCORES = (0.0, 0.5, 1.0)


@dataclass(frozen=True)
class RatingParams:
    k: float = 32.0
    xi: float = 400.0
    alpha: float = 0.5
    beta: float = 0.5


@dataclass(frozen=True)
class MatchOutcomeRecord:
    player_a: str
    player_b: str
    score_a: float  # 1 win, 0.5 draw, 0 loss (for player_a)
    u: float  # winner's surviving fraction, 0 for draws
    t_game: float
    t_max: float
    mode: str = "turn_based"

    def as_dict(self) -> dict[str, Any]:
        return {
            "player_a": self.player_a,
            "player_b": self.player_b,
            "score_a": self.score_a,
            "u": self.u,
            "t_game": self.t_game,
            "t_max": self.t_max,
            "mode": self.mode,
        }


def expected_score(r_a: float, r_b: float, xi: float = 400.0) -> float:
    if xi <= 0:
        raise ValueError("xi must be positive")
    return 1.0 / (1.0 + 10.0 ** ((r_b - r_a) / xi))


def _check_score(s_a: float) -> None:
    if s_a not in VALID_SCORES:
        raise InvalidScore(f"score must be one of {VALID_SCORES}, got {s_a}")


def update_ser(
    r_a: float, r_b: float, s_a: float, k: float = 32.0, xi: float = 400.0
) -> tuple[float, float]:
    _check_score(s_a)
    delta = k * (s_a - expected_score(r_a, r_b, xi))
    return r_a + delta, r_b - delta


def performance_multiplier(
    u: float, t_game: float, t_max: float, alpha: float = 0.5, beta: float = 0.5
) -> float:
    if not 0.0 <= u <= 1.0:
        raise ValueError("preservation must lie in [0, 1]")
    t_eff = 1.0 - min(t_game / t_max, 1.0) if t_max > 0 else 0.0
    return 1.0 + alpha * u + beta * t_eff


def update_pwer(
    r_a: float,
    r_b: float,
    outcome: MatchOutcomeRecord,
    params: RatingParams = RatingParams(),
) -> tuple[float, float]:
    """Performance-weighted update; draws degrade to the classical rule."""
    _check_score(outcome.score_a)
    if outcome.score_a == 0.5:
        m = 1.0
    else:
        m = performance_multiplier(
            outcome.u, outcome.t_game, outcome.t_max, params.alpha, params.beta
        )
    delta = params.k * m * (outcome.score_a - expected_score(r_a, r_b, params.xi))
    return r_a + delta, r_b - delta


@dataclass
class LeaderboardRow:
    player: str
    pwer: float
    pwer_sigma: float
    ser: float
    ser_sigma: float
    win_rate: float

    def as_dict(self) -> dict[str, Any]:
        return {
            "player": self.player,
            "pwer": self.pwer,
            "pwer_sigma": self.pwer_sigma,
            "ser": self.ser,
            "ser_sigma": self.ser_sigma,
            "win_rate": self.win_rate,
        }


@dataclass
class Leaderboard:
    rows: list[LeaderboardRow]
    n_orderings: int
    # per-shuffle final ratings, for stability analyses: player -> list
    shuffle_finals_ser: dict[str, list[float]] = field(default_factory=dict)
    shuffle_finals_pwer: dict[str, list[float]] = field(default_factory=dict)

    def as_dict(self) -> dict[str, Any]:
        return {"rows": [r.as_dict() for r in self.rows], "n_orderings": self.n_orderings}

    def render_text(self) -> str:
        header = f"{'player':<16} {'PWER':>10} {'SER':>10} {'win rate':>9}"
        lines = [header, "-" * len(header)]
        for row in self.rows:
            lines.append(
                f"{row.player:<16} "
                f"{row.pwer:7.1f}±{row.pwer_sigma:<5.1f} "
                f"{row.ser:7.1f}±{row.ser_sigma:<5.1f} "
                f"{row.win_rate:9.3f}"
            )
        return "\n".join(lines)


def _run_stream(
    players: list[str],
    stream: list[MatchOutcomeRecord],
    params: RatingParams,
    weighted: bool,
) -> dict[str, float]:
    ratings = {p: INITIAL_RATING for p in players}
    for rec in stream:
        if weighted:
            ratings[rec.player_a], ratings[rec.player_b] = update_pwer(
                ratings[rec.player_a], ratings[rec.player_b], rec, params
            )
        else:
            ratings[rec.player_a], ratings[rec.player_b] = update_ser(
                ratings[rec.player_a], ratings[rec.player_b], rec.score_a, params.k, params.xi
            )
    return ratings


def _stddev(values: list[float]) -> float:
    if len(values) < 2:
        return 0.0
    mean = sum(values) / len(values)
    return math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))


def run_tournament(
    players: list[str],
    outcomes: Iterable[MatchOutcomeRecord],
    params: RatingParams = RatingParams(),
    n_orderings: int = 100,
    seed: int = 0,
) -> Leaderboard:
    """Sequential rating over the outcome stream, shuffle-based uncertainty.

    Sequential updates are order-dependent, so the reported rating is the
    mean of the final ratings over n_orderings seeded shuffles of the stream
    and sigma is their standard deviation (a perfectly split head-to-head thus
    lands both players on equal ratings, as the order symmetry demands). Rows
    sort by the weighted rating, ties by the classical one, then by name.
    """
    players = list(players)
    if len(players) < 2:
        raise InsufficientPlayers("a tournament needs at least two players")
    stream = list(outcomes)
    for rec in stream:
        if rec.player_a not in players or rec.player_b not in players:
            raise ValueError(f"outcome references unknown player: {rec}")

    finals_ser: dict[str, list[float]] = {p: [] for p in players}
    finals_pwer: dict[str, list[float]] = {p: [] for p in players}
    rng = rng_stream(seed, "tournament:orderings")
    for _ in range(max(n_orderings, 1)):
        shuffled = list(stream)
        if n_orderings > 0:
            rng.shuffle(shuffled)
        for player, value in _run_stream(players, shuffled, params, weighted=False).items():
            finals_ser[player].append(value)
        for player, value in _run_stream(players, shuffled, params, weighted=True).items():
            finals_pwer[player].append(value)
    ser_point = {p: sum(v) / len(v) for p, v in finals_ser.items()}
    pwer_point = {p: sum(v) / len(v) for p, v in finals_pwer.items()}

    wins: dict[str, float] = {p: 0.0 for p in players}
    games: dict[str, int] = {p: 0 for p in players}
    for rec in stream:
        games[rec.player_a] += 1
        games[rec.player_b] += 1
        wins[rec.player_a] += rec.score_a
        wins[rec.player_b] += 1.0 - rec.score_a

    rows = [
        LeaderboardRow(
            player=p,
            pwer=pwer_point[p],
            pwer_sigma=_stddev(finals_pwer[p]),
            ser=ser_point[p],
            ser_sigma=_stddev(finals_ser[p]),
            win_rate=wins[p] / games[p] if games[p] else 0.0,
        )
        for p in players
    ]
    rows.sort(key=lambda r: (-r.pwer, -r.ser, r.player))
    return Leaderboard(
        rows=rows,
        n_orderings=n_orderings,
        shuffle_finals_ser=finals_ser,
        shuffle_finals_pwer=finals_pwer,
    )


def outcome_from_match(
    player_a: str, player_b: str, faction_a: str, record
) -> MatchOutcomeRecord:
    """Translate a finished MatchRecord into a rating outcome for (a, b)."""
    outcome = record.outcome
    if outcome.winner is None:
        score_a = 0.5
    else:
        score_a = 1.0 if outcome.winner == faction_a else 0.0
    mode = record.config["mode"]
    scenario = record.config["scenario"]
    t_max = scenario["horizon_turns"] if mode == "turn_based" else scenario["horizon_ms"]
    return MatchOutcomeRecord(
        player_a=player_a,
        player_b=player_b,
        score_a=score_a,
        u=outcome.surviving_fraction,
        t_game=outcome.duration,
        t_max=t_max,
        mode=mode,
    )
