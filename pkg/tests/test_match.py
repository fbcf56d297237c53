"""Match runners: determinism, gating, locks, stats, and replay verification."""

import json
import random

import pytest

from hexarena.actions import Executor, build_observation
from hexarena.agents import make_policy
from hexarena.hexes import HexCoord, hex_distance
from hexarena.match import (
    MatchConfig,
    action_lock_duration,
    run_real_time,
    run_turn_based,
    session_stats,
    stats_from_counters,
)
from hexarena.protocol import AgentSession, SessionHub
from hexarena.replay import from_jsonl, strip_volatile, to_jsonl, verify
from hexarena.scenario import ScenarioConfig, scenario_from_dict
from hexarena.world import REAL_TIME, TerrainGrid, WorldState, snapshot_digest


class PassPolicy:
    """Ends the turn immediately; does nothing in real time."""

    name = "pass"

    def decide(self, obs):
        if obs["strategic_info"]["mode"] == "real_time":
            return []
        return [{"action": "end_turn", "params": {"faction": obs["faction"]}}]


def tb_config(seed=42, **scenario_overrides):
    scenario = scenario_from_dict(scenario_overrides) if scenario_overrides else ScenarioConfig()
    return MatchConfig(mode="turn_based", seed=seed, scenario=scenario)


def rt_config(seed=42, horizon_ms=20_000):
    scenario = scenario_from_dict({"horizon_ms": horizon_ms})
    return MatchConfig(mode="real_time", seed=seed, scenario=scenario)


def test_turn_based_match_deterministic():
    digests = set()
    for _ in range(2):
        rec = run_turn_based(
            {"wei": make_policy("greedy:7"), "shu": make_policy("random:3")}, tb_config()
        )
        digests.add(rec.final_digest)
    assert len(digests) == 1


def test_passive_agents_draw_at_horizon():
    rec = run_turn_based(
        {"wei": PassPolicy(), "shu": PassPolicy()}, tb_config(seed=5, horizon_turns=10)
    )
    assert rec.outcome.winner is None
    assert rec.outcome.terminal_reason == "horizon"
    assert rec.outcome.duration == 10


def test_out_of_turn_actions_rejected_without_mutation():
    cfg = tb_config(seed=9)
    from hexarena.match import build_world

    world = build_world(cfg)
    hub = SessionHub(world.factions)
    sessions = {
        f: hub.register(f, agent_id=f, model_id="t", send=lambda env: None)
        for f in world.factions
    }
    ex = Executor(world, hub)
    inactive = world.factions[1]
    own_units = world.units_of(inactive)
    enemy = world.units_of(world.factions[0])[0]
    before = snapshot_digest(world)
    rng = random.Random(1)
    for _ in range(1000):
        unit = rng.choice(own_units)
        action = rng.choice(["move", "attack", "rest", "end_turn"])
        params = {
            "move": {"unit_id": unit, "target_position": {"col": 7, "row": 7}},
            "attack": {"unit_id": unit, "target_id": enemy},
            "rest": {"unit_id": unit},
            "end_turn": {"faction": inactive},
        }[action]
        res = ex.execute(sessions[inactive], action, params)
        assert not res.ok and res.error_code == "NotYourTurn"
    assert snapshot_digest(world) == before


def test_real_time_deterministic_and_horizon():
    digests = set()
    for _ in range(2):
        rec = run_real_time(
            {"wei": make_policy("random:1"), "shu": make_policy("random:2")},
            rt_config(seed=11, horizon_ms=5_000),
        )
        digests.add((rec.final_digest, rec.outcome.terminal_reason))
    assert len(digests) == 1


def test_real_time_greedy_vs_random_runs():
    rec = run_real_time(
        {"wei": make_policy("greedy:1"), "shu": make_policy("random:2")},
        rt_config(seed=3, horizon_ms=60_000),
    )
    assert rec.outcome.terminal_reason in ("elimination", "horizon")
    assert rec.counters["wei"]["ok_gameplay"] > 0


def test_lock_durations_match_schedule():
    """Measured lock spans equal the published schedule within one tick."""
    cfg = ScenarioConfig()
    world = WorldState(cfg, TerrainGrid(cfg.width, cfg.height), REAL_TIME, seed=2)
    hub = SessionHub(world.factions)
    sessions = {
        f: hub.register(f, agent_id=f, model_id="t", send=lambda env: None)
        for f in world.factions
    }
    ex = Executor(world, hub)
    units = {}
    units["wei"] = [world.spawn_unit("wei", t, HexCoord(2 + i, 2)) for i, t in enumerate(cfg.army)]
    units["shu"] = [world.spawn_unit("shu", t, HexCoord(2 + i, 12)) for i, t in enumerate(cfg.army)]
    tick = cfg.real_time.tick_ms
    rng = random.Random(99)
    checked = 0
    while checked < 1000:
        world.clock_ms += tick
        for _, comps in world.registry.query():
            pass
        faction = rng.choice(world.factions)
        unit = rng.choice(units[faction])
        if not world.registry.exists(unit):
            continue
        if world.clock_ms < world.locks.get(unit, 0):
            # locked: any gameplay action must bounce
            res = ex.execute(sessions[faction], "rest", {"unit_id": unit}, at_ms=world.clock_ms)
            assert res.error_code == "UnitBusy"
            continue
        from hexarena.world import MovementPoints, Position

        world.registry.get(unit, MovementPoints).current_milli = 5000
        kind = rng.choice(["move", "attack", "rest"])
        if kind == "move":
            pos = world.registry.get(unit, Position).coord
            targets = [
                c
                for c in [HexCoord(pos.col + dc, pos.row + dr) for dc, dr in [(0, 1), (0, -1), (1, 0), (-1, 0)]]
                if 0 <= c.col < 15 and 0 <= c.row < 15 and world.occupant_at(c) is None
                and hex_distance(pos, c) == 1
            ]
            if not targets:
                continue
            res = ex.execute(
                sessions[faction],
                "move",
                {"unit_id": unit, "target_position": targets[0].as_dict()},
                at_ms=world.clock_ms,
            )
            expected = action_lock_duration(cfg, "move", res.detail["path_cost"]) if res.ok else None
        elif kind == "attack":
            enemies = [
                e
                for e in units[world.opponent_of(faction)]
                if world.registry.exists(e)
            ]
            in_range = [
                e
                for e in enemies
                if hex_distance(
                    world.registry.get(unit, Position).coord,
                    world.registry.get(e, Position).coord,
                )
                <= 1
            ]
            if not in_range:
                continue
            res = ex.execute(
                sessions[faction],
                "attack",
                {"unit_id": unit, "target_id": in_range[0]},
                at_ms=world.clock_ms,
            )
            expected = action_lock_duration(cfg, "attack") if res.ok else None
        else:
            res = ex.execute(sessions[faction], "rest", {"unit_id": unit}, at_ms=world.clock_ms)
            expected = action_lock_duration(cfg, "rest") if res.ok else None
        if res.ok and expected:
            measured_ms = world.locks[unit] - world.clock_ms
            assert abs(measured_ms - expected * 1000) <= tick
            checked += 1
        if kind == "attack" and res.ok:
            # keep both armies alive; this test is about lock timing only
            from hexarena.world import UnitCount

            for group in units.values():
                for eid in group:
                    if world.registry.exists(eid):
                        world.registry.get(eid, UnitCount).current = 100


def test_info_actions_never_lock():
    cfg = ScenarioConfig()
    assert action_lock_duration(cfg, "get_faction_state") == 0.0
    assert action_lock_duration(cfg, "observation") == 0.0
    assert action_lock_duration(cfg, "move", 5) == 2.5
    assert action_lock_duration(cfg, "attack") == 1.0
    assert action_lock_duration(cfg, "fortify") == 0.5


class SpamPolicy:
    """Fires an action for every unit every tick, ignoring action locks."""

    name = "spam"

    def decide(self, obs):
        batch = []
        for unit in obs["own_units"]:
            if unit.get("in_range_enemy_ids"):
                batch.append(
                    {
                        "action": "attack",
                        "params": {
                            "unit_id": unit["id"],
                            "target_id": unit["in_range_enemy_ids"][0],
                        },
                    }
                )
            elif unit.get("reachable"):
                tile = unit["reachable"][0]
                batch.append(
                    {
                        "action": "move",
                        "params": {
                            "unit_id": unit["id"],
                            "target_position": {"col": tile["col"], "row": tile["row"]},
                        },
                    }
                )
        return batch


def test_second_command_to_locked_unit_rejected():
    rec = run_real_time(
        {"wei": SpamPolicy(), "shu": make_policy("random:2")},
        rt_config(seed=8, horizon_ms=5_000),
    )
    busy = [
        r
        for r in rec.records
        if r["type"] == "result" and not r.get("ok", True) and r.get("error_code") == "UnitBusy"
    ]
    # the spammer never waits for locks, so rejections must occur; none mutate
    assert busy
    assert all(not r.get("spatial") for r in busy)


# -- stats -----------------------------------------------------------------------


def test_stats_fixture_hand_computed():
    stats = stats_from_counters(total_calls=10, failed_calls=3, spatial_failed=2, ok_gameplay=6)
    assert stats.tce == pytest.approx(0.300)
    assert stats.sae == pytest.approx(2 / 3)
    assert stats.actions_per_game == 6


def test_stats_zero_failures_convention():
    stats = stats_from_counters(total_calls=12, failed_calls=0, spatial_failed=0, ok_gameplay=9)
    assert stats.tce == 0.0
    assert stats.sae == 0.0


def test_stats_large_fixture():
    # 500 calls, 160 failed, 54 spatial: tce = 0.32, sae = 0.3375
    stats = stats_from_counters(500, 160, 54, 301)
    assert stats.tce == pytest.approx(0.32)
    assert stats.sae == pytest.approx(0.3375)
    assert stats.actions_per_game == 301


def test_session_stats_from_live_session():
    session = AgentSession("a", "wei", "m", 0, send=lambda e: None)
    session.total_calls, session.failed_calls, session.spatial_failed = 10, 3, 2
    session.ok_calls, session.ok_gameplay = 7, 5
    session.latency_samples_ms = [10.0, 30.0]
    stats = session_stats(session)
    assert stats.tce == pytest.approx(0.3)
    assert stats.sae == pytest.approx(2 / 3)
    assert stats.mean_latency_ms == pytest.approx(20.0)


# -- replay ------------------------------------------------------------------------


def tamper(records, predicate, mutate):
    out = [dict(r) for r in records]
    for r in out:
        if predicate(r):
            mutate(r)
            return out
    raise AssertionError("no record matched the tamper predicate")


def test_turn_based_replay_verifies():
    rec = run_turn_based(
        {"wei": make_policy("greedy:7"), "shu": make_policy("random:3")}, tb_config(seed=21)
    )
    parsed = from_jsonl(to_jsonl(rec.records))
    result = verify(parsed)
    assert result.ok, result.message


def test_tampered_result_detected():
    rec = run_turn_based(
        {"wei": make_policy("greedy:7"), "shu": make_policy("random:3")}, tb_config(seed=21)
    )
    bad = tamper(
        rec.records,
        lambda r: r["type"] == "result" and isinstance(r.get("detail"), dict) and "damage_dealt" in r["detail"],
        lambda r: r["detail"].update(damage_dealt=r["detail"]["damage_dealt"] + 1),
    )
    result = verify(from_jsonl(to_jsonl(bad)))
    assert not result.ok
    assert result.mismatch_index is not None


def test_tampered_request_detected():
    rec = run_turn_based(
        {"wei": make_policy("greedy:7"), "shu": make_policy("random:3")}, tb_config(seed=21)
    )
    bad = tamper(
        rec.records,
        lambda r: r["type"] == "request" and r["action"] == "move",
        lambda r: r["params"]["target_position"].update(col=0, row=0),
    )
    result = verify(from_jsonl(to_jsonl(bad)))
    assert not result.ok


def test_real_time_replay_verifies():
    rec = run_real_time(
        {"wei": make_policy("random:5"), "shu": make_policy("random:6")},
        rt_config(seed=13, horizon_ms=5_000),
    )
    result = verify(from_jsonl(to_jsonl(rec.records)))
    assert result.ok, result.message


def test_replay_rejects_headerless_records():
    assert not verify([{"type": "request"}]).ok


def test_strip_volatile_removes_wall_clock():
    rec = {"type": "request", "ts_wall": 123, "action": "move"}
    assert strip_volatile(rec) == {"type": "request", "action": "move"}
