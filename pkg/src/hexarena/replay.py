"""Replay records: JSONL serialization and re-execution verification.

A record is self-contained: its header carries the resolved scenario, mode,
and seed, so verification rebuilds the world, feeds every recorded request
back through the executor, and compares regenerated results, events, digest
checkpoints, and the final digest against what was recorded. Wall-clock
timestamps and latency figures are volatile and excluded from comparison.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Optional

from .actions import Executor
from .match import MatchConfig, MatchRecorder
from .protocol import SessionHub
from .scenario import scenario_from_dict
from .world import REAL_TIME, snapshot_digest

VOLATILE_KEYS = {"ts_wall", "latency_ms", "created_ms"}


def strip_volatile(record: dict[str, Any]) -> dict[str, Any]:
    return {k: v for k, v in record.items() if k not in VOLATILE_KEYS}


def to_jsonl(records: list[dict[str, Any]]) -> str:
    return "\n".join(json.dumps(r, sort_keys=True, separators=(",", ":")) for r in records) + "\n"


def from_jsonl(text: str) -> list[dict[str, Any]]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]


@dataclass
class VerifyResult:
    ok: bool
    message: str
    mismatch_index: Optional[int] = None  # line number in the record, 0-based

    def as_dict(self) -> dict[str, Any]:
        return {"ok": self.ok, "message": self.message, "mismatch_index": self.mismatch_index}


def _world_from_header(header: dict[str, Any]):
    from .match import build_world

    config = MatchConfig(
        mode=header["mode"],
        seed=header["seed"],
        scenario=scenario_from_dict(header["scenario"]),
        observation_level=header.get("observation_level", "tactical"),
    )
    return build_world(config)


def verify(records: list[dict[str, Any]]) -> VerifyResult:
    """Re-execute a record against a fresh world and compare everything."""
    if not records or records[0].get("type") != "header":
        return VerifyResult(False, "record does not start with a header", 0)
    header = records[0]
    try:
        world = _world_from_header(header)
    except Exception as exc:
        return VerifyResult(False, f"could not rebuild world: {exc}", 0)
    hub = SessionHub(world.factions)
    recorder = MatchRecorder(world)
    recorder.record_header(
        {k: header[k] for k in ("mode", "seed", "observation_level", "scenario", "agents") if k in header}
    )
    executor = Executor(world, hub, recorder)
    sessions = {
        f: hub.register(f, agent_id=str(name), model_id="replay", send=lambda env: None)
        for f, name in header.get("agents", {}).items()
    }
    for f in world.factions:
        if f not in sessions:
            sessions[f] = hub.register(f, agent_id=f, model_id="replay", send=lambda env: None)

    executor.emit_turn_events()
    final_digest_expected = None
    for line_no, record in enumerate(records[1:], start=1):
        rtype = record.get("type")
        if rtype == "request":
            if world.mode == REAL_TIME and "at_ms" in record:
                target = record["at_ms"]
                if target < world.clock_ms:
                    return VerifyResult(False, "request clock moves backwards", line_no)
                _advance_clock(world, target)
            executor.execute(
                sessions[record["faction"]],
                record["action"],
                record["params"],
                at_ms=record.get("at_ms"),
            )
        elif rtype == "summary":
            final_digest_expected = record.get("final_digest")
    replayed = [strip_volatile(r) for r in recorder.records]
    recorded = [strip_volatile(r) for r in records if r.get("type") != "summary"]
    # trailing events after the last request (e.g. horizon game_end) are only
    # present when the original run reached them through the tick loop
    for idx, (want, got) in enumerate(zip(recorded, replayed)):
        if want != got:
            return VerifyResult(
                False,
                f"record {idx} diverged: recorded {json.dumps(want, sort_keys=True)[:200]} "
                f"vs replayed {json.dumps(got, sort_keys=True)[:200]}",
                idx,
            )
    if len(recorded) > len(replayed):
        missing = recorded[len(replayed)]
        if not _is_horizon_tail(recorded[len(replayed):], world, executor):
            return VerifyResult(
                False, f"replay ended early at record {len(replayed)}: {missing}", len(replayed)
            )
    if final_digest_expected is not None:
        actual = snapshot_digest(world)
        if actual != final_digest_expected:
            return VerifyResult(
                False,
                f"final digest mismatch: recorded {final_digest_expected}, replayed {actual}",
                len(records) - 1,
            )
    return VerifyResult(True, "replay matches the record")


def _advance_clock(world, target_ms: int) -> None:
    """Step the simulated clock to target, applying the same periodic effects
    as the live real-time scheduler."""
    from .match import _regen_mp, _rt_periodic

    rt = world.config.real_time
    regen = int(round(rt.mp_regen * rt.tick_ms))
    while world.clock_ms < target_ms:
        world.clock_ms += rt.tick_ms
        _regen_mp(world, regen)
        _rt_periodic(world, rt)


def _is_horizon_tail(tail: list[dict[str, Any]], world, executor) -> bool:
    """A recorded horizon/game-end tail is acceptable if replaying the clock
    to the horizon reproduces it."""
    if world.mode != REAL_TIME or executor.outcome is not None:
        return False
    _advance_clock(world, world.config.horizon_ms)
    marker = len(executor.recorder.records)
    executor.check_end()
    regenerated = [strip_volatile(r) for r in executor.recorder.records[marker:]]
    return regenerated == [strip_volatile(r) for r in tail]
