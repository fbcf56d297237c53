"""Generate parity fixtures for the TypeScript client tests.

Captures (observation -> expected batch) sequences from the server's builtin
greedy policy across seeded matches, plus hex-distance cases. Run from the
repository root after any change to the greedy decision procedure:

    python3 client/scripts/gen_fixtures.py
"""

import json
import pathlib
import random

from hexarena.actions import Executor, build_observation
from hexarena.agents import GreedyPolicy, RandomPolicy
from hexarena.hexes import HexCoord, hex_distance
from hexarena.match import MatchConfig, build_world
from hexarena.protocol import SessionHub

OUT_DIR = pathlib.Path(__file__).parent.parent / "test" / "fixtures"


def greedy_cases(seeds=(3, 11, 42), max_turns=30):
    matches = []
    for seed in seeds:
        config = MatchConfig(mode="turn_based", seed=seed)
        world = build_world(config)
        hub = SessionHub(world.factions)
        sessions = {
            f: hub.register(f, agent_id=f, model_id="t", send=lambda e: None)
            for f in world.factions
        }
        executor = Executor(world, hub)
        greedy_faction = world.factions[0]
        policies = {
            world.factions[0]: GreedyPolicy(0),
            world.factions[1]: RandomPolicy(seed + 100),
        }
        steps = []
        while executor.outcome is None and world.turn_number <= max_turns:
            active = world.active_faction
            obs = build_observation(world, active, "tactical")
            batch = policies[active].decide(obs)
            if active == greedy_faction:
                steps.append({"observation": obs, "expected_batch": batch})
            executor.execute_batch(sessions[active], batch)
            if executor.outcome is None and world.active_faction == active:
                executor.execute(sessions[active], "end_turn", {"faction": active})
        matches.append({"seed": seed, "steps": steps})
    return matches


def hex_cases(n=300, seed=7):
    rng = random.Random(seed)
    cases = []
    for _ in range(n):
        a = HexCoord(rng.randrange(15), rng.randrange(15))
        b = HexCoord(rng.randrange(15), rng.randrange(15))
        cases.append(
            {"a": a.as_dict(), "b": b.as_dict(), "distance": hex_distance(a, b)}
        )
    return cases


def main():
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    with open(OUT_DIR / "greedy_cases.json", "w") as fh:
        json.dump(greedy_cases(), fh)
    with open(OUT_DIR / "hex_cases.json", "w") as fh:
        json.dump(hex_cases(), fh)
    print(f"fixtures written to {OUT_DIR}")


if __name__ == "__main__":
    main()
