"""Operator command line.

Every subcommand except `serve` is a thin HTTP client of the service app:
with --url it talks to a running server, otherwise it mounts the app
in-process over an ASGI transport, so behavior is identical either way.

Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 replay digest
mismatch.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from typing import Any, Optional

import httpx

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_MISMATCH = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _scenario_arg(path: Optional[str]) -> Optional[dict[str, Any]]:
    if path is None:
        return None
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


async def _call(args, method: str, path: str, payload: dict[str, Any]) -> dict[str, Any]:
    if args.url:
        async with httpx.AsyncClient(base_url=args.url, timeout=600.0) as client:
            response = await client.request(method, path, json=payload)
    else:
        from .service import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://hexarena", timeout=600.0
        ) as client:
            response = await client.request(method, path, json=payload)
    if response.status_code >= 400:
        raise RuntimeError(f"{path} -> {response.status_code}: {response.text}")
    return response.json()


def call(args, method: str, path: str, payload: dict[str, Any]) -> dict[str, Any]:
    return asyncio.run(_call(args, method, path, payload))


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    from .service.models import HostedMatchRequest

    builtin = {}
    factions = ("wei", "shu")
    scenario = _scenario_arg(args.scenario)
    if scenario and "factions" in scenario:
        factions = tuple(scenario["factions"])
    if args.red:
        builtin[factions[0]] = args.red
    if args.blue:
        builtin[factions[1]] = args.blue
    request = HostedMatchRequest(
        match_id="default",
        mode=args.mode,
        seed=args.seed,
        scenario=scenario,
        observation_level=args.obs_level,
        builtin=builtin,
    )
    app = create_app(default_match=request)
    print(
        f"SERVE match=default mode={request.mode} seed={args.seed} "
        f"builtin={builtin or '{}'} ws=/ws/default port={args.port}"
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_match(args) -> int:
    payload = {
        "mode": args.mode,
        "seed": args.seed,
        "red": args.red,
        "blue": args.blue,
        "scenario": _scenario_arg(args.scenario),
        "include_record": args.out is not None,
    }
    data = call(args, "POST", "/scripted-matches", payload)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(data["record_jsonl"])
    outcome = data["outcome"]
    print(
        "MATCH "
        f"winner={outcome['winner'] or 'draw'} reason={outcome['terminal_reason']} "
        f"duration={outcome['duration']} surviving={outcome['surviving_fraction']:.3f} "
        f"digest={data['final_digest']}"
    )
    return EXIT_OK


def cmd_tournament(args) -> int:
    payload = {
        "players": [p.strip() for p in args.players.split(",") if p.strip()],
        "games_per_pair": args.games_per_pair,
        "mode": args.mode,
        "seed": args.seed,
        "scenario": _scenario_arg(args.scenario),
        "jobs": args.jobs,
    }
    data = call(args, "POST", "/tournaments", payload)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for outcome in data["outcomes"]:
                fh.write(json.dumps(outcome, sort_keys=True) + "\n")
    top = data["leaderboard"]["rows"][0]
    print(
        f"TOURNAMENT games={len(data['outcomes'])} "
        f"top={top['player']} pwer={top['pwer']:.1f} ser={top['ser']:.1f}"
    )
    print(data["leaderboard"]["text"])
    return EXIT_OK


def cmd_replay(args) -> int:
    with open(args.file, "r", encoding="utf-8") as fh:
        record = fh.read()
    data = call(args, "POST", "/replays/verify", {"record_jsonl": record})
    if data["ok"]:
        print(f"REPLAY ok file={args.file}")
        return EXIT_OK
    print(
        f"REPLAY mismatch file={args.file} index={data['mismatch_index']} "
        f"message={data['message']}",
        file=sys.stderr,
    )
    return EXIT_MISMATCH


def cmd_rate(args) -> int:
    outcomes = []
    with open(args.infile, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                outcomes.append(json.loads(line))
    payload = {
        "outcomes": outcomes,
        "k": args.k,
        "xi": args.xi,
        "alpha": args.alpha,
        "beta": args.beta,
        "orderings": args.orderings,
        "seed": args.seed,
    }
    data = call(args, "POST", "/ratings", payload)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump({"rows": data["rows"], "n_orderings": data["n_orderings"]}, fh, indent=2)
            fh.write("\n")
    top = data["rows"][0]
    print(f"RATE players={len(data['rows'])} top={top['player']} pwer={top['pwer']:.1f}")
    print(data["text"])
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="hexarena", description="hex wargame arena tools")
    parser.add_argument("--url", default=None, help="base URL of a running service (default: in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="host one match for protocol agents")
    serve.add_argument("--mode", choices=["turn", "real"], default="turn")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8765)
    serve.add_argument("--scenario", default=None, help="scenario config JSON file")
    serve.add_argument("--seed", type=int, default=0)
    serve.add_argument("--red", default=None, help="builtin policy for the first faction (kind:seed)")
    serve.add_argument("--blue", default=None, help="builtin policy for the second faction")
    serve.add_argument("--obs-level", default="tactical", choices=["basic", "detailed", "tactical"])
    serve.set_defaults(func=cmd_serve)

    match = sub.add_parser("match", help="run a scripted match")
    match.add_argument("--red", required=True, help="policy spec, e.g. greedy:7")
    match.add_argument("--blue", required=True)
    match.add_argument("--mode", choices=["turn", "real"], default="turn")
    match.add_argument("--seed", type=int, default=0)
    match.add_argument("--scenario", default=None)
    match.add_argument("--out", default=None, help="write the replay record (JSONL)")
    match.set_defaults(func=cmd_match)

    tournament = sub.add_parser("tournament", help="round-robin over scripted agents")
    tournament.add_argument("--players", required=True, help="comma-separated policy specs")
    tournament.add_argument("--games-per-pair", type=int, default=2)
    tournament.add_argument("--mode", choices=["turn", "real"], default="turn")
    tournament.add_argument("--seed", type=int, default=0)
    tournament.add_argument("--scenario", default=None)
    tournament.add_argument("--jobs", type=int, default=1)
    tournament.add_argument("--out", default=None, help="write outcomes (JSONL)")
    tournament.set_defaults(func=cmd_tournament)

    replay = sub.add_parser("replay", help="replay tools")
    replay_sub = replay.add_subparsers(dest="replay_command", required=True)
    replay_verify = replay_sub.add_parser("verify", help="re-execute a record and compare digests")
    replay_verify.add_argument("file")
    replay_verify.set_defaults(func=cmd_replay)

    rate = sub.add_parser("rate", help="compute a leaderboard from outcomes")
    rate.add_argument("--in", dest="infile", required=True, help="outcome JSONL file")
    rate.add_argument("--alpha", type=float, default=0.5)
    rate.add_argument("--beta", type=float, default=0.5)
    rate.add_argument("--k", type=float, default=32.0)
    rate.add_argument("--xi", type=float, default=400.0)
    rate.add_argument("--orderings", type=int, default=100)
    rate.add_argument("--seed", type=int, default=0)
    rate.add_argument("--out", default=None, help="write the leaderboard JSON")
    rate.set_defaults(func=cmd_rate)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - boundary: report and fail
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
