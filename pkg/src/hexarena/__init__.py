"""Deterministic 1v1 hex wargame arena.

Engine (hex math, ECS world, combat rules), wire protocol, match schedulers,
scripted agents, and rating tools, served over a FastAPI app with a websocket
transport for live agents.
"""

__version__ = "0.1.0"
