"""Wire protocol: typed envelopes, canonical serialization, and session
registration with publish-subscribe event fan-out.

The canonical form is UTF-8 JSON with sorted keys and no insignificant
whitespace, so encoding the same envelope always yields the same bytes.
Decoding is strict about the envelope frame (exactly the six fields below)
and tolerant about payload contents; payload schemas per message type live in
``data/protocol_schema.json``.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional

from .errors import (
    FactionTaken,
    MalformedMessage,
    NotRegistered,
    SchemaViolation,
    UnknownType,
    UnserializablePayload,
)


class MsgType(str, Enum):
    OBSERVATION = "OBSERVATION"
    ACTION_REQUEST = "ACTION_REQUEST"
    ACTION_RESULT = "ACTION_RESULT"
    EVENT = "EVENT"
    REGISTER = "REGISTER"
    REGISTER_ACK = "REGISTER_ACK"
    ERROR = "ERROR"
    STATS_REPORT = "STATS_REPORT"
    PING = "PING"


SERVER_ID = "server"

_ENVELOPE_FIELDS = {"msg_type", "sender", "receiver", "timestamp", "seq", "payload"}


@dataclass(frozen=True)
class Envelope:
    msg_type: MsgType
    sender: str
    receiver: str
    timestamp: int  # milliseconds since epoch, sender-assigned
    seq: int
    payload: Any

    def as_dict(self) -> dict[str, Any]:
        return {
            "msg_type": self.msg_type.value,
            "sender": self.sender,
            "receiver": self.receiver,
            "timestamp": self.timestamp,
            "seq": self.seq,
            "payload": self.payload,
        }


def canonical_json(value: Any) -> str:
    try:
        return json.dumps(
            value,
            sort_keys=True,
            separators=(",", ":"),
            ensure_ascii=False,
            allow_nan=False,
        )
    except (TypeError, ValueError) as exc:
        raise UnserializablePayload(str(exc)) from exc


def encode_envelope(env: Envelope) -> bytes:
    return canonical_json(env.as_dict()).encode("utf-8")


def decode_envelope(data: bytes | str) -> Envelope:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedMessage(f"not valid UTF-8: {exc}") from exc
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedMessage(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedMessage("envelope must be a JSON object")
    missing = _ENVELOPE_FIELDS - set(doc)
    if missing:
        raise SchemaViolation(f"missing envelope fields: {sorted(missing)}")
    extra = set(doc) - _ENVELOPE_FIELDS
    if extra:
        raise SchemaViolation(f"unexpected envelope fields: {sorted(extra)}")
    raw_type = doc["msg_type"]
    try:
        msg_type = MsgType(raw_type)
    except ValueError:
        raise UnknownType(f"unknown msg_type: {raw_type!r}") from None
    if not isinstance(doc["sender"], str) or not isinstance(doc["receiver"], str):
        raise SchemaViolation("sender and receiver must be strings")
    if not isinstance(doc["timestamp"], int) or isinstance(doc["timestamp"], bool):
        raise SchemaViolation("timestamp must be an integer (ms since epoch)")
    if not isinstance(doc["seq"], int) or isinstance(doc["seq"], bool) or doc["seq"] < 0:
        raise SchemaViolation("seq must be a non-negative integer")
    return Envelope(
        msg_type=msg_type,
        sender=doc["sender"],
        receiver=doc["receiver"],
        timestamp=doc["timestamp"],
        seq=doc["seq"],
        payload=doc["payload"],
    )


def now_ms() -> int:
    return int(time.time() * 1000)


@dataclass
class EventNotice:
    event: str  # turn_start | game_end | state_update
    detail: dict[str, Any]


@dataclass
class AgentSession:
    """One registered agent within a match."""

    agent_id: str
    faction: str
    model_id: str
    connected_at: int
    send: Callable[[Envelope], None]
    last_inbound_seq: int = -1
    last_seen_ms: int = 0
    outbound_seq: int = 0
    # tool-call accounting, consumed by the stats layer
    total_calls: int = 0
    ok_calls: int = 0
    failed_calls: int = 0
    spatial_failed: int = 0
    ok_gameplay: int = 0
    latency_samples_ms: list[float] = field(default_factory=list)
    telemetry: list[dict[str, Any]] = field(default_factory=list)
    llm_stats: list[dict[str, Any]] = field(default_factory=list)

    def next_out(self) -> int:
        seq = self.outbound_seq
        self.outbound_seq += 1
        return seq


class SessionHub:
    """Registration and event fan-out for one match.

    Sessions are keyed by faction (one session per faction). Transports are
    plain callables so the hub works identically under an in-process runner,
    test stubs, and the websocket service.
    """

    def __init__(self, factions: tuple[str, str]):
        self.factions = factions
        self.sessions: dict[str, AgentSession] = {}

    def register(
        self,
        faction: str,
        agent_id: str,
        model_id: str,
        send: Callable[[Envelope], None],
        at_ms: Optional[int] = None,
    ) -> AgentSession:
        if faction not in self.factions:
            raise SchemaViolation(f"unknown faction {faction!r}")
        if faction in self.sessions:
            raise FactionTaken(f"faction {faction} already has an agent")
        session = AgentSession(
            agent_id=agent_id,
            faction=faction,
            model_id=model_id,
            connected_at=at_ms if at_ms is not None else now_ms(),
            send=send,
        )
        self.sessions[faction] = session
        return session

    def session_for(self, faction: str) -> AgentSession:
        try:
            return self.sessions[faction]
        except KeyError:
            raise NotRegistered(f"faction {faction} has no registered agent") from None

    def all_registered(self, required: set[str]) -> bool:
        return required <= set(self.sessions)

    def check_inbound_seq(self, session: AgentSession, seq: int) -> None:
        if seq <= session.last_inbound_seq:
            raise SchemaViolation(
                f"seq {seq} is not greater than last seen {session.last_inbound_seq}"
            )
        session.last_inbound_seq = seq

    def _deliver(self, session: AgentSession, msg_type: MsgType, payload: Any) -> None:
        env = Envelope(
            msg_type=msg_type,
            sender=SERVER_ID,
            receiver=session.agent_id,
            timestamp=now_ms(),
            seq=session.next_out(),
            payload=payload,
        )
        try:
            session.send(env)
        except Exception:
            # a dropped recipient must never take the match down
            pass

    def publish_event(self, notice: EventNotice) -> None:
        payload = {"event": notice.event, "detail": notice.detail}
        for faction in sorted(self.sessions):
            self._deliver(self.sessions[faction], MsgType.EVENT, payload)

    def send_to(self, faction: str, msg_type: MsgType, payload: Any) -> None:
        if faction in self.sessions:
            self._deliver(self.sessions[faction], msg_type, payload)


def error_payload(code: str, message: str, spatial: bool = False) -> dict[str, Any]:
    return {"code": code, "message": message, "spatial": spatial}
