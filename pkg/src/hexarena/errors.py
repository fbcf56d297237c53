"""Rule and protocol error taxonomy.

Each error carries a stable machine code plus a ``spatial`` flag marking
boundary / range / path violations, which downstream stats separate from other
failure kinds.
"""

from __future__ import annotations


class ArenaError(Exception):
    code = "ArenaError"
    spatial = False

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


def _error(name: str, *, spatial: bool = False, base: type = ArenaError) -> type:
    return type(name, (base,), {"code": name, "spatial": spatial})


# world / spawning
OccupiedTile = _error("OccupiedTile")
ImpassableTile = _error("ImpassableTile")
UnknownEntity = _error("UnknownEntity")
DegenerateMap = _error("DegenerateMap")

# validation layers
OutOfBounds = _error("OutOfBounds", spatial=True)
NotYourUnit = _error("NotYourUnit")
NotYourTurn = _error("NotYourTurn")
MissingComponent = _error("MissingComponent")
UnknownAction = _error("UnknownAction")
SchemaViolation = _error("SchemaViolation")
UnknownFaction = _error("UnknownFaction")

# movement / combat
InsufficientMP = _error("InsufficientMP", spatial=True)
Blocked = _error("Blocked", spatial=True)
StatusForbids = _error("StatusForbids")
OutOfRange = _error("OutOfRange", spatial=True)
FriendlyFire = _error("FriendlyFire")
DeadTarget = _error("DeadTarget")
InsufficientAP = _error("InsufficientAP")
DomainError = _error("DomainError")

# support actions
AlreadyOwned = _error("AlreadyOwned")
NotOwnedTile = _error("NotOwnedTile")
MaxFortification = _error("MaxFortification")
TerrainForbidsConstruction = _error("TerrainForbidsConstruction")
SkillOnCooldown = _error("SkillOnCooldown")
InsufficientCP = _error("InsufficientCP")
InsufficientSP = _error("InsufficientSP")
UnknownSkill = _error("UnknownSkill")

# scheduling / protocol
WrongMode = _error("WrongMode")
UnitBusy = _error("UnitBusy")
NotRegistered = _error("NotRegistered")
FactionTaken = _error("FactionTaken")
MalformedMessage = _error("MalformedMessage")
UnknownType = _error("UnknownType")
UnserializablePayload = _error("UnserializablePayload")
InvalidScore = _error("InvalidScore")
InsufficientPlayers = _error("InsufficientPlayers")
