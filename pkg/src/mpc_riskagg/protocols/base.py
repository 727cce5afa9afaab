"""Shared contracts for the round-based party state machines.

A protocol is a fixed schedule of flights.  Each flight belongs to a
numbered round; every party first emits all of its messages for the
flight, then the driver delivers them, so no party ever sees a message
from a later round before finishing the current one.  Some rounds contain
several flights (the oblivious-transfer exchange nests inside one round of
its host protocol).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


class ConfigError(ValueError):
    """Session parameters rejected before any message is sent."""


class ProtocolAbort(RuntimeError):
    """A party failed mid-session; carries who and in which round."""

    def __init__(self, party_id: int, round_no: int, reason: str):
        super().__init__(f"party {party_id} aborted in round {round_no}: {reason}")
        self.party_id = party_id
        self.round_no = round_no
        self.reason = reason


@dataclass(frozen=True)
class Flight:
    round: int
    name: str


@dataclass
class SessionConfig:
    """Validated parameters for one protocol session."""

    protocol: str
    m: int = 0          # party count
    n: int = 0          # vector length
    q: int = 0          # quantization level
    p: int = 0          # field prime
    tau: int = 0        # mask modulus for the real-valued inner product
    bound: float = 1.0  # public scale bound for series data
    seed: Optional[int] = None
    rsa_bits: int = 512
    timeout_s: float = 30.0

    def canonical_dict(self) -> dict:
        """The transport-independent view of the config (hashed, persisted)."""
        return {
            "protocol": self.protocol,
            "m": self.m,
            "n": self.n,
            "q": self.q,
            "p": self.p,
            "tau": self.tau,
            "bound": self.bound,
            "seed": self.seed,
            "rsa_bits": self.rsa_bits,
        }


@dataclass
class SessionResult:
    protocol: str
    value: object            # ModReal, int, or None for parties without output
    exactness: str           # "exact" | "fixed-point" | "quantized(step)"


class PartyBase:
    """Bookkeeping common to all party state machines.

    Subclasses implement ``emit(flight)``, ``deliver(flight, sender, body)``
    and ``finish()``.  The view dict accumulates everything this party
    generated, sent, and received, tagged by round; it is the object the
    secrecy checks run on.
    """

    def __init__(self, party_id: int, rng):
        self.party_id = party_id
        self.rng = rng
        self.view = {
            "party": party_id,
            "input": None,
            "generated": {},
            "sent": [],
            "received": [],
            "result": None,
            "warnings": [],
        }

    def record_generated(self, label: str, value):
        self.view["generated"][label] = value

    def record_sent(self, round_no: int, recipient: int, msg_name: str, summary):
        self.view["sent"].append(
            {"round": round_no, "to": recipient, "type": msg_name, "body": summary}
        )

    def record_received(self, round_no: int, sender: int, msg_name: str, summary):
        self.view["received"].append(
            {"round": round_no, "from": sender, "type": msg_name, "body": summary}
        )

    def warn(self, message: str):
        self.view["warnings"].append(message)


@dataclass(frozen=True)
class Route:
    sender: int
    recipient: int
    msg_type: int


@dataclass(frozen=True)
class FlightPlan:
    """One flight plus the exact set of directed messages it must carry."""

    flight: Flight
    routes: tuple


@dataclass
class ProtocolSpec:
    """Everything a driver needs to run one protocol."""

    name: str
    rounds: int
    build_party: object     # (config, party_id, input, rng, **hooks) -> party
    flight_plans: object    # (config) -> tuple[FlightPlan, ...]
    validate_config: object  # (config) -> None, raises ConfigError
    exactness: str
    result_parties: object  # (config) -> tuple of party ids entitled to output
    input_parties: object   # (config) -> tuple of party ids that hold inputs
    input_from_view: object = None  # (config, view) -> party input, for replay
    extra_state: dict = field(default_factory=dict)
