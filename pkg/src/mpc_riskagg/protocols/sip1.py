"""Three-party inner product over a prime field, information-theoretic.

Parties 1 and 2 hold integer vectors quantized to [0, q); party 3 helps
with the computation and holds no input.  Round 1 distributes additive
shares of every coordinate with an asymmetric routing: party 2 receives
two of the three x-shares, party 3 one; that routing is exactly what makes
party 2's partial-product formula computable.  Round 2 re-shares each
party's partial product; round 3 reveals the re-share sums, whose total is
the inner product -- exact, because p > n*q^2 rules out wraparound.
"""

from __future__ import annotations

from ..arith import validate_field_prime
from ..harness import wire
from ..sharing import split_vector_mod
from .base import ConfigError, Flight, FlightPlan, PartyBase, ProtocolSpec, Route

FLIGHT_INPUT_SHARES = Flight(1, "input_shares")
FLIGHT_RESHARE = Flight(2, "product_reshare")
FLIGHT_REVEAL = Flight(3, "result_reveal")

_FIELD_WIDTH = 8  # field residues ride as u64


class Sip1Party(PartyBase):
    def __init__(self, party_id: int, config, vector, rng):
        super().__init__(party_id, rng)
        self.p = config.p
        self.n = config.n
        if party_id != 3:
            if vector is None or len(vector) != config.n:
                raise ConfigError(f"party {party_id} needs a length-{config.n} vector")
            vector = [int(v) for v in vector]
            if any(not 0 <= v < config.p for v in vector):
                raise ConfigError("vector entry outside [0, p)")
            self.view["input"] = list(vector)
        self.vector = vector
        self.my_shares = None      # 3 share vectors of my own input
        self.peer_shares = {}      # share index -> vector received
        self.rho_shares = {}       # source party -> my share of their partial
        self.revealed = {}         # party -> revealed sum R(k)

    # -- round 1 ---------------------------------------------------------

    def emit(self, flight: Flight):
        if flight == FLIGHT_INPUT_SHARES:
            return self._emit_input_shares()
        if flight == FLIGHT_RESHARE:
            return self._emit_reshare()
        if flight == FLIGHT_REVEAL:
            return self._emit_reveal()
        return []

    def _emit_input_shares(self):
        if self.party_id == 3:
            return []
        self.my_shares = split_vector_mod(self.vector, 3, self.p, self.rng)
        for idx in range(3):
            self.record_generated(f"own_share_{idx + 1}", list(self.my_shares[idx]))
        other = 2 if self.party_id == 1 else 1
        to_other = wire.ShareVectors(
            _FIELD_WIDTH,
            (
                wire.ShareGroup(1, 3, tuple(self.my_shares[0])),
                wire.ShareGroup(2, 3, tuple(self.my_shares[1])),
            ),
        )
        to_helper = wire.ShareVectors(
            _FIELD_WIDTH, (wire.ShareGroup(3, 3, tuple(self.my_shares[2])),)
        )
        return [(other, to_other), (3, to_helper)]

    def _partial_product(self) -> int:
        """This party's slice of the per-coordinate products, summed mod p."""
        p = self.p
        total = 0
        if self.party_id == 1:
            x1, _, x3 = self.my_shares
            y1 = self.peer_shares[1]
            y2 = self.peer_shares[2]
            for i in range(self.n):
                total += (x1[i] + x3[i]) * (y1[i] + y2[i])
        elif self.party_id == 2:
            y1, y2, y3 = self.my_shares
            x1 = self.peer_shares[1]
            x2 = self.peer_shares[2]
            for i in range(self.n):
                total += y3[i] * (x1[i] + x2[i]) + x2[i] * (y1[i] + y2[i])
        else:
            x3 = self.peer_shares["x3"]
            y3 = self.peer_shares["y3"]
            for i in range(self.n):
                total += x3[i] * y3[i]
        return total % p

    def _emit_reshare(self):
        partial = self._partial_product()
        self.record_generated("partial_product", partial)
        shares = split_vector_mod([partial], 3, self.p, self.rng)
        self.record_generated("partial_reshare", [s[0] for s in shares])
        self.rho_shares[self.party_id] = shares[self.party_id - 1][0]
        out = []
        for k in range(1, 4):
            if k == self.party_id:
                continue
            body = wire.ShareVectors(
                _FIELD_WIDTH, (wire.ShareGroup(k, 3, (shares[k - 1][0],)),)
            )
            out.append((k, body))
        return out

    def _emit_reveal(self):
        if len(self.rho_shares) != 3:
            raise ValueError("missing re-shared partial products")
        revealed = sum(self.rho_shares.values()) % self.p
        self.revealed[self.party_id] = revealed
        self.record_generated("revealed_sum", revealed)
        body = wire.ResultShare(0, 0, _FIELD_WIDTH, revealed)
        if self.party_id == 1:
            return [(2, body)]
        if self.party_id == 2:
            return [(1, body)]
        return [(1, body), (2, body)]  # the helper reports to both endpoints

    # -- delivery ----------------------------------------------------------

    def deliver(self, flight: Flight, sender: int, body):
        if flight == FLIGHT_INPUT_SHARES:
            self._deliver_input_shares(sender, body)
        elif flight == FLIGHT_RESHARE:
            self._deliver_reshare(sender, body)
        elif flight == FLIGHT_REVEAL:
            self._deliver_reveal(sender, body)
        else:
            raise ValueError(f"unexpected flight {flight.name}")

    def _check_share_vec(self, values):
        if len(values) != self.n:
            raise ValueError("share vector has the wrong length")
        if any(not 0 <= v < self.p for v in values):
            raise ValueError("share outside [0, p)")

    def _deliver_input_shares(self, sender: int, body):
        if not isinstance(body, wire.ShareVectors):
            raise ValueError(f"expected SHARE, got {type(body).__name__}")
        if self.party_id == 3:
            label = "x3" if sender == 1 else "y3"
            (group,) = body.groups
            self._check_share_vec(group.values)
            self.peer_shares[label] = group.values
        else:
            for group in body.groups:
                self._check_share_vec(group.values)
                if group.index in self.peer_shares:
                    raise ValueError(f"duplicate share index {group.index}")
                self.peer_shares[group.index] = group.values

    def _deliver_reshare(self, sender: int, body):
        if not isinstance(body, wire.ShareVectors):
            raise ValueError(f"expected SHARE, got {type(body).__name__}")
        (group,) = body.groups
        if group.index != self.party_id or len(group.values) != 1:
            raise ValueError("misrouted partial-product share")
        if sender in self.rho_shares:
            raise ValueError(f"duplicate re-share from party {sender}")
        self.rho_shares[sender] = group.values[0]

    def _deliver_reveal(self, sender: int, body):
        if not isinstance(body, wire.ResultShare):
            raise ValueError(f"expected RESULT_SHARE, got {type(body).__name__}")
        if not 0 <= body.value < self.p:
            raise ValueError("revealed sum outside [0, p)")
        self.revealed[sender] = body.value

    def finish(self):
        if self.party_id == 3:
            return None
        if len(self.revealed) != 3:
            raise ValueError("missing revealed sums")
        result = sum(self.revealed.values()) % self.p
        self.view["result"] = result
        return result


def _validate_config(config):
    if config.n < 1:
        raise ConfigError("vector length must be at least 1")
    if config.q < 2:
        raise ConfigError("quantization level must be at least 2")
    try:
        validate_field_prime(config.p, config.n, config.q)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_party(config, party_id, value, rng, **_hooks):
    return Sip1Party(party_id, config, value, rng)


def _flight_plans(config):
    return (
        FlightPlan(
            FLIGHT_INPUT_SHARES,
            (
                Route(1, 2, wire.MSG_SHARE),
                Route(1, 3, wire.MSG_SHARE),
                Route(2, 1, wire.MSG_SHARE),
                Route(2, 3, wire.MSG_SHARE),
            ),
        ),
        FlightPlan(
            FLIGHT_RESHARE,
            tuple(
                Route(i, j, wire.MSG_SHARE)
                for i in range(1, 4)
                for j in range(1, 4)
                if i != j
            ),
        ),
        FlightPlan(
            FLIGHT_REVEAL,
            (
                Route(1, 2, wire.MSG_RESULT_SHARE),
                Route(2, 1, wire.MSG_RESULT_SHARE),
                Route(3, 1, wire.MSG_RESULT_SHARE),
                Route(3, 2, wire.MSG_RESULT_SHARE),
            ),
        ),
    )


def _input_from_view(config, view):
    return view["input"]


SPEC = ProtocolSpec(
    name="sip1",
    rounds=3,
    build_party=_build_party,
    flight_plans=_flight_plans,
    validate_config=_validate_config,
    exactness="exact",
    result_parties=lambda config: (1, 2),
    input_parties=lambda config: (1, 2),
    input_from_view=_input_from_view,
)
