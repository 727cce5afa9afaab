"""Two-party inner product over Z_{n*q^2} built on 1-of-k oblivious transfer.

No helper party: for every coordinate, each side splits its entry into two
residues mod D = n*q^2, reveals one residue to the peer, and runs one OT in
each direction so that each side picks up an additively masked multiple of
the residue it never saw.  The two local combinations p_i(1) and p_i(2)
then satisfy p_i(1) + p_i(2) = x_i * y_i mod D coordinate-wise, and the
exchanged totals reveal the inner product exactly (it is at most
n*(q-1)^2 < D, so no wraparound).

Security here is cryptographic, not information-theoretic: it rests on the
RSA trapdoor inside the OT layer.  The OT messages are sub-flights of
round 2; the protocol-level transcript has three rounds.
"""

from __future__ import annotations

from ..harness import wire
from ..ot import MIN_RSA_BITS, OtReceiver, OtSender, rsa_keygen
from .base import ConfigError, Flight, FlightPlan, PartyBase, ProtocolSpec, Route

FLIGHT_INPUT_SHARES = Flight(1, "input_shares")
FLIGHT_OT_BLINDERS = Flight(2, "ot_blinders")
FLIGHT_OT_BLINDED = Flight(2, "ot_blinded")
FLIGHT_OT_MASKED = Flight(2, "ot_masked")
FLIGHT_REVEAL = Flight(3, "result_reveal")


def _encode_pubkey(n: int, e: int) -> bytes:
    nb = n.to_bytes((n.bit_length() + 7) // 8, "big")
    eb = e.to_bytes((e.bit_length() + 7) // 8, "big")
    return (
        len(nb).to_bytes(4, "big") + nb + len(eb).to_bytes(4, "big") + eb
    )


def _decode_pubkey(data: bytes):
    ln = int.from_bytes(data[:4], "big")
    n = int.from_bytes(data[4 : 4 + ln], "big")
    off = 4 + ln
    le = int.from_bytes(data[off : off + 4], "big")
    e = int.from_bytes(data[off + 4 : off + 4 + le], "big")
    if off + 4 + le != len(data):
        raise ValueError("bad public-key trailer")
    return n, e


class Sip3Party(PartyBase):
    def __init__(self, party_id: int, config, vector, rng, keypair=None):
        super().__init__(party_id, rng)
        self.q = config.q
        self.n = config.n
        self.domain = config.n * config.q * config.q
        if vector is None or len(vector) != config.n:
            raise ConfigError(f"party {party_id} needs a length-{config.n} vector")
        self.vector = [int(v) for v in vector]
        if any(not 0 <= v < config.q for v in self.vector):
            raise ConfigError("vector entry outside [0, q)")
        self.view["input"] = list(self.vector)
        self.keypair = keypair or rsa_keygen(config.rsa_bits, rng)
        self.peer_id = 2 if party_id == 1 else 1
        self.peer_pub = None
        self.kept = None          # residues kept private (x_i(1) / y_i(2))
        self.revealed_out = None  # residues revealed to the peer
        self.revealed_in = None   # residues the peer revealed to us
        self.offsets = None       # additive offsets hiding our OT lists
        self.senders = []
        self.receivers = []
        self.picked = None        # values picked up via OT from the peer
        self.product_shares = None
        self.rho = {}

    def emit(self, flight: Flight):
        if flight == FLIGHT_INPUT_SHARES:
            return self._emit_input_shares()
        if flight == FLIGHT_OT_BLINDERS:
            return self._emit_ot_blinders()
        if flight == FLIGHT_OT_BLINDED:
            return self._emit_ot_blinded()
        if flight == FLIGHT_OT_MASKED:
            return self._emit_ot_masked()
        if flight == FLIGHT_REVEAL:
            return self._emit_reveal()
        return []

    def _emit_input_shares(self):
        d = self.domain
        self.revealed_out = [self.rng.randrange(d) for _ in range(self.n)]
        self.kept = [(v - r) % d for v, r in zip(self.vector, self.revealed_out)]
        self.record_generated("revealed_residues", list(self.revealed_out))
        self.record_generated("kept_residues", list(self.kept))
        # Party 1 reveals the index-2 residues of x, party 2 the index-1
        # residues of y; the kept residues double as each side's OT choices.
        index = 2 if self.party_id == 1 else 1
        body = wire.ShareVectors(
            wire.width_for(d),
            (wire.ShareGroup(index, 2, tuple(self.revealed_out)),),
            trailer=_encode_pubkey(*self.keypair.public),
        )
        return [(self.peer_id, body)]

    def _emit_ot_blinders(self):
        d = self.domain
        self.offsets = [self.rng.randrange(d) for _ in range(self.n)]
        self.record_generated("ot_offsets", list(self.offsets))
        # Party 1's lists step by its kept x-residue; party 2's lists step by
        # the x-residue it was shown.  Either way the peer's pick works out
        # to -offset + (its choice) * multiplier.
        multipliers = self.kept if self.party_id == 1 else self.revealed_in
        rows = []
        for i in range(self.n):
            offset, mult = self.offsets[i], multipliers[i]
            values = [(-offset + j * mult) % d for j in range(d)]
            sender = OtSender(values, d, self.keypair, self.rng)
            self.senders.append(sender)
            rows.append(tuple(sender.step1_blinders()))
        width = wire.width_for(self.keypair.n)
        return [(self.peer_id, wire.OtBlinders(width, d, tuple(rows)))]

    def _emit_ot_blinded(self):
        blinded = tuple(
            r.step2_blind(row) for r, row in zip(self.receivers, self._blinder_rows)
        )
        width = wire.width_for(self.peer_pub[0])
        return [(self.peer_id, wire.OtBlinded(width, blinded))]

    def _emit_ot_masked(self):
        rows = tuple(
            tuple(s.step3_masked(c)) for s, c in zip(self.senders, self._blinded_in)
        )
        return [(self.peer_id, wire.OtMasked(wire.width_for(self.domain), self.domain, rows))]

    def _emit_reveal(self):
        d = self.domain
        self.picked = [
            r.step4_unmask(row) for r, row in zip(self.receivers, self._masked_rows)
        ]
        self.record_generated("ot_picked", list(self.picked))
        # p_i = kept residue * shown residue + own offset + picked value (mod D)
        choice = self._choice_indices()
        self.product_shares = [
            (self.kept[i] * choice[i] + self.offsets[i] + self.picked[i]) % d
            for i in range(self.n)
        ]
        self.record_generated("product_shares", list(self.product_shares))
        rho = sum(self.product_shares) % d
        self.rho[self.party_id] = rho
        self.record_generated("partial_sum", rho)
        return [
            (self.peer_id, wire.ResultShare(0, 0, wire.width_for(d), rho))
        ]

    def _choice_indices(self):
        """Multipliers for the local product term: each side pairs its kept
        residue with the residue the peer revealed to it."""
        return self.revealed_in

    def deliver(self, flight: Flight, sender: int, body):
        d = self.domain
        if flight == FLIGHT_INPUT_SHARES:
            if not isinstance(body, wire.ShareVectors):
                raise ValueError(f"expected SHARE, got {type(body).__name__}")
            (group,) = body.groups
            if len(group.values) != self.n:
                raise ValueError("residue vector has the wrong length")
            if any(not 0 <= v < d for v in group.values):
                raise ValueError("residue outside the element domain")
            expected_index = 1 if self.party_id == 1 else 2
            if group.index != expected_index:
                raise ValueError("misrouted residue reveal")
            self.revealed_in = list(group.values)
            self.peer_pub = _decode_pubkey(body.trailer)
        elif flight == FLIGHT_OT_BLINDERS:
            if not isinstance(body, wire.OtBlinders):
                raise ValueError(f"expected OT_X, got {type(body).__name__}")
            if len(body.rows) != self.n or body.branches != d:
                raise ValueError("blinder matrix has the wrong shape")
            # Party 1 chooses with the residues the peer revealed to it;
            # party 2 chooses with its own kept residues.
            idxs = self.revealed_in if self.party_id == 1 else self.kept
            self.receivers = [
                OtReceiver(d, idxs[i], d, self.peer_pub, self.rng)
                for i in range(self.n)
            ]
            self._blinder_rows = body.rows
        elif flight == FLIGHT_OT_BLINDED:
            if not isinstance(body, wire.OtBlinded):
                raise ValueError(f"expected OT_C, got {type(body).__name__}")
            if len(body.values) != self.n:
                raise ValueError("blinded-key vector has the wrong length")
            self._blinded_in = body.values
        elif flight == FLIGHT_OT_MASKED:
            if not isinstance(body, wire.OtMasked):
                raise ValueError(f"expected OT_A, got {type(body).__name__}")
            if len(body.rows) != self.n or body.branches != d:
                raise ValueError("masked matrix has the wrong shape")
            self._masked_rows = body.rows
        elif flight == FLIGHT_REVEAL:
            if not isinstance(body, wire.ResultShare):
                raise ValueError(f"expected RESULT_SHARE, got {type(body).__name__}")
            if not 0 <= body.value < d:
                raise ValueError("partial sum outside the element domain")
            self.rho[sender] = body.value
        else:
            raise ValueError(f"unexpected flight {flight.name}")

    def finish(self) -> int:
        if set(self.rho) != {1, 2}:
            raise ValueError("missing partial sums")
        result = (self.rho[1] + self.rho[2]) % self.domain
        self.view["result"] = result
        return result


def _validate_config(config):
    if config.n < 1:
        raise ConfigError("vector length must be at least 1")
    if config.q < 2:
        raise ConfigError("quantization level must be at least 2")
    if config.rsa_bits < MIN_RSA_BITS:
        raise ConfigError(f"RSA keys below {MIN_RSA_BITS} bits are not usable")


def _build_party(config, party_id, value, rng, keypairs=None, **_hooks):
    keypair = (keypairs or {}).get(party_id)
    return Sip3Party(party_id, config, value, rng, keypair)


def _flight_plans(config):
    def both(flight, msg_type):
        return FlightPlan(flight, (Route(1, 2, msg_type), Route(2, 1, msg_type)))

    return (
        both(FLIGHT_INPUT_SHARES, wire.MSG_SHARE),
        both(FLIGHT_OT_BLINDERS, wire.MSG_OT_X),
        both(FLIGHT_OT_BLINDED, wire.MSG_OT_C),
        both(FLIGHT_OT_MASKED, wire.MSG_OT_A),
        both(FLIGHT_REVEAL, wire.MSG_RESULT_SHARE),
    )


def _input_from_view(config, view):
    return view["input"]


SPEC = ProtocolSpec(
    name="sip3",
    rounds=3,
    build_party=_build_party,
    flight_plans=_flight_plans,
    validate_config=_validate_config,
    exactness="exact",
    result_parties=lambda config: (1, 2),
    input_parties=lambda config: (1, 2),
    input_from_view=_input_from_view,
)
