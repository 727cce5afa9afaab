"""Masked-sum protocol: m parties learn the sum of their private inputs.

Round 1: every ordered pair exchanges a fresh uniform mask on the mod-m
lattice.  Round 2: each party publishes its input plus all masks received
minus all masks sent, reduced mod m.  The published values sum to the true
total because every mask enters the sum exactly once with each sign, and
the cancellation is bit-exact on the fixed-point lattice.

With two parties the published sum lets each peer infer the other's input;
that is inherent in the functional, so m = 2 runs but attaches a structured
warning to the transcript instead of refusing.
"""

from __future__ import annotations

from ..arith import FRAC_BITS, ModReal
from ..harness import wire
from .base import ConfigError, Flight, FlightPlan, PartyBase, ProtocolSpec, Route

FLIGHT_MASKS = Flight(1, "rand_mask")
FLIGHT_PARTIALS = Flight(2, "partial_sum")


def _as_unit_modreal(value, m: int) -> ModReal:
    x = value if isinstance(value, ModReal) else ModReal.from_real(value, m)
    if x.modulus != m or x.frac_bits != FRAC_BITS:
        raise ConfigError("input is not on the session's mod-m lattice")
    if x.raw > 1 << FRAC_BITS:
        raise ConfigError("input outside [0, 1]")
    return x


class SecureSumParty(PartyBase):
    def __init__(self, party_id: int, m: int, x, rng):
        super().__init__(party_id, rng)
        self.m = m
        self.x = _as_unit_modreal(x, m)
        self.view["input"] = self.x.raw
        self.sent_masks = {}
        self.recv_masks = {}
        self.partials = {}
        if m == 2:
            self.warn(
                "two-party sum: the published total reveals the peer input; "
                "this is inherent in the functional"
            )

    def emit(self, flight: Flight):
        if flight == FLIGHT_MASKS:
            out = []
            for j in range(1, self.m + 1):
                if j == self.party_id:
                    continue
                mask = ModReal.uniform(self.m, self.rng)
                self.sent_masks[j] = mask
                self.record_generated(f"mask_to_{j}", mask.raw)
                out.append((j, wire.RandMask(mask.raw)))
            return out
        if flight == FLIGHT_PARTIALS:
            if len(self.recv_masks) != self.m - 1:
                raise ValueError("missing round-1 masks")
            partial = self.x
            for mask in self.recv_masks.values():
                partial = partial + mask
            for mask in self.sent_masks.values():
                partial = partial - mask
            self.partials[self.party_id] = partial
            self.record_generated("partial", partial.raw)
            return [(wire.BROADCAST, wire.PartialSum(partial.raw))]
        return []

    def deliver(self, flight: Flight, sender: int, body):
        if flight == FLIGHT_MASKS:
            if not isinstance(body, wire.RandMask):
                raise ValueError(f"expected RAND_MASK, got {type(body).__name__}")
            if sender in self.recv_masks:
                raise ValueError(f"duplicate mask from party {sender}")
            self.recv_masks[sender] = ModReal(body.raw, self.m)
        elif flight == FLIGHT_PARTIALS:
            if not isinstance(body, wire.PartialSum):
                raise ValueError(f"expected PARTIAL_SUM, got {type(body).__name__}")
            if sender in self.partials:
                raise ValueError(f"duplicate partial from party {sender}")
            self.partials[sender] = ModReal(body.raw, self.m)
        else:
            raise ValueError(f"unexpected flight {flight.name}")

    def finish(self) -> ModReal:
        if len(self.partials) != self.m:
            raise ValueError("missing published partials")
        total = self.partials[1]
        for pid in range(2, self.m + 1):
            total = total + self.partials[pid]
        self.view["result"] = total.raw
        return total


def _validate_config(config):
    if config.m < 2:
        raise ConfigError("the sum protocol needs at least 2 parties")


def _build_party(config, party_id, value, rng, **_hooks):
    if value is None:
        raise ConfigError(f"party {party_id} is missing its input")
    return SecureSumParty(party_id, config.m, value, rng)


def _flight_plans(config):
    m = config.m
    mask_routes = tuple(
        Route(i, j, wire.MSG_RAND_MASK)
        for i in range(1, m + 1)
        for j in range(1, m + 1)
        if i != j
    )
    partial_routes = tuple(
        Route(i, j, wire.MSG_PARTIAL_SUM)
        for i in range(1, m + 1)
        for j in range(1, m + 1)
        if i != j
    )
    return (
        FlightPlan(FLIGHT_MASKS, mask_routes),
        FlightPlan(FLIGHT_PARTIALS, partial_routes),
    )


def _input_from_view(config, view):
    return ModReal(view["input"], config.m)


SPEC = ProtocolSpec(
    name="secure-sum",
    rounds=2,
    build_party=_build_party,
    flight_plans=_flight_plans,
    validate_config=_validate_config,
    exactness="exact",
    result_parties=lambda config: tuple(range(1, config.m + 1)),
    input_parties=lambda config: tuple(range(1, config.m + 1)),
    input_from_view=_input_from_view,
)
