"""Three-party inner product directly on real vectors, via masked polynomials.

Each input coordinate is hidden as an affine polynomial evaluated at the
fixed dyadic points (1/4, 1/2, 3/4); party j ends up holding both vectors'
evaluations at t_j.  Every party then adds a random quadratic mask that
vanishes at zero before publishing its evaluation of the product
polynomial.  Interpolating the three published values back to t = 0 with
the integer weights (3, -3, 1) recovers the inner product mod tau, which
equals the true inner product because tau > n rules out wraparound.

All evaluations are carried at widened fixed-point scales (66/68 bits for
shares and masks, 132 bits for products) so the whole pipeline is exact;
the single rounding step back to the 64-bit lattice happens at output.
"""

from __future__ import annotations

from ..arith import FRAC_BITS, ModReal
from ..harness import wire
from ..sharing import (
    MASK_FRAC_BITS,
    SHARE_FRAC_BITS,
    lagrange_at_zero,
    mask_poly,
    poly_share,
)
from .base import ConfigError, Flight, FlightPlan, PartyBase, ProtocolSpec, Route

FLIGHT_POLY_SHARES = Flight(1, "poly_shares")
FLIGHT_MASKS = Flight(2, "mask_evals")
FLIGHT_REVEAL = Flight(3, "eval_reveal")

PRODUCT_FRAC_BITS = 2 * SHARE_FRAC_BITS  # 132


def _as_unit_modreal(value, tau: int) -> ModReal:
    x = value if isinstance(value, ModReal) else ModReal.from_real(value, tau)
    if x.modulus != tau or x.frac_bits != FRAC_BITS:
        raise ConfigError("input is not on the session's mod-tau lattice")
    if x.raw > 1 << FRAC_BITS:
        raise ConfigError("input coordinate outside [0, 1]")
    return x


class Sip2Party(PartyBase):
    def __init__(self, party_id: int, config, vector, rng):
        super().__init__(party_id, rng)
        self.tau = config.tau
        self.n = config.n
        if party_id != 3:
            if vector is None or len(vector) != config.n:
                raise ConfigError(f"party {party_id} needs a length-{config.n} vector")
            vector = [_as_unit_modreal(v, config.tau) for v in vector]
            self.view["input"] = [x.raw for x in vector]
        self.vector = vector  # list[ModReal] or None for the helper
        self.own_evals = None      # my own vector's evaluations at my point
        self.peer_evals = {}       # "x"/"y" -> tuple of raws at my point
        self.mask_evals = {}       # source party -> mask evaluation at my point
        self.published = {}        # eval index -> masked product evaluation

    @property
    def eval_index(self) -> int:
        return self.party_id  # party j holds the evaluations at t_j

    def emit(self, flight: Flight):
        if flight == FLIGHT_POLY_SHARES:
            return self._emit_poly_shares()
        if flight == FLIGHT_MASKS:
            return self._emit_masks()
        if flight == FLIGHT_REVEAL:
            return self._emit_reveal()
        return []

    def _emit_poly_shares(self):
        if self.party_id == 3:
            return []
        shares = [poly_share(x, self.rng) for x in self.vector]
        self.own_evals = tuple(ps[self.party_id - 1].raw for ps in shares)
        self.record_generated("own_evals", list(self.own_evals))
        width = wire.width_for(self.tau << SHARE_FRAC_BITS)
        other = 2 if self.party_id == 1 else 1
        out = []
        for dest in (other, 3):
            vec = tuple(ps[dest - 1].raw for ps in shares)
            out.append(
                (dest, wire.PolyEvalVec(SHARE_FRAC_BITS, dest, width, vec))
            )
        return out

    def _emit_masks(self):
        alpha = ModReal.uniform(self.tau, self.rng)
        beta = ModReal.uniform(self.tau, self.rng)
        self.record_generated("mask_alpha", alpha.raw)
        self.record_generated("mask_beta", beta.raw)
        mask = mask_poly(alpha, beta)
        self.mask_evals[self.party_id] = mask[self.eval_index - 1]
        width = wire.width_for(self.tau << MASK_FRAC_BITS)
        out = []
        for k in range(1, 4):
            if k == self.party_id:
                continue
            out.append(
                (k, wire.MaskEval(MASK_FRAC_BITS, k, width, mask[k - 1].raw))
            )
        return out

    def _emit_reveal(self):
        if len(self.mask_evals) != 3:
            raise ValueError("missing mask evaluations")
        masked = self._masked_product_eval()
        self.published[self.eval_index] = masked
        self.record_generated("published_eval", masked.raw)
        width = wire.width_for(self.tau << PRODUCT_FRAC_BITS)
        body = wire.ResultShare(PRODUCT_FRAC_BITS, self.eval_index, width, masked.raw)
        if self.party_id == 1:
            return [(2, body)]
        if self.party_id == 2:
            return [(1, body)]
        return [(1, body), (2, body)]

    def _masked_product_eval(self) -> ModReal:
        """P(t_j) plus all three masks, exact at the product scale."""
        if self.party_id == 1:
            xs = self.own_evals
            ys = self.peer_evals["y"]
        elif self.party_id == 2:
            xs = self.peer_evals["x"]
            ys = self.own_evals
        else:
            xs = self.peer_evals["x"]
            ys = self.peer_evals["y"]
        span = self.tau << PRODUCT_FRAC_BITS
        total = 0
        for xr, yr in zip(xs, ys):
            total += xr * yr
        total %= span
        result = ModReal(total, self.tau, PRODUCT_FRAC_BITS)
        for mask in self.mask_evals.values():
            result = result + mask.widen(PRODUCT_FRAC_BITS)
        return result

    def deliver(self, flight: Flight, sender: int, body):
        if flight == FLIGHT_POLY_SHARES:
            if not isinstance(body, wire.PolyEvalVec):
                raise ValueError(f"expected POLY_EVAL, got {type(body).__name__}")
            if body.eval_index != self.eval_index or body.frac_bits != SHARE_FRAC_BITS:
                raise ValueError("evaluation point mismatch")
            if len(body.values) != self.n:
                raise ValueError("evaluation vector has the wrong length")
            span = self.tau << SHARE_FRAC_BITS
            if any(not 0 <= v < span for v in body.values):
                raise ValueError("evaluation outside [0, tau)")
            label = "x" if sender == 1 else "y"
            if label in self.peer_evals:
                raise ValueError(f"duplicate evaluations from party {sender}")
            self.peer_evals[label] = body.values
        elif flight == FLIGHT_MASKS:
            if not isinstance(body, wire.MaskEval):
                raise ValueError(f"expected MASK_EVAL, got {type(body).__name__}")
            if body.eval_index != self.eval_index or body.frac_bits != MASK_FRAC_BITS:
                raise ValueError("mask evaluation point mismatch")
            if sender in self.mask_evals:
                raise ValueError(f"duplicate mask from party {sender}")
            self.mask_evals[sender] = ModReal(body.value, self.tau, MASK_FRAC_BITS)
        elif flight == FLIGHT_REVEAL:
            if not isinstance(body, wire.ResultShare):
                raise ValueError(f"expected RESULT_SHARE, got {type(body).__name__}")
            if body.frac_bits != PRODUCT_FRAC_BITS:
                raise ValueError("published evaluation at the wrong scale")
            if body.eval_index != sender:
                raise ValueError("published evaluation index does not match sender")
            self.published[body.eval_index] = ModReal(
                body.value, self.tau, PRODUCT_FRAC_BITS
            )
        else:
            raise ValueError(f"unexpected flight {flight.name}")

    def finish(self):
        if self.party_id == 3:
            return None
        if set(self.published) != {1, 2, 3}:
            raise ValueError("missing published evaluations")
        at_zero = lagrange_at_zero(
            self.published[1], self.published[2], self.published[3]
        )
        result = at_zero.round_to(FRAC_BITS)
        self.view["result"] = result.raw
        return result


def _validate_config(config):
    if config.n < 1:
        raise ConfigError("vector length must be at least 1")
    if config.tau <= config.n:
        raise ConfigError("tau must strictly exceed the vector length")
    if config.tau > 1 << 61:
        raise ConfigError("tau too large for the fixed-point carrier")


def _build_party(config, party_id, value, rng, **_hooks):
    return Sip2Party(party_id, config, value, rng)


def _flight_plans(config):
    return (
        FlightPlan(
            FLIGHT_POLY_SHARES,
            (
                Route(1, 2, wire.MSG_POLY_EVAL),
                Route(1, 3, wire.MSG_POLY_EVAL),
                Route(2, 1, wire.MSG_POLY_EVAL),
                Route(2, 3, wire.MSG_POLY_EVAL),
            ),
        ),
        FlightPlan(
            FLIGHT_MASKS,
            tuple(
                Route(i, j, wire.MSG_MASK_EVAL)
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
    raws = view["input"]
    return [ModReal(raw, config.tau) for raw in raws]


SPEC = ProtocolSpec(
    name="sip2",
    rounds=3,
    build_party=_build_party,
    flight_plans=_flight_plans,
    validate_config=_validate_config,
    exactness="fixed-point",
    result_parties=lambda config: (1, 2),
    input_parties=lambda config: (1, 2),
    input_from_view=_input_from_view,
)
