"""In-process session driver with strict round barriers.

Each flight runs in two phases: every party emits all of its messages,
then the bus delivers them.  A message for round r+1 therefore cannot
exist, let alone be observed, before every round-r message has been
delivered.  Emitted traffic is checked against the protocol's flight plan,
and recorded frames are kept in canonical per-flight order so two runs of
the same seeded session are byte-identical.
"""

from __future__ import annotations

import random
import time
from typing import Callable, Optional

from ..protocols.base import (
    ConfigError,
    ProtocolAbort,
    SessionConfig,
    SessionResult,
)
from . import wire
from .transcript import (
    Transcript,
    derive_party_rng_seed,
    derive_session_id,
    result_to_dict,
)


def default_rng_factory(config: SessionConfig) -> Callable[[int], random.Random]:
    """Seeded runs derive one stream per party; unseeded runs use OS entropy."""
    if config.seed is None:
        return lambda party_id: random.SystemRandom()
    return lambda party_id: random.Random(
        derive_party_rng_seed(config.seed, party_id)
    )


def _party_count(config: SessionConfig) -> int:
    if config.protocol == "secure-sum":
        return config.m
    if config.protocol == "sip3":
        return 2
    return 3


def run_local(
    config: SessionConfig,
    inputs: dict,
    *,
    rng_factory: Optional[Callable[[int], object]] = None,
    record: bool = True,
    record_views: bool = True,
    keypairs: Optional[dict] = None,
) -> tuple:
    """Drive every party of one session in process.

    Returns ``(SessionResult, Transcript)``.  With ``record=False`` the
    bodies skip wire encoding (fast path for statistical trial loops); the
    transcript then has an empty envelope log.
    """
    from ..protocols import get_spec  # deferred: protocol modules import us

    spec = get_spec(config.protocol)
    spec.validate_config(config)
    m = _party_count(config)
    if m < 2:
        raise ConfigError("a session needs at least two parties")
    needed = set(spec.input_parties(config))
    missing = needed - set(inputs)
    if missing:
        raise ConfigError(f"missing inputs for parties {sorted(missing)}")

    factory = rng_factory or default_rng_factory(config)
    parties = {}
    for pid in range(1, m + 1):
        parties[pid] = spec.build_party(
            config, pid, inputs.get(pid), factory(pid), keypairs=keypairs
        )
    session_id = derive_session_id(config)
    plans = spec.flight_plans(config)
    rounds = [plan.flight.round for plan in plans]
    assert rounds == sorted(rounds), "flight schedule must be round-monotonic"

    envelopes = []
    timings = []
    for plan in plans:
        flight = plan.flight
        started = time.perf_counter()
        expected = set(plan.routes)
        outbox = []  # (sender, recipient, body)
        for pid in sorted(parties):
            party = parties[pid]
            try:
                emitted = party.emit(flight)
            except Exception as exc:  # noqa: BLE001 - surface as protocol abort
                raise ProtocolAbort(pid, flight.round, str(exc)) from exc
            for recipient, body in emitted:
                if recipient == wire.BROADCAST:
                    fanout = [r for r in sorted(parties) if r != pid]
                else:
                    fanout = [recipient]
                for dest in fanout:
                    outbox.append((pid, dest, body))

        # Barrier reached: everything for this flight is emitted.  Check the
        # traffic against the plan before anything is delivered.
        routes = sorted(
            (sender, dest, wire.msg_type_of(body))
            for sender, dest, body in outbox
        )
        planned = sorted((r.sender, r.recipient, r.msg_type) for r in expected)
        if routes != planned:
            missing = [r for r in planned if r not in routes]
            extra = [r for r in routes if r not in planned]
            raise ProtocolAbort(
                0, flight.round,
                f"flight {flight.name} traffic mismatch "
                f"(missing={missing}, extra={extra})",
            )

        deliveries = []
        for sender, dest, body in sorted(
            outbox, key=lambda item: (item[0], item[1])
        ):
            if record:
                msg_type, payload = wire.encode_body(body)
                env = wire.Envelope(
                    session_id, flight.round, sender, dest, msg_type, payload
                )
                envelopes.append(env)
                delivered_body = wire.decode_body(msg_type, env.payload)
            else:
                msg_type = wire.msg_type_of(body)
                delivered_body = body
            deliveries.append((sender, dest, msg_type, delivered_body))

        for sender, dest, msg_type, body in deliveries:
            name = wire.MSG_NAMES[msg_type]
            if record_views:
                parties[sender].record_sent(flight.round, dest, name, _summary(body))
                parties[dest].record_received(flight.round, sender, name, _summary(body))
            try:
                parties[dest].deliver(flight, sender, body)
            except Exception as exc:  # noqa: BLE001
                raise ProtocolAbort(dest, flight.round, str(exc)) from exc
        timings.append(
            {"round": flight.round, "flight": flight.name,
             "seconds": time.perf_counter() - started}
        )

    values = {}
    for pid in sorted(parties):
        try:
            values[pid] = parties[pid].finish()
        except Exception as exc:  # noqa: BLE001
            raise ProtocolAbort(pid, plans[-1].flight.round, str(exc)) from exc

    entitled = spec.result_parties(config)
    outputs = [values[pid] for pid in entitled]
    if any(v != outputs[0] for v in outputs[1:]):
        raise ProtocolAbort(0, plans[-1].flight.round, "parties disagree on the result")

    result = SessionResult(spec.name, outputs[0], spec.exactness)
    warnings = [w for pid in sorted(parties) for w in parties[pid].view["warnings"]]
    transcript = Transcript(
        config=config,
        envelopes=envelopes,
        views={pid: parties[pid].view for pid in parties} if record_views else None,
        result=result_to_dict(spec.name, spec.exactness, result.value),
        timings=timings,
        warnings=warnings,
    )
    return result, transcript


def _jsonable(value):
    if isinstance(value, bytes):
        return value.hex()
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "__dataclass_fields__"):
        return {k: _jsonable(v) for k, v in vars(value).items()}
    return value


def _summary(body) -> dict:
    """JSON-able digest of a payload body for the view log.

    Vectors are kept whole (they are part of the view); bytes become hex.
    """
    out = {"body": type(body).__name__}
    out.update(_jsonable(body))
    return out
