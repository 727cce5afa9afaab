"""Round-based multi-party protocols: masked sum and three inner products."""

from .base import (
    ConfigError,
    Flight,
    FlightPlan,
    PartyBase,
    ProtocolAbort,
    ProtocolSpec,
    Route,
    SessionConfig,
    SessionResult,
)
from . import secure_sum, sip1, sip2, sip3

PROTOCOLS = {
    secure_sum.SPEC.name: secure_sum.SPEC,
    sip1.SPEC.name: sip1.SPEC,
    sip2.SPEC.name: sip2.SPEC,
    sip3.SPEC.name: sip3.SPEC,
}


def get_spec(name: str) -> ProtocolSpec:
    try:
        return PROTOCOLS[name]
    except KeyError:
        raise ConfigError(f"unknown protocol {name!r}") from None


__all__ = [
    "ConfigError",
    "Flight",
    "FlightPlan",
    "PartyBase",
    "ProtocolAbort",
    "ProtocolSpec",
    "Route",
    "SessionConfig",
    "SessionResult",
    "PROTOCOLS",
    "get_spec",
    "secure_sum",
    "sip1",
    "sip2",
    "sip3",
]
