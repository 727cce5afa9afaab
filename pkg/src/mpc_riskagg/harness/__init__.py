"""Deterministic multi-party execution: wire format, drivers, transcripts,
and the statistical secrecy bench."""

from . import wire
from .local import default_rng_factory, run_local
from .transcript import (
    Transcript,
    VerificationError,
    VerifyReport,
    config_hash,
    verify_transcript,
)

__all__ = [
    "wire",
    "run_local",
    "default_rng_factory",
    "Transcript",
    "VerificationError",
    "VerifyReport",
    "config_hash",
    "verify_transcript",
]
