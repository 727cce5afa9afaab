"""Transcript capture, persistence, and replay verification.

A transcript directory holds:

    config.json    canonical session config (transport-independent)
    envelopes.bin  every frame, concatenated in canonical order
    result.json    the session output
    views.json     per-party views (simulation mode only; contains secrets)
    timings.json   per-round wall clock (never part of equality checks)

Replay verification re-runs the protocol from the recorded seed and the
inputs preserved in the views, then compares every frame byte-for-byte;
the first divergent envelope index is reported on mismatch.  Unseeded
transcripts get structural checks only (frame decode, uniqueness, round
counts, result consistency).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Optional

from ..arith import ModReal
from ..protocols.base import SessionConfig
from .wire import Envelope


class VerificationError(RuntimeError):
    pass


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def config_hash(config: SessionConfig) -> bytes:
    return hashlib.sha256(canonical_json(config.canonical_dict()).encode()).digest()


def derive_session_id(config: SessionConfig) -> bytes:
    """Deterministic 16-byte session id for seeded runs; random otherwise."""
    if config.seed is None:
        return os.urandom(16)
    return config_hash(config)[:16]


def derive_party_rng_seed(seed: int, party_id: int) -> int:
    digest = hashlib.sha256(f"mpc-riskagg|{seed}|party|{party_id}".encode()).digest()
    return int.from_bytes(digest, "big")


def result_to_dict(protocol: str, exactness: str, value) -> dict:
    out = {"protocol": protocol, "exactness": exactness}
    if isinstance(value, ModReal):
        out.update(
            kind="modreal",
            raw=value.raw,
            modulus=value.modulus,
            frac_bits=value.frac_bits,
            value=value.to_float(),
        )
    elif isinstance(value, int):
        out.update(kind="int", value=value)
    elif value is None:
        out.update(kind="none")
    else:
        raise TypeError(f"unsupported result type {type(value).__name__}")
    return out


def result_value_from_dict(data: dict):
    if data["kind"] == "modreal":
        return ModReal(data["raw"], data["modulus"], data["frac_bits"])
    if data["kind"] == "int":
        return data["value"]
    return None


@dataclass
class Transcript:
    config: SessionConfig
    envelopes: list
    views: Optional[dict]           # party id -> view dict, or None
    result: dict
    timings: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def rounds_seen(self):
        return sorted({env.round for env in self.envelopes})

    def envelope_bytes(self) -> bytes:
        return b"".join(env.encode() for env in self.envelopes)

    def save(self, directory: str):
        os.makedirs(directory, exist_ok=True)
        with open(os.path.join(directory, "config.json"), "w") as fh:
            fh.write(canonical_json(self.config.canonical_dict()))
        with open(os.path.join(directory, "envelopes.bin"), "wb") as fh:
            fh.write(self.envelope_bytes())
        with open(os.path.join(directory, "result.json"), "w") as fh:
            fh.write(canonical_json(self.result))
        if self.views is not None:
            with open(os.path.join(directory, "views.json"), "w") as fh:
                fh.write(canonical_json({str(k): v for k, v in self.views.items()}))
        if self.timings:
            with open(os.path.join(directory, "timings.json"), "w") as fh:
                fh.write(canonical_json(self.timings))

    @classmethod
    def load(cls, directory: str) -> "Transcript":
        with open(os.path.join(directory, "config.json")) as fh:
            config = SessionConfig(**json.load(fh))
        with open(os.path.join(directory, "envelopes.bin"), "rb") as fh:
            blob = fh.read()
        envelopes = []
        offset = 0
        while offset < len(blob):
            env, used = Envelope.decode_prefix(blob[offset:])
            envelopes.append(env)
            offset += used
        with open(os.path.join(directory, "result.json")) as fh:
            result = json.load(fh)
        views = None
        views_path = os.path.join(directory, "views.json")
        if os.path.exists(views_path):
            with open(views_path) as fh:
                views = {int(k): v for k, v in json.load(fh).items()}
        return cls(config, envelopes, views, result)


@dataclass
class VerifyReport:
    ok: bool
    checks: list
    first_divergence: Optional[int] = None

    def add(self, name: str, ok: bool, detail: str = ""):
        self.checks.append({"check": name, "ok": ok, "detail": detail})
        if not ok:
            self.ok = False


def verify_transcript(transcript: Transcript) -> VerifyReport:
    """Structural checks plus, for seeded transcripts with views, a full
    deterministic replay compared byte-for-byte."""
    from ..protocols import get_spec  # deferred: protocol modules import us

    report = VerifyReport(ok=True, checks=[])
    spec = get_spec(transcript.config.protocol)

    seen = set()
    dup = None
    for env in transcript.envelopes:
        key = (env.session_id, env.round, env.sender, env.recipient, env.msg_type)
        if key in seen:
            dup = key
            break
        seen.add(key)
    report.add("envelope-uniqueness", dup is None,
               "" if dup is None else f"duplicate key {dup}")

    rounds = transcript.rounds_seen
    expected_rounds = list(range(1, spec.rounds + 1))
    report.add(
        "round-count",
        rounds == expected_rounds,
        f"saw rounds {rounds}, declared {expected_rounds}",
    )

    plan_routes = []
    for plan in spec.flight_plans(transcript.config):
        plan_routes.extend(
            (plan.flight.round, r.sender, r.recipient, r.msg_type)
            for r in plan.routes
        )
    log_routes = [
        (env.round, env.sender, env.recipient, env.msg_type)
        for env in transcript.envelopes
    ]
    report.add(
        "flight-plan",
        sorted(log_routes) == sorted(plan_routes),
        f"{len(log_routes)} frames vs {len(plan_routes)} planned",
    )

    if transcript.config.seed is None or transcript.views is None:
        report.add("replay", True, "skipped: no seed or no recorded views")
        return report

    from .local import run_local  # deferred: local imports this module

    inputs = {}
    for pid, view in transcript.views.items():
        if view.get("input") is not None and spec.input_from_view is not None:
            inputs[pid] = spec.input_from_view(transcript.config, view)
    try:
        _, replayed = run_local(transcript.config, inputs)
    except Exception as exc:  # noqa: BLE001 - any replay failure is a finding
        report.add("replay", False, f"replay failed: {exc}")
        return report

    original = transcript.envelopes
    fresh = replayed.envelopes
    divergence = None
    for idx in range(max(len(original), len(fresh))):
        a = original[idx].encode() if idx < len(original) else b""
        b = fresh[idx].encode() if idx < len(fresh) else b""
        if a != b:
            divergence = idx
            break
    report.first_divergence = divergence
    report.add(
        "replay",
        divergence is None,
        "replay reproduces every frame" if divergence is None
        else f"first divergent envelope index {divergence}",
    )
    report.add(
        "result-replay",
        replayed.result == transcript.result,
        "recomputed result matches" if replayed.result == transcript.result
        else "recomputed result differs",
    )
    return report
