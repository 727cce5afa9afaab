"""Binary envelope format and payload codecs for protocol messages.

Every message travels as one Envelope frame:

    magic "MPCF" | version u8 | session_id 16B | round u16 | sender u16 |
    recipient u16 (0xFFFF = broadcast) | msg_type u8 | payload_len u32 |
    payload

All integers big-endian.  Payloads are self-describing (explicit widths),
so a frame decodes without protocol context; range checks against session
moduli happen in the receiving party's state machine.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

MAGIC = b"MPCF"
VERSION = 1
BROADCAST = 0xFFFF

MSG_HELLO = 0
MSG_RAND_MASK = 1
MSG_SHARE = 2
MSG_PARTIAL_SUM = 3
MSG_POLY_EVAL = 4
MSG_MASK_EVAL = 5
MSG_OT_X = 6
MSG_OT_C = 7
MSG_OT_A = 8
MSG_RESULT_SHARE = 9

MSG_NAMES = {
    MSG_HELLO: "HELLO",
    MSG_RAND_MASK: "RAND_MASK",
    MSG_SHARE: "SHARE",
    MSG_PARTIAL_SUM: "PARTIAL_SUM",
    MSG_POLY_EVAL: "POLY_EVAL",
    MSG_MASK_EVAL: "MASK_EVAL",
    MSG_OT_X: "OT_X",
    MSG_OT_C: "OT_C",
    MSG_OT_A: "OT_A",
    MSG_RESULT_SHARE: "RESULT_SHARE",
}

_HEADER = struct.Struct(">4sB16sHHHBI")
HEADER_SIZE = _HEADER.size


class WireError(ValueError):
    """Malformed frame or payload."""


@dataclass(frozen=True)
class Envelope:
    session_id: bytes
    round: int
    sender: int
    recipient: int
    msg_type: int
    payload: bytes

    def encode(self) -> bytes:
        if len(self.session_id) != 16:
            raise WireError("session id must be 16 bytes")
        header = _HEADER.pack(
            MAGIC, VERSION, self.session_id, self.round, self.sender,
            self.recipient, self.msg_type, len(self.payload),
        )
        return header + self.payload

    @classmethod
    def decode(cls, data: bytes) -> "Envelope":
        env, used = cls.decode_prefix(data)
        if used != len(data):
            raise WireError("trailing bytes after envelope")
        return env

    @classmethod
    def decode_prefix(cls, data: bytes):
        """Decode one envelope from the head of ``data``; returns (env, used)."""
        if len(data) < HEADER_SIZE:
            raise WireError("truncated envelope header")
        magic, version, session_id, rnd, sender, recipient, msg_type, plen = (
            _HEADER.unpack_from(data)
        )
        if magic != MAGIC:
            raise WireError("bad magic")
        if version != VERSION:
            raise WireError(f"unsupported version {version}")
        end = HEADER_SIZE + plen
        if len(data) < end:
            raise WireError("truncated envelope payload")
        return cls(session_id, rnd, sender, recipient, msg_type, bytes(data[HEADER_SIZE:end])), end

    def sort_key(self):
        return (self.round, self.sender, self.recipient, self.msg_type)


# ---------------------------------------------------------------------------
# Typed payload bodies


@dataclass(frozen=True)
class Hello:
    party_id: int
    config_hash: bytes  # sha256 of the canonical session config


@dataclass(frozen=True)
class RandMask:
    raw: int  # fixed-point raw on the 64-bit lattice


@dataclass(frozen=True)
class PartialSum:
    raw: int


@dataclass(frozen=True)
class ShareGroup:
    index: int  # 1-based share index within the split
    count: int  # total shares in the split
    values: tuple


@dataclass(frozen=True)
class ShareVectors:
    """One or more share vectors, plus an optional opaque trailer.

    The trailer carries public riders (e.g. an OT public key) that belong
    with the share reveal but are not share data themselves.
    """

    width: int
    groups: tuple
    trailer: bytes = b""


@dataclass(frozen=True)
class PolyEvalVec:
    frac_bits: int
    eval_index: int  # 1..3, the t_j this vector is evaluated at
    width: int
    values: tuple


@dataclass(frozen=True)
class MaskEval:
    frac_bits: int
    eval_index: int
    width: int
    value: int


@dataclass(frozen=True)
class ResultShare:
    frac_bits: int  # 0 when the value is a plain residue, not fixed point
    eval_index: int  # 0 when not tied to an evaluation point
    width: int
    value: int


@dataclass(frozen=True)
class OtBlinders:
    width: int
    branches: int
    rows: tuple  # one row of ``branches`` blinders per transfer


@dataclass(frozen=True)
class OtBlinded:
    width: int
    values: tuple  # one blinded key per transfer


@dataclass(frozen=True)
class OtMasked:
    width: int
    branches: int
    rows: tuple


def width_for(maximum: int) -> int:
    """Smallest byte width holding every residue below ``maximum``."""
    return max(1, ((maximum - 1).bit_length() + 7) // 8)


_BODY_MSG_TYPES = {
    Hello: MSG_HELLO,
    RandMask: MSG_RAND_MASK,
    PartialSum: MSG_PARTIAL_SUM,
    ShareVectors: MSG_SHARE,
    PolyEvalVec: MSG_POLY_EVAL,
    MaskEval: MSG_MASK_EVAL,
    ResultShare: MSG_RESULT_SHARE,
    OtBlinders: MSG_OT_X,
    OtBlinded: MSG_OT_C,
    OtMasked: MSG_OT_A,
}


def msg_type_of(body) -> int:
    """Message type for a body without serializing it."""
    try:
        return _BODY_MSG_TYPES[type(body)]
    except KeyError:
        raise WireError(f"no wire encoding for {type(body).__name__}") from None


def _pack_ints(values: Sequence[int], width: int) -> bytes:
    return b"".join(v.to_bytes(width, "big") for v in values)


def _unpack_ints(data: bytes, width: int, count: int, offset: int):
    end = offset + width * count
    if end > len(data):
        raise WireError("payload shorter than declared")
    vals = tuple(
        int.from_bytes(data[i : i + width], "big")
        for i in range(offset, end, width)
    )
    return vals, end


def encode_body(body) -> tuple:
    """Serialize a typed body; returns (msg_type, payload bytes)."""
    if isinstance(body, Hello):
        if len(body.config_hash) != 32:
            raise WireError("config hash must be 32 bytes")
        return MSG_HELLO, struct.pack(">H", body.party_id) + body.config_hash
    if isinstance(body, RandMask):
        return MSG_RAND_MASK, body.raw.to_bytes(16, "big")
    if isinstance(body, PartialSum):
        return MSG_PARTIAL_SUM, body.raw.to_bytes(16, "big")
    if isinstance(body, ShareVectors):
        out = [struct.pack(">BB", body.width, len(body.groups))]
        for g in body.groups:
            out.append(struct.pack(">HHI", g.index, g.count, len(g.values)))
            out.append(_pack_ints(g.values, body.width))
        out.append(struct.pack(">I", len(body.trailer)))
        out.append(body.trailer)
        return MSG_SHARE, b"".join(out)
    if isinstance(body, PolyEvalVec):
        head = struct.pack(">BBBI", body.frac_bits, body.eval_index, body.width,
                           len(body.values))
        return MSG_POLY_EVAL, head + _pack_ints(body.values, body.width)
    if isinstance(body, MaskEval):
        head = struct.pack(">BBB", body.frac_bits, body.eval_index, body.width)
        return MSG_MASK_EVAL, head + body.value.to_bytes(body.width, "big")
    if isinstance(body, ResultShare):
        head = struct.pack(">BBB", body.frac_bits, body.eval_index, body.width)
        return MSG_RESULT_SHARE, head + body.value.to_bytes(body.width, "big")
    if isinstance(body, OtBlinders):
        head = struct.pack(">BII", body.width, len(body.rows), body.branches)
        flat = [v for row in body.rows for v in row]
        return MSG_OT_X, head + _pack_ints(flat, body.width)
    if isinstance(body, OtBlinded):
        head = struct.pack(">BI", body.width, len(body.values))
        return MSG_OT_C, head + _pack_ints(body.values, body.width)
    if isinstance(body, OtMasked):
        head = struct.pack(">BII", body.width, len(body.rows), body.branches)
        flat = [v for row in body.rows for v in row]
        return MSG_OT_A, head + _pack_ints(flat, body.width)
    raise WireError(f"no wire encoding for {type(body).__name__}")


def decode_body(msg_type: int, payload: bytes):
    """Inverse of encode_body."""
    try:
        return _decode_body(msg_type, payload)
    except (struct.error, OverflowError) as exc:
        raise WireError(f"malformed {MSG_NAMES.get(msg_type, msg_type)} payload") from exc


def _decode_body(msg_type: int, payload: bytes):
    if msg_type == MSG_HELLO:
        if len(payload) != 34:
            raise WireError("bad HELLO length")
        (party_id,) = struct.unpack_from(">H", payload)
        return Hello(party_id, payload[2:])
    if msg_type == MSG_RAND_MASK:
        if len(payload) != 16:
            raise WireError("RAND_MASK payload must be 16 bytes")
        return RandMask(int.from_bytes(payload, "big"))
    if msg_type == MSG_PARTIAL_SUM:
        if len(payload) != 16:
            raise WireError("PARTIAL_SUM payload must be 16 bytes")
        return PartialSum(int.from_bytes(payload, "big"))
    if msg_type == MSG_SHARE:
        width, ngroups = struct.unpack_from(">BB", payload)
        offset = 2
        groups = []
        for _ in range(ngroups):
            index, count, nvals = struct.unpack_from(">HHI", payload, offset)
            offset += 8
            values, offset = _unpack_ints(payload, width, nvals, offset)
            groups.append(ShareGroup(index, count, values))
        (tlen,) = struct.unpack_from(">I", payload, offset)
        offset += 4
        if offset + tlen != len(payload):
            raise WireError("bad SHARE trailer length")
        return ShareVectors(width, tuple(groups), payload[offset:])
    if msg_type == MSG_POLY_EVAL:
        frac_bits, eval_index, width, nvals = struct.unpack_from(">BBBI", payload)
        values, end = _unpack_ints(payload, width, nvals, 7)
        if end != len(payload):
            raise WireError("bad POLY_EVAL length")
        return PolyEvalVec(frac_bits, eval_index, width, values)
    if msg_type in (MSG_MASK_EVAL, MSG_RESULT_SHARE):
        frac_bits, eval_index, width = struct.unpack_from(">BBB", payload)
        if len(payload) != 3 + width:
            raise WireError("bad single-value payload length")
        value = int.from_bytes(payload[3:], "big")
        if msg_type == MSG_MASK_EVAL:
            return MaskEval(frac_bits, eval_index, width, value)
        return ResultShare(frac_bits, eval_index, width, value)
    if msg_type in (MSG_OT_X, MSG_OT_A):
        width, nrows, branches = struct.unpack_from(">BII", payload)
        flat, end = _unpack_ints(payload, width, nrows * branches, 9)
        if end != len(payload):
            raise WireError("bad OT matrix length")
        rows = tuple(
            flat[i * branches : (i + 1) * branches] for i in range(nrows)
        )
        if msg_type == MSG_OT_X:
            return OtBlinders(width, branches, rows)
        return OtMasked(width, branches, rows)
    if msg_type == MSG_OT_C:
        width, nvals = struct.unpack_from(">BI", payload)
        values, end = _unpack_ints(payload, width, nvals, 5)
        if end != len(payload):
            raise WireError("bad OT_C length")
        return OtBlinded(width, values)
    raise WireError(f"unknown message type {msg_type}")
