"""Socket transport: the same protocol semantics over framed TCP streams.

Topology is a full mesh: every unordered party pair shares one connection,
opened by the higher-numbered party toward the lower-numbered listener.
After a HELLO exchange proves both ends run the identical session config,
the parties walk the protocol's flight schedule in lockstep: emit what the
plan expects from you, then read what the plan owes you, under a per-round
timeout.  A truncated or malformed frame aborts the session before any
state is applied.

``run_sockets`` is the test-mode orchestrator: it hosts every party in its
own process on loopback, merges the per-party logs into one canonically
ordered transcript, and returns the same (result, transcript) shape as
``run_local`` -- byte-identical under the same seed.
"""

from __future__ import annotations

import multiprocessing
import socket
import struct
import time

from ..protocols.base import ProtocolAbort, SessionConfig, SessionResult
from . import wire
from .local import _party_count, _summary, default_rng_factory
from .transcript import Transcript, config_hash, derive_session_id, result_to_dict


class TransportError(RuntimeError):
    pass


def _recv_exact(conn: socket.socket, size: int, what: str) -> bytes:
    chunks = []
    remaining = size
    while remaining:
        try:
            chunk = conn.recv(remaining)
        except socket.timeout as exc:
            raise TransportError(f"timeout while reading {what}") from exc
        if not chunk:
            raise TransportError(f"connection closed mid-{what} (truncated frame)")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def _recv_envelope(conn: socket.socket) -> wire.Envelope:
    header = _recv_exact(conn, wire.HEADER_SIZE, "frame header")
    if header[:4] != wire.MAGIC:
        raise TransportError("bad magic in frame header")
    (plen,) = struct.unpack_from(">I", header, wire.HEADER_SIZE - 4)
    payload = _recv_exact(conn, plen, "frame payload") if plen else b""
    try:
        return wire.Envelope.decode(header + payload)
    except wire.WireError as exc:
        raise TransportError(f"malformed frame: {exc}") from exc


def _send_envelope(conn: socket.socket, env: wire.Envelope):
    conn.sendall(env.encode())


def _connect_with_retry(address, timeout_s: float) -> socket.socket:
    """Reconnect until the peer's listener is up or the deadline passes."""
    deadline = time.monotonic() + timeout_s
    while True:
        try:
            return socket.create_connection(address, timeout=timeout_s)
        except (ConnectionRefusedError, ConnectionResetError, OSError):
            if time.monotonic() >= deadline:
                raise
            time.sleep(0.05)


def run_socket_party(
    config: SessionConfig,
    party_id: int,
    party_input,
    listen_port: int,
    peers: dict,
    *,
    rng=None,
    host: str = "127.0.0.1",
    record_views: bool = True,
) -> tuple:
    """Run one party over TCP.  ``peers`` maps peer id -> (host, port).

    Returns ``(result_value, Transcript)``; the transcript carries this
    party's sent and received frames in canonical per-flight order and its
    own view only.
    """
    from ..protocols import get_spec

    spec = get_spec(config.protocol)
    spec.validate_config(config)
    m = _party_count(config)
    rng = rng or default_rng_factory(config)(party_id)
    party = spec.build_party(config, party_id, party_input, rng)
    session_id = derive_session_id(config)
    my_hash = config_hash(config)

    listener = None
    conns = {}
    try:
        lower_peers = [pid for pid in range(1, m + 1) if pid < party_id]
        higher_peers = [pid for pid in range(1, m + 1) if pid > party_id]
        if higher_peers:
            listener = socket.create_server((host, listen_port))
            listener.settimeout(config.timeout_s)
        for pid in lower_peers:
            try:
                conn = _connect_with_retry(peers[pid], config.timeout_s)
            except OSError as exc:
                raise ProtocolAbort(
                    party_id, 0, f"cannot reach party {pid} at {peers[pid]}: {exc}"
                ) from exc
            conn.settimeout(config.timeout_s)
            conn.sendall(struct.pack(">H", party_id))
            conns[pid] = conn
        accepted = 0
        while accepted < len(higher_peers):
            try:
                conn, _ = listener.accept()
            except socket.timeout as exc:
                waiting = sorted(set(higher_peers) - set(conns))
                raise ProtocolAbort(
                    party_id, 0, f"timeout waiting for parties {waiting} to connect"
                ) from exc
            conn.settimeout(config.timeout_s)
            (peer_id,) = struct.unpack(">H", _recv_exact(conn, 2, "peer id"))
            if peer_id not in higher_peers or peer_id in conns:
                raise ProtocolAbort(party_id, 0, f"unexpected connection from {peer_id}")
            conns[peer_id] = conn
            accepted += 1

        # Config-hash handshake: every link proves both ends share a config.
        hello = wire.Hello(party_id, my_hash)
        msg_type, payload = wire.encode_body(hello)
        for pid, conn in conns.items():
            _send_envelope(
                conn, wire.Envelope(session_id, 0, party_id, pid, msg_type, payload)
            )
        for pid, conn in conns.items():
            env = _recv_envelope(conn)
            if env.msg_type != wire.MSG_HELLO:
                raise ProtocolAbort(party_id, 0, "expected HELLO frame")
            peer_hello = wire.decode_body(env.msg_type, env.payload)
            if peer_hello.config_hash != my_hash:
                raise ProtocolAbort(
                    party_id, 0, f"config hash mismatch with party {pid}"
                )

        envelopes = []
        for plan in spec.flight_plans(config):
            flight = plan.flight
            try:
                emitted = party.emit(flight)
            except Exception as exc:  # noqa: BLE001
                raise ProtocolAbort(party_id, flight.round, str(exc)) from exc
            outgoing = []
            for recipient, body in emitted:
                if recipient == wire.BROADCAST:
                    fanout = [p for p in range(1, m + 1) if p != party_id]
                else:
                    fanout = [recipient]
                for dest in fanout:
                    msg_type, payload = wire.encode_body(body)
                    outgoing.append(
                        wire.Envelope(
                            session_id, flight.round, party_id, dest, msg_type, payload
                        )
                    )
            outgoing.sort(key=wire.Envelope.sort_key)
            for env in outgoing:
                _send_envelope(conns[env.recipient], env)

            expected = sorted(
                (r.sender, r.msg_type)
                for r in plan.routes
                if r.recipient == party_id
            )
            incoming = []
            for sender, msg_type in expected:
                try:
                    env = _recv_envelope(conns[sender])
                except TransportError as exc:
                    raise ProtocolAbort(
                        party_id, flight.round,
                        f"party {sender} failed in round {flight.round}: {exc}",
                    ) from exc
                if env.round != flight.round or env.sender != sender:
                    raise ProtocolAbort(
                        party_id, flight.round,
                        f"out-of-round frame from party {sender}",
                    )
                if env.msg_type != msg_type:
                    raise ProtocolAbort(
                        party_id, flight.round,
                        f"unexpected {wire.MSG_NAMES.get(env.msg_type)} from {sender}",
                    )
                incoming.append(env)
            received = sorted(incoming, key=wire.Envelope.sort_key)
            for env in outgoing:
                envelopes.append(env)
            for env in received:
                envelopes.append(env)
                body = wire.decode_body(env.msg_type, env.payload)
                name = wire.MSG_NAMES[env.msg_type]
                if record_views:
                    party.record_received(flight.round, env.sender, name, _summary(body))
                try:
                    party.deliver(flight, env.sender, body)
                except Exception as exc:  # noqa: BLE001
                    raise ProtocolAbort(party_id, flight.round, str(exc)) from exc
            if record_views:
                for env in outgoing:
                    party.record_sent(
                        flight.round, env.recipient, wire.MSG_NAMES[env.msg_type],
                        _summary(wire.decode_body(env.msg_type, env.payload)),
                    )

        try:
            value = party.finish()
        except Exception as exc:  # noqa: BLE001
            raise ProtocolAbort(party_id, spec.rounds, str(exc)) from exc
    finally:
        for conn in conns.values():
            conn.close()
        if listener is not None:
            listener.close()

    transcript = Transcript(
        config=config,
        envelopes=envelopes,
        views={party_id: party.view} if record_views else None,
        result=result_to_dict(spec.name, spec.exactness, value)
        if party_id in spec.result_parties(config)
        else result_to_dict(spec.name, spec.exactness, None),
        warnings=list(party.view["warnings"]),
    )
    return value, transcript


def merge_party_transcripts(config: SessionConfig, transcripts: dict) -> Transcript:
    """Union of per-party logs, deduplicated and in canonical global order.

    Every frame appears in its sender's and its recipient's log; the merge
    keeps one copy and orders flights exactly as the local driver does.
    """
    from ..protocols import get_spec

    spec = get_spec(config.protocol)
    by_key = {}
    for t in transcripts.values():
        for env in t.envelopes:
            key = (env.round, env.sender, env.recipient, env.msg_type)
            if key in by_key and by_key[key].encode() != env.encode():
                raise TransportError(f"conflicting copies of frame {key}")
            by_key[key] = env
    ordered = []
    for plan in spec.flight_plans(config):
        flight_envs = []
        for route in plan.routes:
            key = (plan.flight.round, route.sender, route.recipient, route.msg_type)
            if key not in by_key:
                raise TransportError(f"merged log is missing frame {key}")
            flight_envs.append(by_key[key])
        flight_envs.sort(key=wire.Envelope.sort_key)
        ordered.extend(flight_envs)
    if len(ordered) != len(by_key):
        raise TransportError("merged log contains frames outside the flight plan")

    views = {}
    results = []
    for pid, t in sorted(transcripts.items()):
        if t.views:
            views.update(t.views)
        if t.result.get("kind") != "none":
            results.append(t.result)
    if not results:
        raise TransportError("no party produced a result")
    if any(r != results[0] for r in results[1:]):
        raise TransportError("parties disagree on the session result")
    return Transcript(
        config=config,
        envelopes=ordered,
        views=views or None,
        result=results[0],
        warnings=[w for pid, t in sorted(transcripts.items()) for w in t.warnings],
    )


def _party_worker(args):
    (config_dict, party_id, party_input, listen_port, peers, pipe) = args
    try:
        config = SessionConfig(**config_dict)
        value, transcript = run_socket_party(
            config, party_id, party_input, listen_port, peers
        )
        pipe.send(("ok", party_id, transcript))
    except BaseException as exc:  # noqa: BLE001 - report to the parent
        pipe.send(("error", party_id, repr(exc)))
    finally:
        pipe.close()


def _free_ports(count: int):
    """Bind-then-release port reservation; fine for loopback test runs."""
    sockets = []
    ports = []
    for _ in range(count):
        s = socket.socket()
        s.bind(("127.0.0.1", 0))
        ports.append(s.getsockname()[1])
        sockets.append(s)
    for s in sockets:
        s.close()
    return ports


def run_sockets(config: SessionConfig, inputs: dict) -> tuple:
    """Run a full session as one OS process per party on loopback.

    Returns ``(SessionResult, merged Transcript)``.
    """
    from ..protocols import get_spec

    spec = get_spec(config.protocol)
    spec.validate_config(config)
    m = _party_count(config)
    ports = _free_ports(m)
    addresses = {pid: ("127.0.0.1", ports[pid - 1]) for pid in range(1, m + 1)}

    ctx = multiprocessing.get_context("spawn")
    pipes = {}
    procs = {}
    for pid in range(1, m + 1):
        parent_end, child_end = ctx.Pipe()
        peers = {other: addresses[other] for other in addresses if other != pid}
        args = (
            config.canonical_dict(), pid, inputs.get(pid),
            addresses[pid][1], peers, child_end,
        )
        proc = ctx.Process(target=_party_worker, args=(args,))
        proc.start()
        child_end.close()
        pipes[pid] = parent_end
        procs[pid] = proc

    transcripts = {}
    errors = []
    for pid, pipe in pipes.items():
        if pipe.poll(config.timeout_s + 30):
            status, sender, payload = pipe.recv()
            if status == "ok":
                transcripts[sender] = payload
            else:
                errors.append(f"party {sender}: {payload}")
        else:
            errors.append(f"party {pid}: no report before deadline")
    for proc in procs.values():
        proc.join(timeout=10)
        if proc.is_alive():
            proc.terminate()
    if errors:
        raise ProtocolAbort(0, 0, "; ".join(errors))

    merged = merge_party_transcripts(config, transcripts)
    value = None
    for pid in spec.result_parties(config):
        t = transcripts.get(pid)
        if t is not None and t.result.get("kind") != "none":
            from .transcript import result_value_from_dict

            value = result_value_from_dict(t.result)
            break
    result = SessionResult(spec.name, value, spec.exactness)
    return result, merged
