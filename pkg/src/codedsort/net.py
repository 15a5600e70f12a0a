"""Loopback TCP transport: one OS process per worker and a coordinator.

Frames are ``<u32 little-endian length><type byte><body>`` where the length
covers the type byte and body. Control frames (type 0x01) carry JSON;
data frames (type 0x02) carry raw bytes. Peer-to-peer data frames prefix the
body with the 4-byte little-endian schedule slot index.

The coordinator places files on workers, runs stage barriers, and steps the
schedule one slot at a time: it tells receivers to expect the slot, tells the
sender to transmit it, and waits for every side to confirm before moving on.
A multicast is sent as back-to-back unicasts of one payload but recorded once.
"""

from __future__ import annotations

import hashlib
import json
import logging
import multiprocessing
import os
import socket
import struct
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from .errors import TransmissionError
from .node import Node
from .placement import PlacementPlan, Subset, build_plan, uncoded_plan
from .records import Partitioning, Record, deserialize_records, serialize_records
from .transport import ShuffleLedger, Slot, schedule_coded, schedule_uncoded

log = logging.getLogger(__name__)

CONTROL = 0x01
DATA = 0x02
PORT_BASE_ENV = "CODED_SHUFFLE_PORT_BASE"
HOST = "127.0.0.1"
TIMEOUT = 120.0

_HEADER = struct.Struct("<I")
_SLOT = struct.Struct("<I")


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(min(n - len(buf), 1 << 20))
        if not chunk:
            raise ConnectionError(f"connection closed with {n - len(buf)} bytes outstanding")
        buf += chunk
    return bytes(buf)


def send_frame(sock: socket.socket, kind: int, body: bytes) -> None:
    sock.sendall(_HEADER.pack(len(body) + 1) + bytes([kind]) + body)


def recv_frame(sock: socket.socket):
    (length,) = _HEADER.unpack(_recv_exact(sock, _HEADER.size))
    if length < 1:
        raise ConnectionError("empty frame")
    data = _recv_exact(sock, length)
    return data[0], data[1:]


def send_control(sock: socket.socket, message: dict) -> None:
    send_frame(sock, CONTROL, json.dumps(message).encode())


def recv_control(sock: socket.socket, expect: Optional[str] = None) -> dict:
    kind, body = recv_frame(sock)
    if kind != CONTROL:
        raise TransmissionError(f"expected a control frame, got type {kind:#04x}")
    message = json.loads(body)
    if message.get("cmd") == "error":
        raise TransmissionError(f"worker {message.get('node')} failed: {message.get('message')}")
    if expect is not None and message.get("cmd") != expect:
        raise TransmissionError(f"expected {expect!r}, got {message.get('cmd')!r}")
    return message


def recv_data(sock: socket.socket) -> bytes:
    kind, body = recv_frame(sock)
    if kind != DATA:
        raise TransmissionError(f"expected a data frame, got type {kind:#04x}")
    return body


def _digest(payload: bytes) -> str:
    return hashlib.blake2b(payload, digest_size=16).hexdigest()


def port_base_from_env() -> Optional[int]:
    raw = os.environ.get(PORT_BASE_ENV)
    return int(raw) if raw else None


# worker side


def worker_main(node_id: int, coordinator_port: int, listen_port: int) -> None:
    listener = socket.create_server((HOST, listen_port), backlog=64)
    coord = socket.create_connection((HOST, coordinator_port), timeout=TIMEOUT)
    coord.settimeout(None)
    try:
        send_control(coord, {"cmd": "hello", "node": node_id, "port": listener.getsockname()[1]})
        _serve(node_id, coord, listener)
    except Exception as exc:
        log.exception("worker %d failed", node_id)
        try:
            send_control(coord, {"cmd": "error", "node": node_id, "message": repr(exc)})
        except OSError:
            pass
    finally:
        listener.close()
        coord.close()


def _serve(node_id: int, coord: socket.socket, listener: socket.socket) -> None:
    setup = recv_control(coord, "setup")
    K, r = setup["K"], setup["r"]
    start = time.perf_counter()
    if setup["coded"] or r > 1:
        plan = build_plan(K, r, setup["multiplicity"])
    else:
        plan = uncoded_plan(K, setup["multiplicity"])
    schedule = schedule_coded(plan) if setup["coded"] else schedule_uncoded(plan)
    codegen = time.perf_counter() - start
    node = Node(node_id, plan, Partitioning(tuple(setup["boundaries"])))
    node.times["codegen"] = codegen
    for label in setup["files"]:
        node.store(tuple(label), deserialize_records(recv_data(coord)))

    # mesh: outgoing connections complete through the listen backlog before we accept
    outgoing: Dict[int, socket.socket] = {}
    for peer, port in setup["peers"].items():
        peer = int(peer)
        if peer != node_id:
            sock = socket.create_connection((HOST, port), timeout=TIMEOUT)
            send_control(sock, {"cmd": "peer", "node": node_id})
            outgoing[peer] = sock
    incoming: Dict[int, socket.socket] = {}
    listener.settimeout(TIMEOUT)
    while len(incoming) < K - 1:
        sock, _ = listener.accept()
        sock.settimeout(TIMEOUT)
        incoming[recv_control(sock, "peer")["node"]] = sock
    send_control(coord, {"cmd": "ready", "node": node_id})

    recv_control(coord, "compute")
    node.map()
    payloads = node.outgoing(schedule)
    send_control(coord, {"cmd": "computed", "node": node_id})

    try:
        while True:
            message = recv_control(coord)
            cmd = message["cmd"]
            if cmd == "send":
                index = message["slot"]
                slot = schedule[index]
                payload = payloads[slot]
                for receiver in slot.receivers:
                    send_frame(outgoing[receiver], DATA, _SLOT.pack(index) + payload)
                send_control(coord, {"cmd": "sent", "slot": index, "bytes": len(payload), "digest": _digest(payload)})
            elif cmd == "recv":
                index = message["slot"]
                slot = schedule[index]
                body = recv_data(incoming[slot.sender])
                (got,) = _SLOT.unpack_from(body)
                if got != index:
                    raise TransmissionError(f"expected slot {index} from node {slot.sender}, got {got}", slot=index)
                payload = body[_SLOT.size :]
                node.receive(slot, payload)
                send_control(coord, {"cmd": "received", "slot": index, "bytes": len(payload), "digest": _digest(payload)})
            elif cmd == "finish":
                node.unpack()
                output = node.reduce()
                send_control(coord, {"cmd": "done", "node": node_id, "times": node.times})
                send_frame(coord, DATA, serialize_records(output))
            elif cmd == "exit":
                return
            else:
                raise TransmissionError(f"unknown command {cmd!r}")
    finally:
        for sock in (*outgoing.values(), *incoming.values()):
            sock.close()


# coordinator side


@dataclass
class SocketJob:
    partitions: List[List[Record]]
    node_times: List[Dict[str, float]]
    ledger: ShuffleLedger
    digests: List[str]
    shuffle_wall: float


def run_socket_job(
    plan: PlacementPlan,
    coded: bool,
    partitioning: Partitioning,
    files: Dict[Subset, Sequence[Record]],
    schedule: Sequence[Slot],
    port_base: Optional[int] = None,
) -> SocketJob:
    """Run one sort across ``plan.K`` spawned worker processes."""
    if port_base is None:
        port_base = port_base_from_env()
    K = plan.K
    server = socket.create_server((HOST, port_base or 0), backlog=K + 8)
    server.settimeout(TIMEOUT)
    ctx = multiprocessing.get_context("spawn")
    procs = [
        ctx.Process(
            target=worker_main,
            args=(k, server.getsockname()[1], port_base + k if port_base else 0),
            daemon=True,
        )
        for k in range(1, K + 1)
    ]
    for p in procs:
        p.start()
    conns: Dict[int, socket.socket] = {}
    try:
        ports = {}
        while len(conns) < K:
            sock, _ = server.accept()
            sock.settimeout(TIMEOUT)
            hello = recv_control(sock, "hello")
            conns[hello["node"]] = sock
            ports[hello["node"]] = hello["port"]

        for k, sock in conns.items():
            labels = plan.files_of(k)
            send_control(sock, {
                "cmd": "setup", "K": K, "r": plan.r, "coded": coded,
                "multiplicity": plan.multiplicity,
                "boundaries": list(partitioning.boundaries),
                "peers": {str(j): port for j, port in ports.items()},
                "files": [list(label) for label in labels],
            })
            for label in labels:
                send_frame(sock, DATA, serialize_records(files[label]))
        _barrier(conns, "ready")
        for sock in conns.values():
            send_control(sock, {"cmd": "compute"})
        _barrier(conns, "computed")

        ledger = ShuffleLedger()
        digests = []
        start = time.perf_counter()
        for index, slot in enumerate(schedule):
            for receiver in slot.receivers:
                send_control(conns[receiver], {"cmd": "recv", "slot": index})
            send_control(conns[slot.sender], {"cmd": "send", "slot": index})
            sent = recv_control(conns[slot.sender], "sent")
            for receiver in slot.receivers:
                got = recv_control(conns[receiver], "received")
                if got["slot"] != index or got["bytes"] != sent["bytes"] or got["digest"] != sent["digest"]:
                    raise TransmissionError(f"node {receiver} received a corrupted payload", slot=index)
            ledger.record(slot.sender, slot.receivers, sent["bytes"], slot.units)
            digests.append(sent["digest"])
        shuffle_wall = time.perf_counter() - start

        partitions: List[List[Record]] = []
        node_times = []
        for k in range(1, K + 1):
            send_control(conns[k], {"cmd": "finish"})
        for k in range(1, K + 1):
            node_times.append(recv_control(conns[k], "done")["times"])
            partitions.append(deserialize_records(recv_data(conns[k])))
        for sock in conns.values():
            send_control(sock, {"cmd": "exit"})
    except (OSError, ConnectionError) as exc:
        raise TransmissionError(f"socket transport failed: {exc}") from exc
    finally:
        for sock in conns.values():
            sock.close()
        server.close()
        for p in procs:
            p.join(timeout=10)
            if p.is_alive():
                p.terminate()
    return SocketJob(partitions, node_times, ledger, digests, shuffle_wall)


def _barrier(conns: Dict[int, socket.socket], expect: str) -> None:
    for sock in conns.values():
        recv_control(sock, expect)
