"""Real TCP transport for wall-clock runs.

Every party opens a listening socket and dials every peer in parallel; the
duplicate connection of each pair is dropped deterministically (the link
dialed by the lower party id wins). Frames are a 4-byte big-endian length
prefix followed by the payload; a handshake frame of protocol version 0x01
plus the dialer's party id opens each connection.

Counters mirror the simulator's semantics: one message and one packet per
frame sent, frame bytes (length prefix included) as bytes_sent.
"""

from __future__ import annotations

import socket
import struct
import threading
import time

from .params import TransportCounters

PROTOCOL_VERSION = 0x01
DEFAULT_CONNECT_TIMEOUT_S = 30.0

# Share wire format puts the 4-byte session tag and the 2-byte round index
# at the end of the payload, so the transport can route without decoding.
_TRAILER = struct.Struct(">IH")


class TransportProtocolError(RuntimeError):
    """Peer violated the framing or handshake protocol."""


def _recv_exact(sock, count):
    buf = b""
    while len(buf) < count:
        chunk = sock.recv(count - len(buf))
        if not chunk:
            raise EOFError("connection closed")
        buf += chunk
    return buf


class _Endpoint:
    """One party's sockets, inbox and counters."""

    def __init__(self, party_id, cluster):
        self.party_id = party_id
        self.cluster = cluster
        self.listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self.listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self.conns = {}
        self.send_locks = {}
        self.inbox = {}
        self.cond = threading.Condition()
        self.error = None
        self.closing = False
        self.threads = []

    def bind(self, host, port):
        self.listener.bind((host, port))
        self.listener.listen(16)
        return self.listener.getsockname()

    # -- connection management -------------------------------------------

    def start_listening(self):
        t = threading.Thread(target=self._accept_loop, daemon=True)
        t.start()
        self.threads.append(t)

    def _accept_loop(self):
        while not self.closing:
            try:
                conn, _ = self.listener.accept()
            except OSError:
                return
            try:
                head = _recv_exact(conn, 2)
            except (EOFError, OSError):
                conn.close()
                continue
            if head[0] != PROTOCOL_VERSION:
                conn.close()
                continue
            dialer = head[1]
            # lower id dials higher id wins: as the acceptor we only keep
            # links dialed by a lower id
            if dialer >= self.party_id or dialer not in self.cluster.addresses:
                conn.close()
                continue
            conn.sendall(bytes([PROTOCOL_VERSION, self.party_id]))
            self._adopt(dialer, conn)

    def dial(self, peer_id, addr, deadline):
        while not self.closing:
            try:
                conn = socket.create_connection(addr, timeout=1.0)
                conn.sendall(bytes([PROTOCOL_VERSION, self.party_id]))
                reply = _recv_exact(conn, 2)
                if reply[0] != PROTOCOL_VERSION or reply[1] != peer_id:
                    raise TransportProtocolError("bad handshake reply")
                conn.settimeout(None)
                self._adopt(peer_id, conn)
                return
            except TransportProtocolError:
                raise
            except (EOFError, OSError):
                # peer not up yet, or it dropped our duplicate link
                if self.party_id > peer_id:
                    return  # their link to us is the one that is kept
                if time.monotonic() > deadline:
                    raise TransportProtocolError(
                        f"party {self.party_id}: connect to {peer_id} timed out"
                    )
                time.sleep(0.02)

    def _adopt(self, peer_id, conn):
        with self.cond:
            if peer_id in self.conns:
                conn.close()
                return
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            self.conns[peer_id] = conn
            self.send_locks[peer_id] = threading.Lock()
            self.cond.notify_all()
        t = threading.Thread(target=self._read_loop, args=(peer_id, conn), daemon=True)
        t.start()
        self.threads.append(t)

    def wait_connected(self, peers, deadline):
        with self.cond:
            while not self.cond.wait_for(
                lambda: set(peers) <= set(self.conns), timeout=0.1
            ):
                if self.error:
                    raise self.error
                if time.monotonic() > deadline:
                    missing = set(peers) - set(self.conns)
                    raise TransportProtocolError(
                        f"party {self.party_id}: no link to {sorted(missing)}"
                    )

    # -- data path ----------------------------------------------------------

    def send(self, msg):
        if msg.receiver == self.party_id:
            raise ValueError("a party cannot send to itself")
        conn = self.conns.get(msg.receiver)
        if conn is None:
            raise ValueError(f"no link to party {msg.receiver}")
        frame = struct.pack(">I", len(msg.payload)) + msg.payload
        with self.send_locks[msg.receiver]:
            conn.sendall(frame)
        counters = self.cluster.counters[self.party_id]
        with self.cluster._counter_lock:
            counters.messages_sent += 1
            counters.packets_sent += 1
            counters.bytes_sent += len(frame)

    def _read_loop(self, peer_id, conn):
        try:
            while True:
                (length,) = struct.unpack(">I", _recv_exact(conn, 4))
                if length == 0:
                    raise TransportProtocolError(
                        f"zero-length frame from party {peer_id}"
                    )
                payload = _recv_exact(conn, length)
                if length < _TRAILER.size:
                    raise TransportProtocolError("frame too short for routing")
                tag, round_index = _TRAILER.unpack(payload[-_TRAILER.size:])
                with self.cluster._counter_lock:
                    self.cluster.counters[self.party_id].messages_received += 1
                with self.cond:
                    self.inbox.setdefault((tag, round_index), {})[peer_id] = payload
                    self.cond.notify_all()
        except (EOFError, OSError):
            return
        except TransportProtocolError as exc:
            conn.close()
            with self.cond:
                self.error = exc
                self.cond.notify_all()

    def receive_round(self, session_id, round_index, expected, timeout_s):
        """Round barrier: block until every expected sender's payload arrived."""
        key = (session_id & 0xFFFFFFFF, round_index)
        deadline = time.monotonic() + timeout_s
        with self.cond:
            while True:
                if self.error:
                    raise self.error
                slot = self.inbox.get(key, {})
                if set(expected) <= set(slot):
                    return self.inbox.pop(key, {})
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise TimeoutError(
                        f"party {self.party_id}: round {round_index} barrier timed out"
                    )
                self.cond.wait(timeout=min(remaining, 0.1))

    def close(self):
        self.closing = True
        try:
            self.listener.close()
        except OSError:
            pass
        for conn in list(self.conns.values()):
            try:
                conn.close()
            except OSError:
                pass


class SocketCluster:
    """A full mesh of socket endpoints, one per party.

    For loopback smoke runs all endpoints live in one process; the address
    table may also point at remote hosts.
    """

    def __init__(self, parties, addresses=None, host="127.0.0.1",
                 connect_timeout_s=DEFAULT_CONNECT_TIMEOUT_S):
        self.party_ids = list(parties)
        self.counters = TransportCounters(self.party_ids)
        self._counter_lock = threading.Lock()
        self.connect_timeout_s = connect_timeout_s
        self._endpoints = {p: _Endpoint(p, self) for p in self.party_ids}
        if addresses is None:
            addresses = {}
            for p in self.party_ids:
                addresses[p] = self._endpoints[p].bind(host, 0)
        else:
            seen = {}
            normalized = {}
            for p, addr in addresses.items():
                addr = (addr[0], int(addr[1]))
                if addr in seen:
                    raise ValueError(
                        f"duplicate address {addr} for parties {seen[addr]} and {p}"
                    )
                seen[addr] = p
                normalized[p] = addr
            addresses = normalized
            for p in self.party_ids:
                self._endpoints[p].bind(*addresses[p])
        self.addresses = addresses

    def start(self):
        deadline = time.monotonic() + self.connect_timeout_s
        for ep in self._endpoints.values():
            ep.start_listening()
        dialers = []
        for p, ep in self._endpoints.items():
            for peer in self.party_ids:
                if peer == p:
                    continue
                t = threading.Thread(
                    target=ep.dial, args=(peer, self.addresses[peer], deadline),
                    daemon=True,
                )
                t.start()
                dialers.append(t)
        for t in dialers:
            t.join()
        for p, ep in self._endpoints.items():
            ep.wait_connected([q for q in self.party_ids if q != p], deadline)
        return self

    def endpoint(self, party_id):
        return self._endpoints[party_id]

    def close(self):
        for ep in self._endpoints.values():
            ep.close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.close()
