"""Link parameters, wire messages and counters shared by both transports."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

# Frame header of one wire unit: 4-byte big-endian length prefix, matching
# the socket backend's framing.
FRAME_OVERHEAD = 4

# Measured round-trip of the reference LAN before any artificial delay is
# added; configured latency sweeps add on top of this.
BASE_RTT_MS = 0.18

# Ethernet 14 + IPv4 20 + TCP 20 per packet.
DEFAULT_HEADER_OVERHEAD = 54
DEFAULT_MTU_PAYLOAD = 1460


def one_way_ms(added_rtt_ms):
    """One-way latency for a configured (RTT-additive) extra delay.

    The benchmark's latency parameter is the extra delay added to the round
    trip, split evenly between both directions of each link.
    """
    return (BASE_RTT_MS + added_rtt_ms) / 2.0


@dataclass(frozen=True, slots=True)
class LinkParams:
    """Per-link latency, rate, loss and packetization parameters."""

    one_way_latency_ms: float
    rate_bit_s: float = 1e9
    loss_prob: float = 0.0
    mtu_payload: int = DEFAULT_MTU_PAYLOAD
    header_overhead: int = DEFAULT_HEADER_OVERHEAD

    def __post_init__(self):
        if self.one_way_latency_ms < 0:
            raise ValueError("latency must be >= 0")
        if self.rate_bit_s <= 0:
            raise ValueError("rate must be > 0")
        if not 0 <= self.loss_prob < 1:
            raise ValueError("loss probability must be in [0, 1)")
        if self.mtu_payload < 1 or self.header_overhead < 0:
            raise ValueError("bad packetization parameters")

    @classmethod
    def for_scenario(cls, added_rtt_ms=0.0, rate_mbit=1000.0, loss=0.0,
                     mtu=DEFAULT_MTU_PAYLOAD, header=DEFAULT_HEADER_OVERHEAD):
        return cls(
            one_way_latency_ms=one_way_ms(added_rtt_ms),
            rate_bit_s=rate_mbit * 1e6,
            loss_prob=loss,
            mtu_payload=mtu,
            header_overhead=header,
        )

    def packet_sizes(self, size_bytes):
        """On-the-wire packet sizes (payload chunk + header) of a wire unit."""
        if size_bytes <= 0:
            raise ValueError("size must be > 0")
        sizes = []
        remaining = size_bytes
        while remaining > 0:
            chunk = min(remaining, self.mtu_payload)
            sizes.append(chunk + self.header_overhead)
            remaining -= chunk
        return sizes

    def wire_ms(self, packet_bytes):
        """Serialization delay of one packet at the link rate."""
        return packet_bytes * 8.0 / self.rate_bit_s * 1000.0


def transfer_time(size_bytes, link):
    """Delivery time of a wire unit of `size_bytes` over an idle link.

    One packet costs a single one-way delay; every further packet is held
    until the previous packet's acknowledgement returned, adding two one-way
    delays each. Serialization of each data packet at the link rate adds on
    top of that.
    """
    sizes = link.packet_sizes(size_bytes)
    packets = len(sizes)
    latency = link.one_way_latency_ms * (2 * packets - 1)
    serialization = sum(link.wire_ms(s) for s in sizes)
    return latency + serialization


@dataclass(frozen=True, slots=True)
class Message:
    """One logical transmission between two parties of one session round."""

    sender: int
    receiver: int
    session_id: int
    round_index: int
    payload: bytes

    def __post_init__(self):
        if self.sender == self.receiver:
            raise ValueError("a party cannot send to itself")
        if not self.payload:
            raise ValueError("empty payload")


@dataclass(slots=True)
class CounterSet:
    """Per-party transmission counters; monotonically nondecreasing."""

    bytes_sent: int = 0
    messages_sent: int = 0
    packets_sent: int = 0
    retransmissions: int = 0
    combined_messages: int = 0
    messages_received: int = 0

    def snapshot(self):
        return replace(self)

    def as_dict(self):
        return {
            "bytes_sent": self.bytes_sent,
            "messages_sent": self.messages_sent,
            "packets_sent": self.packets_sent,
            "retransmissions": self.retransmissions,
            "combined_messages": self.combined_messages,
            "messages_received": self.messages_received,
        }


class TransportCounters:
    """Counters for every party of one transport instance.

    `packets_sent` counts data-packet transmissions including retransmission
    attempts; acknowledgements only influence timing and are not counted.
    """

    def __init__(self, parties):
        self.per_party = {p: CounterSet() for p in parties}

    def __getitem__(self, party):
        return self.per_party[party]

    def total(self, field_name):
        return sum(getattr(c, field_name) for c in self.per_party.values())

    def snapshot(self):
        return {p: c.snapshot() for p, c in self.per_party.items()}

    def as_dict(self):
        return {p: c.as_dict() for p, c in self.per_party.items()}


def load_scenario(source):
    """Simulator scenario from JSON: {peers, latency_ms, rate_mbit, loss, mtu, header}.

    `source` is a path, a JSON string, or an already-parsed dict. Returns
    (peer_count, LinkParams).
    """
    if isinstance(source, dict):
        raw = source
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            raw = json.loads(text)
        else:
            with open(text, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
    unknown = set(raw) - {"peers", "latency_ms", "rate_mbit", "loss", "mtu", "header"}
    if unknown:
        raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
    peers = int(raw.get("peers", 3))
    link = LinkParams.for_scenario(
        added_rtt_ms=float(raw.get("latency_ms", 0.0)),
        rate_mbit=float(raw.get("rate_mbit", 1000.0)),
        loss=float(raw.get("loss", 0.0)),
        mtu=int(raw.get("mtu", DEFAULT_MTU_PAYLOAD)),
        header=int(raw.get("header", DEFAULT_HEADER_OVERHEAD)),
    )
    return peers, link
