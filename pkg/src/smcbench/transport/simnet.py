"""Deterministic discrete-event network simulator.

Models per-link one-way latency, rate serialization, probabilistic packet
loss with timed retransmission, per-receiver message combining, and
acknowledgement gating: a multi-packet transmission sends its next packet
only once the previous packet was acknowledged, and the sender turns of a
sequenced round (the input phase) advance on acknowledgement of the previous
sender's transmissions.

Every sending host additionally owns a sequential outbound lane that charges
a fixed handoff cost per wire unit, modeling a communication layer that
processes outgoing messages one at a time.

The simulator is strictly single-threaded. Ties in the event queue break by
insertion sequence number, so identical (seed, scenario) inputs replay
identical event sequences. Acknowledgements are latency-only signals: they
occupy no link capacity and are not counted.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass

from .params import FRAME_OVERHEAD, LinkParams, TransportCounters


class DeliveryFailedError(RuntimeError):
    """A packet exceeded the retransmission cap."""


@dataclass(frozen=True, slots=True)
class SimParams:
    """Host-side constants of the simulation, independent of link quality."""

    # Communication-layer processing per outbound wire unit; serialized per
    # sending host across all sessions.
    handoff_ms: float = 0.05
    # Retransmission timeout: 2 * one_way + rto_extra_ms, doubling per
    # attempt, capped at rto_backoff_cap times the base.
    rto_extra_ms: float = 1.0
    rto_backoff_cap: int = 8
    max_attempts: int = 50


def lossy_transmit(packet_size_bytes, link, rng, max_attempts=50):
    """Number of attempts to push one packet over a lossy link.

    Each attempt is lost independently with the link's loss probability, so
    the expected count is 1 / (1 - loss). Raises DeliveryFailedError when
    the attempt cap is exceeded.
    """
    if packet_size_bytes <= 0:
        raise ValueError("packet size must be > 0")
    attempts = 1
    while rng.random() < link.loss_prob:
        attempts += 1
        if attempts > max_attempts:
            raise DeliveryFailedError(
                f"no delivery within {max_attempts} attempts"
            )
    return attempts


def combine_pending(messages):
    """Group buffered messages for one receiver into wire units.

    All currently buffered messages of the same session merge into a single
    wire unit; messages of different sessions never merge. Arrival order is
    preserved within and across groups.
    """
    groups = []
    index = {}
    for msg in messages:
        if msg.session_id in index:
            groups[index[msg.session_id]].append(msg)
        else:
            index[msg.session_id] = len(groups)
            groups.append([msg])
    return groups


class _WireUnit:
    __slots__ = (
        "sender", "receiver", "session_id", "round_index", "messages",
        "packets", "sequenced", "cancelled", "acked_packets", "released",
    )

    def __init__(self, messages, link, sequenced):
        first = messages[0]
        self.sender = first.sender
        self.receiver = first.receiver
        self.session_id = first.session_id
        self.round_index = first.round_index
        self.messages = messages
        size = FRAME_OVERHEAD + sum(len(m.payload) for m in messages)
        self.packets = [_Packet(self, i, s) for i, s in enumerate(link.packet_sizes(size))]
        self.sequenced = sequenced
        self.cancelled = False
        self.acked_packets = 0
        self.released = False


class _Packet:
    __slots__ = ("unit", "index", "size", "attempts", "delivered")

    def __init__(self, unit, index, size):
        self.unit = unit
        self.index = index
        self.size = size
        self.attempts = 0
        self.delivered = False


class _CloseSequencer:
    """Serializes the sender turns of one session's sequenced round.

    Party k+1's wire units start only after every unit of party k has been
    acknowledged. Assumes each sender emits exactly one unit per other party.
    """

    def __init__(self, net, order, units_per_sender):
        self.net = net
        self.order = list(order)
        self.units_per_sender = units_per_sender
        self.turn = 0
        self.registered = {p: [] for p in self.order}
        self.acked = {p: 0 for p in self.order}
        self.dead = False

    def active_sender(self):
        return self.order[self.turn] if self.turn < len(self.order) else None

    def register(self, unit):
        self.registered[unit.sender].append(unit)
        if not self.dead and unit.sender == self.active_sender():
            self.net._start_unit(unit, self.net.now)

    def unit_acked(self, unit):
        if self.dead:
            return
        self.acked[unit.sender] += 1
        if (
            unit.sender == self.active_sender()
            and self.acked[unit.sender] >= self.units_per_sender
        ):
            self.turn += 1
            nxt = self.active_sender()
            if nxt is not None:
                for queued in self.registered[nxt]:
                    if not queued.released:
                        self.net._start_unit(queued, self.net.now)


class SimulatedNetwork:
    """Full mesh of simulated links between a fixed set of parties."""

    def __init__(self, peers, link, *, seed=0, params=None, record_log=False):
        if isinstance(peers, int):
            self.party_ids = list(range(1, peers + 1))
        else:
            self.party_ids = list(peers)
        if len(self.party_ids) < 2:
            raise ValueError("need at least two parties")
        pairs = [
            (i, j) for i in self.party_ids for j in self.party_ids if i != j
        ]
        if isinstance(link, LinkParams):
            self._links = {pair: link for pair in pairs}
        else:
            missing = set(pairs) - set(link)
            if missing:
                raise ValueError(f"missing link params for {sorted(missing)}")
            self._links = dict(link)
        self.params = params or SimParams()
        self.counters = TransportCounters(self.party_ids)
        self.event_log = [] if record_log else None

        self._rng = random.Random(f"simnet:{seed}")
        self._queue = []
        self._seq = 0
        self._now = 0.0
        self._lane_free = {p: 0.0 for p in self.party_ids}
        self._link_free = {pair: 0.0 for pair in pairs}
        self._pending = {}
        self._flush_scheduled = set()
        self._sequencers = {}
        self._session_units = {}
        self._party_cb = {}
        self._failure_cb = None

    # -- public surface -----------------------------------------------------

    @property
    def now(self):
        return self._now

    def iter_links(self):
        """All directed (sender, receiver) -> LinkParams entries."""
        return self._links.items()

    def register_party(self, party_id, on_message):
        if party_id not in self._lane_free:
            raise ValueError(f"unknown party {party_id}")
        self._party_cb[party_id] = on_message

    def set_failure_handler(self, fn):
        """fn(session_id, round_index, reason) on retransmission-cap failure."""
        self._failure_cb = fn

    def schedule(self, at_ms, fn):
        """Run fn at simulated time at_ms (clamped to now)."""
        self._post(at_ms, fn)

    def send(self, msg, sequenced=False):
        """Hand one message to the communication layer; never blocks.

        The message is buffered towards its receiver; buffered same-session
        messages to one receiver leave as a single wire unit.
        """
        if msg.sender not in self._lane_free:
            raise ValueError(f"unknown sender {msg.sender}")
        if msg.receiver not in self._lane_free:
            raise ValueError(f"unknown receiver {msg.receiver}")
        self.counters[msg.sender].messages_sent += 1
        key = (msg.sender, msg.receiver)
        self._pending.setdefault(key, []).append((msg, sequenced))
        if key not in self._flush_scheduled:
            self._flush_scheduled.add(key)
            self._post(self._now, lambda: self._flush(key))

    def cancel_session(self, session_id):
        """Stop all future activity of one session (after a failure)."""
        for unit in self._session_units.get(session_id, ()):
            unit.cancelled = True
        seq = self._sequencers.get(session_id)
        if seq is not None:
            seq.dead = True

    def forget_session(self, session_id):
        self._session_units.pop(session_id, None)
        self._sequencers.pop(session_id, None)

    def run_until_idle(self):
        """Process the event queue to exhaustion; returns final time."""
        while self._queue:
            self._now, _, fn = heapq.heappop(self._queue)
            fn()
        return self._now

    # -- internals ----------------------------------------------------------

    def _log(self, kind, *detail):
        if self.event_log is not None:
            self.event_log.append((round(self._now, 9), kind) + detail)

    def _post(self, at, fn):
        self._seq += 1
        heapq.heappush(self._queue, (max(at, self._now), self._seq, fn))

    def _link(self, sender, receiver):
        return self._links[(sender, receiver)]

    def _flush(self, key):
        self._flush_scheduled.discard(key)
        buffered = self._pending.pop(key, [])
        if not buffered:
            return
        link = self._link(*key)
        flags = {m.session_id: s for m, s in buffered}
        sender = key[0]
        for group in combine_pending([m for m, _ in buffered]):
            unit = _WireUnit(group, link, flags[group[0].session_id])
            if len(group) > 1:
                self.counters[sender].combined_messages += len(group) - 1
            self._session_units.setdefault(unit.session_id, []).append(unit)
            ready = max(self._now, self._lane_free[sender]) + self.params.handoff_ms
            self._lane_free[sender] = ready
            self._post(ready, lambda u=unit: self._unit_ready(u))

    def _unit_ready(self, unit):
        if unit.cancelled:
            return
        if unit.sequenced:
            seq = self._sequencers.get(unit.session_id)
            if seq is None:
                seq = _CloseSequencer(
                    self, self.party_ids, len(self.party_ids) - 1
                )
                self._sequencers[unit.session_id] = seq
            seq.register(unit)
        else:
            self._start_unit(unit, self._now)

    def _start_unit(self, unit, at):
        unit.released = True
        self._transmit(unit.packets[0], at)

    def _rto_ms(self, link, attempts):
        base = 2.0 * link.one_way_latency_ms + self.params.rto_extra_ms
        backoff = min(2 ** (attempts - 1), self.params.rto_backoff_cap)
        return base * backoff

    def _transmit(self, packet, at):
        unit = packet.unit
        if unit.cancelled:
            return
        link = self._link(unit.sender, unit.receiver)
        key = (unit.sender, unit.receiver)
        entry = max(at, self._link_free[key])
        wire = link.wire_ms(packet.size)
        self._link_free[key] = entry + wire
        counters = self.counters[unit.sender]
        counters.packets_sent += 1
        counters.bytes_sent += packet.size
        packet.attempts += 1
        self._log("tx", unit.sender, unit.receiver, unit.session_id,
                  unit.round_index, packet.index, packet.attempts)
        if link.loss_prob > 0.0 and self._rng.random() < link.loss_prob:
            if packet.attempts >= self.params.max_attempts:
                unit.cancelled = True
                self._log("cap", unit.sender, unit.receiver, unit.session_id)
                if self._failure_cb is not None:
                    self._failure_cb(
                        unit.session_id,
                        unit.round_index,
                        f"retransmission cap of {self.params.max_attempts} reached",
                    )
                return
            counters.retransmissions += 1
            retry_at = entry + self._rto_ms(link, packet.attempts)
            self._post(retry_at, lambda: self._transmit(packet, self._now))
            return
        arrival = entry + wire + link.one_way_latency_ms
        self._post(arrival, lambda: self._deliver(packet))

    def _deliver(self, packet):
        unit = packet.unit
        if unit.cancelled or packet.delivered:
            return
        packet.delivered = True
        self._log("rx", unit.sender, unit.receiver, unit.session_id,
                  unit.round_index, packet.index)
        last = packet.index == len(unit.packets) - 1
        if last:
            receiver_counters = self.counters[unit.receiver]
            cb = self._party_cb.get(unit.receiver)
            for msg in unit.messages:
                receiver_counters.messages_received += 1
                if cb is not None:
                    cb(msg)
        # Acknowledgements carry no payload: latency-only signal back to the
        # sender, gating the next packet and the sequenced turn order.
        needs_ack = unit.sequenced or not last
        if needs_ack:
            link = self._link(unit.receiver, unit.sender)
            self._post(
                self._now + link.one_way_latency_ms,
                lambda: self._acknowledged(packet),
            )

    def _acknowledged(self, packet):
        unit = packet.unit
        if unit.cancelled:
            return
        unit.acked_packets += 1
        nxt = packet.index + 1
        if nxt < len(unit.packets):
            self._transmit(unit.packets[nxt], self._now)
        elif unit.sequenced:
            seq = self._sequencers.get(unit.session_id)
            if seq is not None:
                seq.unit_acked(unit)
