"""Round-synchronized protocol executor.

Each party of a session runs the program as a generator that alternates
local computation with exchanges. An exchange hands all outgoing shares of
the round to the transport (non-blocking) and then waits at the round
barrier until every expected share arrived; receipt of multiple pending
shares is simultaneous, so the waiting time of a round is the maximum over
its links, not the sum. The input round is the one exception: its sender
turns are serialized (one host sends at a time), all other rounds exchange
fully in parallel.

A party may run one step ahead of the slowest peer (it owns its next shares
locally) but never two: the barrier enforces round synchronization.

Sessions of a batch are independent; an executor drives at most
`executor_slots` of them concurrently, refilling as sessions finish.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .field import FieldElement
from .programs import AddLocal, Close, MulRound, Open, ProtocolProgram, input_wire
from .sharing import (
    Share,
    SharePolynomial,
    ThresholdConfig,
    decode_share,
    encode_share,
    local_add,
    local_mul_raw,
    reconstruct,
    reduction_coefficients,
)
from .transport.params import Message

# Concurrent sessions one host executor drives; parallelization factors
# above this saturate the executor and stop improving amortized duration.
DEFAULT_EXECUTOR_SLOTS = 20

# Round barrier gives up after this many quiet round trips (no delivery
# progress for the awaited round).
BARRIER_TIMEOUT_RTTS = 10.0


class SessionFailedError(RuntimeError):
    """A session died at a communication round."""

    def __init__(self, session_id, round_index, reason):
        super().__init__(f"session {session_id} failed at round {round_index}: {reason}")
        self.session_id = session_id
        self.round_index = round_index


@dataclass(frozen=True, slots=True)
class _Exchange:
    """One communication round from a single party's point of view."""

    round_index: int
    outgoing: tuple          # (receiver, Share) pairs
    expected: frozenset      # sender ids the barrier waits for
    sequenced: bool


class PartySession:
    """Mutable per-party view of one session (share store and round index)."""

    __slots__ = ("session_id", "party_id", "cfg", "round_index", "share_store", "result")

    def __init__(self, session_id, party_id, cfg):
        self.session_id = session_id
        self.party_id = party_id
        self.cfg = cfg
        self.round_index = 0
        self.share_store = {}
        self.result = None


def party_program(state, program, modulus, input_value, rng):
    """Generator running one party through the program.

    Yields _Exchange actions; the driver resumes it with a dict mapping
    sender id to the received Share. Returns the opened result.
    """
    cfg = state.cfg
    me = state.party_id
    others = frozenset(p for p in cfg.parties if p != me)
    wires = state.share_store
    tag = state.session_id

    for step in program.steps:
        if isinstance(step, Close):
            poly = SharePolynomial.random(input_value, cfg.t, rng)
            ys = poly.evaluate_many(cfg.parties)
            outgoing = []
            for x, y in zip(cfg.parties, ys):
                if x == me:
                    wires[input_wire(me)] = Share(x, y, tag)
                else:
                    outgoing.append((x, Share(x, y, tag)))
            received = yield _Exchange(state.round_index, tuple(outgoing), others, True)
            for sender, share in received.items():
                wires[input_wire(sender)] = share
            state.round_index += 1
        elif isinstance(step, AddLocal):
            wires[step.out] = local_add(wires[step.left], wires[step.right])
        elif isinstance(step, MulRound):
            raw = local_mul_raw(wires[step.left], wires[step.right])
            subpoly = SharePolynomial.random(raw.y, cfg.t, rng)
            sub_ys = subpoly.evaluate_many(cfg.parties)
            outgoing = []
            subshares = {}
            for x, y in zip(cfg.parties, sub_ys):
                if x == me:
                    subshares[me] = Share(x, y, tag)
                else:
                    outgoing.append((x, Share(x, y, tag)))
            received = yield _Exchange(state.round_index, tuple(outgoing), others, False)
            subshares.update(received)
            weights = reduction_coefficients(cfg, modulus)
            acc = FieldElement(0, modulus)
            for sender in cfg.parties:
                acc = acc + weights[sender - 1] * subshares[sender].y
            wires[step.out] = Share(me, acc, tag)
            state.round_index += 1
        elif isinstance(step, Open):
            mine = wires[step.target]
            outgoing = tuple((x, mine) for x in cfg.parties if x != me)
            received = yield _Exchange(state.round_index, outgoing, others, False)
            state.round_index += 1
            shares = [mine] + [received[s] for s in sorted(received)]
            state.result = reconstruct(shares, cfg)
    return state.result


@dataclass(slots=True)
class SessionBatch:
    """Independent sessions sharing one transport; pf of them run at a time."""

    cfg: ThresholdConfig
    program: ProtocolProgram
    inputs: list                  # one {party_id: FieldElement} dict per session
    pf: int = 1

    def __post_init__(self):
        if self.program.n != self.cfg.n:
            raise ValueError("program and threshold config disagree on n")
        if self.pf < 1:
            raise ValueError("parallelization factor must be >= 1")
        parties = set(self.cfg.parties)
        for idx, inp in enumerate(self.inputs):
            if set(inp) != parties:
                raise ValueError(f"session {idx}: inputs must cover every party")


@dataclass(slots=True)
class BatchResult:
    """Outcome and metrics of one batch run."""

    results: dict
    durations_ms: dict
    failed: dict                  # session_id -> round index
    batch_duration_ms: float
    counters: dict                # party -> CounterSet snapshot
    messages_by_round: dict       # session_id -> {round: sends}
    communication_rounds: int
    round_trace: list | None = None

    @property
    def failures(self):
        return len(self.failed)

    def amortized_ms(self):
        return self.batch_duration_ms / max(1, len(self.results))

    def total(self, counter_field):
        return sum(getattr(c, counter_field) for c in self.counters.values())


def _session_rng(seed, session_id, party_id):
    return random.Random(f"{seed}:s{session_id}:p{party_id}")


def barrier_timeout_ms(net):
    """Inactivity timeout of the round barrier for a simulated network.

    Ten times the worst-link round trip plus full-packet serialization; the
    timer restarts on every delivery for the awaited round, so slow sequenced
    input rounds of large sessions do not trip it.
    """
    worst = 0.0
    for _, link in net.iter_links():
        rtt = 2.0 * link.one_way_latency_ms
        ser = link.wire_ms(link.mtu_payload + link.header_overhead)
        worst = max(worst, rtt + ser)
    return BARRIER_TIMEOUT_RTTS * worst


class _SessionRecord:
    __slots__ = (
        "session_id", "inputs", "states", "gens", "awaiting", "buffers",
        "done", "start", "end", "failed_round", "messages_by_round",
    )

    def __init__(self, session_id, inputs):
        self.session_id = session_id
        self.inputs = inputs
        self.states = {}
        self.gens = {}
        self.awaiting = {}       # party -> [round, expected, received, last_progress]
        self.buffers = {}        # party -> round -> {sender: Share}
        self.done = {}
        self.start = 0.0
        self.end = None
        self.failed_round = None
        self.messages_by_round = {}


class SimulatedBatchRun:
    """Drives a batch of sessions over a SimulatedNetwork event loop."""

    def __init__(self, batch, net, modulus, *, seed=0,
                 executor_slots=DEFAULT_EXECUTOR_SLOTS, comp_cost_ms=0.0,
                 timeout_ms=None, record_rounds=False):
        if sorted(net.party_ids) != list(batch.cfg.parties):
            raise ValueError("transport parties do not match the threshold config")
        self.batch = batch
        self.net = net
        self.modulus = modulus
        self.seed = seed
        self.slots = max(1, executor_slots)
        self.comp_cost_ms = comp_cost_ms
        if timeout_ms is None:
            # concurrent sessions queue at the per-host outbound lane; grant
            # the barrier enough slack to sit behind a full backlog
            backlog = 2 * self.slots * (batch.cfg.n - 1) * net.params.handoff_ms
            timeout_ms = barrier_timeout_ms(net) + backlog
        self.timeout_ms = timeout_ms
        self.records = {
            sid: _SessionRecord(sid, inputs)
            for sid, inputs in enumerate(batch.inputs)
        }
        self.round_trace = [] if record_rounds else None
        self._queue = list(self.records)
        self._active = 0

    # -- session lifecycle ----------------------------------------------

    def run(self):
        for party in self.net.party_ids:
            self.net.register_party(party, self._make_receiver(party))
        self.net.set_failure_handler(self._on_transport_failure)
        for _ in range(min(self.slots, len(self._queue))):
            self._start_next()
        self.net.run_until_idle()
        pending = [r for r in self.records.values() if r.end is None]
        if pending:
            raise RuntimeError(f"{len(pending)} sessions never completed")
        return self._collect()

    def _start_next(self):
        if not self._queue:
            return
        sid = self._queue.pop(0)
        self._active += 1
        rec = self.records[sid]
        rec.start = self.net.now
        cfg = self.batch.cfg
        for party in cfg.parties:
            state = PartySession(sid, party, cfg)
            rec.states[party] = state
            rng = _session_rng(self.seed, sid, party)
            rec.gens[party] = party_program(
                state, self.batch.program, self.modulus, rec.inputs[party], rng
            )
        for party in cfg.parties:
            self._advance(rec, party, None)

    def _finish(self, rec):
        rec.end = self.net.now
        self._active -= 1
        self.net.forget_session(rec.session_id)
        self._start_next()

    def _fail_session(self, rec, round_index, reason):
        if rec.failed_round is not None or rec.end is not None:
            return
        rec.failed_round = round_index
        for gen in rec.gens.values():
            gen.close()
        rec.awaiting.clear()
        self.net.cancel_session(rec.session_id)
        self._finish(rec)

    # -- party stepping ---------------------------------------------------

    def _advance(self, rec, party, received):
        if rec.failed_round is not None:
            return
        gen = rec.gens[party]
        try:
            exchange = gen.send(received)
        except StopIteration as stop:
            rec.done[party] = stop.value
            if len(rec.done) == len(rec.states):
                values = {v.value for v in rec.done.values()}
                if len(values) != 1:
                    raise RuntimeError(
                        f"session {rec.session_id}: parties disagree on the result"
                    )
                self._finish(rec)
            return
        if self.comp_cost_ms > 0:
            self.net.schedule(
                self.net.now + self.comp_cost_ms,
                lambda: self._post_exchange(rec, party, exchange),
            )
        else:
            self._post_exchange(rec, party, exchange)

    def _post_exchange(self, rec, party, exchange):
        if rec.failed_round is not None:
            return
        if self.round_trace is not None:
            self.round_trace.append(
                (rec.session_id, party, exchange.round_index, self.net.now)
            )
        per_round = rec.messages_by_round
        per_round[exchange.round_index] = per_round.get(exchange.round_index, 0) + len(exchange.outgoing)
        for receiver, share in exchange.outgoing:
            payload = encode_share(share, exchange.round_index, self.modulus)
            self.net.send(
                Message(party, receiver, rec.session_id, exchange.round_index, payload),
                sequenced=exchange.sequenced,
            )
        entry = [exchange.round_index, set(exchange.expected), {}, self.net.now]
        rec.awaiting[party] = entry
        buffered = rec.buffers.get(party, {}).pop(exchange.round_index, None)
        if buffered:
            entry[2].update(buffered)
            entry[3] = self.net.now
        if entry[1] <= entry[2].keys():
            rec.awaiting.pop(party, None)
            self._advance(rec, party, entry[2])
        else:
            self.net.schedule(
                self.net.now + self.timeout_ms,
                lambda: self._check_barrier(rec, party, exchange.round_index),
            )

    def _make_receiver(self, party):
        def on_message(msg):
            rec = self.records.get(msg.session_id)
            if rec is None or rec.failed_round is not None:
                return
            share, round_index = decode_share(msg.payload, self.modulus)
            if (
                share.session_tag != (msg.session_id & 0xFFFFFFFF)
                or round_index != msg.round_index
            ):
                raise RuntimeError("wire metadata does not match the envelope")
            entry = rec.awaiting.get(party)
            if entry is not None and entry[0] == round_index:
                entry[2][msg.sender] = share
                entry[3] = self.net.now
                if entry[1] <= entry[2].keys():
                    rec.awaiting.pop(party, None)
                    self._advance(rec, party, entry[2])
            else:
                rec.buffers.setdefault(party, {}).setdefault(round_index, {})[msg.sender] = share
        return on_message

    def _check_barrier(self, rec, party, round_index):
        if rec.failed_round is not None or rec.end is not None:
            return
        entry = rec.awaiting.get(party)
        if entry is None or entry[0] != round_index:
            return
        quiet = self.net.now - entry[3]
        if quiet + 1e-9 >= self.timeout_ms:
            self._fail_session(rec, round_index, "round barrier timeout")
        else:
            self.net.schedule(
                entry[3] + self.timeout_ms,
                lambda: self._check_barrier(rec, party, round_index),
            )

    def _on_transport_failure(self, session_id, round_index, reason):
        rec = self.records.get(session_id)
        if rec is not None:
            self._fail_session(rec, round_index, reason)

    # -- results ----------------------------------------------------------

    def _collect(self):
        results = {}
        durations = {}
        failed = {}
        messages = {}
        end_max = 0.0
        start_min = min(rec.start for rec in self.records.values())
        for sid, rec in self.records.items():
            durations[sid] = rec.end - rec.start
            end_max = max(end_max, rec.end - start_min)
            messages[sid] = dict(rec.messages_by_round)
            if rec.failed_round is not None:
                failed[sid] = rec.failed_round
                results[sid] = None
            else:
                results[sid] = next(iter(rec.done.values()))
        return BatchResult(
            results=results,
            durations_ms=durations,
            failed=failed,
            batch_duration_ms=end_max,
            counters=self.net.counters.snapshot(),
            messages_by_round=messages,
            communication_rounds=self.batch.program.communication_rounds,
            round_trace=self.round_trace,
        )


def run_batch(batch, transport, *, modulus, seed=0,
              executor_slots=DEFAULT_EXECUTOR_SLOTS, comp_cost_ms=0.0,
              timeout_ms=None, record_rounds=False):
    """Run every session of the batch; dispatches on the transport kind."""
    from .transport.simnet import SimulatedNetwork

    if isinstance(transport, SimulatedNetwork):
        driver = SimulatedBatchRun(
            batch, transport, modulus, seed=seed,
            executor_slots=min(executor_slots, batch.pf),
            comp_cost_ms=comp_cost_ms, timeout_ms=timeout_ms,
            record_rounds=record_rounds,
        )
        return driver.run()

    from .transport.sockets import SocketCluster

    if isinstance(transport, SocketCluster):
        return _run_batch_sockets(batch, transport, modulus, seed, timeout_ms)
    raise TypeError(f"unsupported transport: {transport!r}")


def run_session(program, inputs, transport, *, cfg, modulus, seed=0, **kwargs):
    """Run a single session; returns (result, BatchResult).

    Raises SessionFailedError carrying the round index when the session dies.
    """
    batch = SessionBatch(cfg, program, [inputs], pf=1)
    outcome = run_batch(batch, transport, modulus=modulus, seed=seed, **kwargs)
    if outcome.failed:
        round_index = outcome.failed[0]
        raise SessionFailedError(0, round_index, "transport failure")
    return outcome.results[0], outcome


def _run_batch_sockets(batch, cluster, modulus, seed, timeout_ms):
    """Socket-backend batch: one thread per party, sessions run in order."""
    import threading
    import time

    cfg = batch.cfg
    timeout_s = (timeout_ms / 1000.0) if timeout_ms else 30.0
    results = {sid: {} for sid in range(len(batch.inputs))}
    failed = {}
    durations = {}
    errors = []
    lock = threading.Lock()

    def party_main(party):
        endpoint = cluster.endpoint(party)
        for sid, inputs in enumerate(batch.inputs):
            state = PartySession(sid, party, cfg)
            rng = _session_rng(seed, sid, party)
            gen = party_program(state, batch.program, modulus, inputs[party], rng)
            received = None
            begin = time.monotonic()
            try:
                while True:
                    try:
                        exchange = gen.send(received)
                    except StopIteration as stop:
                        with lock:
                            results[sid][party] = stop.value
                            durations[sid] = max(
                                durations.get(sid, 0.0),
                                (time.monotonic() - begin) * 1000.0,
                            )
                        break
                    for receiver, share in exchange.outgoing:
                        payload = encode_share(share, exchange.round_index, modulus)
                        endpoint.send(
                            Message(party, receiver, sid, exchange.round_index, payload)
                        )
                    raw = endpoint.receive_round(
                        sid, exchange.round_index, exchange.expected, timeout_s
                    )
                    received = {
                        sender: decode_share(payload, modulus)[0]
                        for sender, payload in raw.items()
                    }
            except Exception as exc:  # noqa: BLE001 - propagated to the caller
                with lock:
                    failed[sid] = state.round_index
                    errors.append((party, sid, exc))
                break

    threads = [
        threading.Thread(target=party_main, args=(p,), daemon=True)
        for p in cfg.parties
    ]
    start = time.monotonic()
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    wall_ms = (time.monotonic() - start) * 1000.0
    if errors:
        party, sid, exc = errors[0]
        raise SessionFailedError(sid, failed.get(sid, -1), f"party {party}: {exc}")

    final = {}
    for sid, per_party in results.items():
        values = {v.value for v in per_party.values()}
        if len(values) != 1:
            raise RuntimeError(f"session {sid}: parties disagree on the result")
        final[sid] = next(iter(per_party.values()))
    return BatchResult(
        results=final,
        durations_ms=durations,
        failed=failed,
        batch_duration_ms=wall_ms,
        counters=cluster.counters.snapshot(),
        messages_by_round={},
        communication_rounds=batch.program.communication_rounds,
    )
