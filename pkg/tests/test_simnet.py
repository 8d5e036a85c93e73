import json
import random

import pytest

from smcbench.transport.params import (
    FRAME_OVERHEAD,
    LinkParams,
    Message,
    load_scenario,
    one_way_ms,
    transfer_time,
)
from smcbench.transport.simnet import (
    DeliveryFailedError,
    SimParams,
    SimulatedNetwork,
    combine_pending,
    lossy_transmit,
)

FAST = 1e15  # effectively serialization-free


def msg(sender, receiver, session=0, round_index=0, size=11):
    return Message(sender, receiver, session, round_index, b"x" * size)


def collecting_net(n, link, seed=0, handoff=0.0):
    net = SimulatedNetwork(
        n, link, seed=seed, params=SimParams(handoff_ms=handoff), record_log=True
    )
    deliveries = []
    for p in net.party_ids:
        net.register_party(p, lambda m, p=p: deliveries.append((net.now, p, m)))
    return net, deliveries


class TestTransferTime:
    def test_one_packet_costs_one_delay(self):
        link = LinkParams(one_way_latency_ms=50.0, rate_bit_s=FAST)
        assert transfer_time(100, link) == pytest.approx(50.0, rel=1e-9)

    def test_two_packets_cost_three_delays(self):
        link = LinkParams(one_way_latency_ms=50.0, rate_bit_s=FAST, mtu_payload=100)
        assert transfer_time(150, link) == pytest.approx(150.0, rel=1e-9)

    def test_serialization_at_one_mbit(self):
        link = LinkParams(one_way_latency_ms=0.0, rate_bit_s=1e6, header_overhead=54)
        assert transfer_time(1000, link) == pytest.approx(8.432)

    def test_size_must_be_positive(self):
        link = LinkParams(one_way_latency_ms=1.0)
        with pytest.raises(ValueError):
            transfer_time(0, link)


class TestLinkParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            LinkParams(one_way_latency_ms=-1.0)
        with pytest.raises(ValueError):
            LinkParams(one_way_latency_ms=0.0, rate_bit_s=0.0)
        with pytest.raises(ValueError):
            LinkParams(one_way_latency_ms=0.0, loss_prob=1.0)

    def test_configured_latency_is_rtt_additive(self):
        assert one_way_ms(16.0) == pytest.approx((0.18 + 16.0) / 2)
        link = LinkParams.for_scenario(added_rtt_ms=50.0)
        assert link.one_way_latency_ms == pytest.approx(25.09)

    def test_packetization(self):
        link = LinkParams(one_way_latency_ms=0.0, mtu_payload=1460, header_overhead=54)
        assert link.packet_sizes(100) == [154]
        assert link.packet_sizes(1461) == [1514, 55]


class TestMessage:
    def test_send_to_self_rejected(self):
        with pytest.raises(ValueError):
            msg(1, 1)

    def test_empty_payload_rejected(self):
        with pytest.raises(ValueError):
            Message(1, 2, 0, 0, b"")


class TestSendAndCombine:
    def test_counter_increments_per_send(self):
        net, _ = collecting_net(3, LinkParams(1.0, rate_bit_s=FAST))
        net.send(msg(1, 2))
        net.send(msg(1, 2))
        assert net.counters[1].messages_sent == 2

    def test_unknown_party_rejected(self):
        net, _ = collecting_net(3, LinkParams(1.0, rate_bit_s=FAST))
        with pytest.raises(ValueError):
            net.send(msg(1, 9))

    def test_same_session_messages_combine(self):
        link = LinkParams(1.0, rate_bit_s=FAST, mtu_payload=1460)
        net, deliveries = collecting_net(3, link)
        net.send(Message(1, 2, 0, 0, b"a" * 200))
        net.send(Message(1, 2, 0, 0, b"b" * 200))
        net.run_until_idle()
        assert len(deliveries) == 2
        assert net.counters[1].packets_sent == 1
        assert net.counters[1].combined_messages == 1
        assert net.counters[1].bytes_sent == FRAME_OVERHEAD + 400 + 54

    def test_no_combining_across_sessions(self):
        link = LinkParams(1.0, rate_bit_s=FAST)
        net, deliveries = collecting_net(3, link)
        net.send(Message(1, 2, 0, 0, b"a" * 200))
        net.send(Message(1, 2, 1, 0, b"b" * 200))
        net.run_until_idle()
        assert net.counters[1].packets_sent == 2
        assert net.counters[1].combined_messages == 0

    def test_single_message_passes_through(self):
        net, deliveries = collecting_net(3, LinkParams(1.0, rate_bit_s=FAST))
        net.send(msg(1, 2))
        net.run_until_idle()
        assert len(deliveries) == 1
        assert net.counters[1].packets_sent == 1

    def test_combine_pending_grouping(self):
        msgs = [
            Message(1, 2, 0, 0, b"a"),
            Message(1, 2, 1, 0, b"b"),
            Message(1, 2, 0, 0, b"c"),
        ]
        groups = combine_pending(msgs)
        assert [len(g) for g in groups] == [2, 1]
        assert [m.payload for m in groups[0]] == [b"a", b"c"]


class TestLossyTransmit:
    def test_no_loss_single_attempt(self):
        link = LinkParams(1.0, loss_prob=0.0)
        assert lossy_transmit(100, link, random.Random(1)) == 1

    def test_mean_attempts_geometric(self):
        link = LinkParams(1.0, loss_prob=0.10)
        rng = random.Random(99)
        attempts = [lossy_transmit(100, link, rng) for _ in range(10_000)]
        mean = sum(attempts) / len(attempts)
        assert abs(mean - 1 / 0.9) / (1 / 0.9) < 0.05

    def test_reproducible_sequence(self):
        link = LinkParams(1.0, loss_prob=0.5)
        a = [lossy_transmit(100, link, random.Random(7)) for _ in range(1)]
        b = [lossy_transmit(100, link, random.Random(7)) for _ in range(1)]
        assert a == b

    def test_cap_raises(self):
        link = LinkParams(1.0, loss_prob=0.999999)
        with pytest.raises(DeliveryFailedError):
            lossy_transmit(100, link, random.Random(3), max_attempts=10)


class TestEventLoop:
    def test_idle_queue_returns_zero(self):
        net, _ = collecting_net(3, LinkParams(1.0, rate_bit_s=FAST))
        assert net.run_until_idle() == 0.0

    def test_single_message_final_time(self):
        net, deliveries = collecting_net(2, LinkParams(10.0, rate_bit_s=FAST))
        net.send(msg(1, 2))
        final = net.run_until_idle()
        assert final == pytest.approx(10.0, rel=1e-6)
        assert deliveries[0][0] == pytest.approx(10.0, rel=1e-6)

    def test_determinism_identical_logs(self):
        def run():
            link = LinkParams(5.0, rate_bit_s=1e8, loss_prob=0.2)
            net, _ = collecting_net(3, link, seed=42)
            for k in range(20):
                net.send(msg(1 + k % 2, 3, session=k % 4, round_index=k))
            net.run_until_idle()
            return net.event_log, net.counters.as_dict()

        log_a, counters_a = run()
        log_b, counters_b = run()
        assert log_a == log_b
        assert counters_a == counters_b


class TestLossBehavior:
    def test_single_loss_delays_by_retransmit_timeout(self):
        # first transmission lost, second succeeds: delivery at (w + L) + RTO
        link = LinkParams(10.0, rate_bit_s=FAST, loss_prob=0.5)
        net, deliveries = collecting_net(2, link)

        class Rigged:
            def __init__(self):
                self.draws = [0.0]  # first draw below loss_prob: lost

            def random(self):
                return self.draws.pop(0) if self.draws else 1.0

        net._rng = Rigged()
        net.send(msg(1, 2))
        net.run_until_idle()
        rto = 2 * 10.0 + SimParams().rto_extra_ms
        assert deliveries[0][0] == pytest.approx(10.0 + rto, rel=1e-6)
        assert net.counters[1].retransmissions == 1
        assert net.counters[1].packets_sent == 2

    def test_loss_preserves_delivered_payload(self):
        def run(loss, seed=5):
            link = LinkParams(2.0, rate_bit_s=1e8, loss_prob=loss)
            net, deliveries = collecting_net(3, link, seed=seed)
            for k in range(50):
                net.send(msg(1 + k % 2, 3, session=k, round_index=0, size=40))
            net.run_until_idle()
            payload = sorted((p, m.session_id, m.payload) for _, p, m in deliveries)
            return payload, net.counters

        clean, clean_counters = run(0.0)
        lossy, lossy_counters = run(0.3)
        assert clean == lossy
        assert lossy_counters.total("packets_sent") > clean_counters.total("packets_sent")
        assert lossy_counters.total("bytes_sent") > clean_counters.total("bytes_sent")
        assert lossy_counters.total("messages_received") == clean_counters.total(
            "messages_received"
        )

    def test_conservation_sent_equals_received(self):
        link = LinkParams(1.0, rate_bit_s=1e8, loss_prob=0.25)
        net, _ = collecting_net(4, link, seed=9)
        rng = random.Random(1)
        for k in range(200):
            sender, receiver = rng.sample(net.party_ids, 2)
            net.send(msg(sender, receiver, session=k))
        net.run_until_idle()
        assert net.counters.total("messages_sent") == net.counters.total(
            "messages_received"
        )
        # no combining here, so at least one packet per message
        assert net.counters.total("packets_sent") >= net.counters.total(
            "messages_sent"
        )


class TestMaxSemantics:
    def test_round_completion_is_max_over_links(self):
        # heterogeneous links, one parallel exchange: every receiver's last
        # delivery is the slowest of its incoming transfers, not their sum
        rng = random.Random(31)
        for n in (3, 4, 5):
            parties = list(range(1, n + 1))
            links = {}
            for i in parties:
                for j in parties:
                    if i != j:
                        links[(i, j)] = LinkParams(
                            one_way_latency_ms=rng.uniform(1.0, 80.0),
                            rate_bit_s=1e9,
                        )
            net = SimulatedNetwork(n, links, params=SimParams(handoff_ms=0.0))
            last_delivery = {p: 0.0 for p in parties}
            for p in parties:
                net.register_party(
                    p,
                    lambda m, p=p: last_delivery.__setitem__(
                        p, max(last_delivery[p], net.now)
                    ),
                )
            size = 11
            for i in parties:
                for j in parties:
                    if i != j:
                        net.send(msg(i, j, size=size))
            net.run_until_idle()
            wire = FRAME_OVERHEAD + size
            for p in parties:
                expected = max(
                    transfer_time(wire, links[(q, p)]) for q in parties if q != p
                )
                assert last_delivery[p] == pytest.approx(expected, rel=1e-9)

    def test_two_links_barrier_at_thirty_not_forty(self):
        links = {
            (2, 1): LinkParams(10.0, rate_bit_s=FAST),
            (3, 1): LinkParams(30.0, rate_bit_s=FAST),
            (1, 2): LinkParams(10.0, rate_bit_s=FAST),
            (1, 3): LinkParams(30.0, rate_bit_s=FAST),
            (2, 3): LinkParams(10.0, rate_bit_s=FAST),
            (3, 2): LinkParams(10.0, rate_bit_s=FAST),
        }
        net = SimulatedNetwork(3, links, params=SimParams(handoff_ms=0.0))
        times = []
        net.register_party(1, lambda m: times.append(net.now))
        net.send(msg(2, 1))
        net.send(msg(3, 1))
        net.run_until_idle()
        assert max(times) == pytest.approx(30.0, rel=1e-9)


class TestSequencedRound:
    def test_sender_turns_are_serialized_by_acks(self):
        ell = 10.0
        link = LinkParams(ell, rate_bit_s=FAST)
        net, deliveries = collecting_net(3, link)
        for i in net.party_ids:
            for j in net.party_ids:
                if i != j:
                    net.send(msg(i, j, round_index=0), sequenced=True)
        net.run_until_idle()
        by_sender = {}
        for at, _, m in deliveries:
            by_sender.setdefault(m.sender, []).append(at)
        assert max(by_sender[1]) == pytest.approx(ell, rel=1e-6)
        assert max(by_sender[2]) == pytest.approx(3 * ell, rel=1e-6)
        assert max(by_sender[3]) == pytest.approx(5 * ell, rel=1e-6)


class TestScenarioLoading:
    def test_from_dict(self):
        peers, link = load_scenario(
            {"peers": 5, "latency_ms": 50, "rate_mbit": 10, "loss": 0.05}
        )
        assert peers == 5
        assert link.one_way_latency_ms == pytest.approx(25.09)
        assert link.rate_bit_s == 10e6
        assert link.loss_prob == 0.05

    def test_from_json_file(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({"peers": 3, "latency_ms": 16, "mtu": 500, "header": 40}))
        peers, link = load_scenario(str(path))
        assert peers == 3
        assert link.mtu_payload == 500
        assert link.header_overhead == 40

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError):
            load_scenario({"peers": 3, "jitter": 1})
