"""Closed-form predictors of execution cost and traffic.

Two layers live here. The generic accounting identities: per-round
communication cost as the maximum over links, overall cost as the sum of
computation steps plus (m-1) equal communication rounds, per-phase message
counts, the trusted-third-party baseline, the per-execution latency interval
and the loss inflation factor. And the simulator-calibrated session
predictors, which apply the max-per-round semantics round by round, with the
input round's sender turns serialized; these are the predictions
cross-validated against simulated runs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

from .transport.params import transfer_time


@dataclass(frozen=True, slots=True)
class CostParams:
    """Inputs of the overall-cost estimate.

    comp_costs_ms holds one entry per computation step; a single
    comm_cost_ms is charged for each of the m-1 communication rounds
    between them.
    """

    n: int
    comp_costs_ms: tuple
    comm_cost_ms: float

    def __post_init__(self):
        if len(self.comp_costs_ms) < 1:
            raise ValueError("need at least one computation step")
        if self.comm_cost_ms < 0:
            raise ValueError("communication cost must be >= 0")

    @property
    def m(self):
        return len(self.comp_costs_ms)


def round_comm_cost(link_matrix):
    """Cost of one parallel round: the slowest ordered pair decides.

    link_matrix is either a dict {(k, l): ms} or a nested sequence with
    ignored (None or anything) diagonal entries.
    """
    if isinstance(link_matrix, dict):
        values = [v for (k, l), v in link_matrix.items() if k != l]
    else:
        values = [
            v
            for i, row in enumerate(link_matrix)
            for j, v in enumerate(row)
            if i != j and v is not None
        ]
    if not values:
        raise ValueError("link matrix has no off-diagonal entries")
    return max(values)


def total_cost(params):
    """Sum of all computation steps plus (m-1) equal communication rounds."""
    return sum(params.comp_costs_ms) + (params.m - 1) * params.comm_cost_ms


_PHASE_MESSAGES = {"close": True, "mul": True, "open": True, "add": False}


def phase_message_count(phase, n):
    """Messages of one phase: n^2 - n for close/mul/open, none for add."""
    if n < 2:
        raise ValueError("need at least two parties")
    try:
        communicates = _PHASE_MESSAGES[phase]
    except KeyError:
        raise ValueError(f"unknown phase {phase!r}") from None
    return n * n - n if communicates else 0


def product_message_total(n):
    """Messages of an n-input array multiplication: close + (n-1) reduction
    rounds + open, each exchanging n^2 - n messages; cubic overall."""
    if n < 2:
        raise ValueError("need at least two parties")
    return (n + 1) * (n * n - n)


@dataclass(frozen=True, slots=True)
class TtpModel:
    """Baseline where a trusted server collects inputs and returns results."""

    n: int
    upload_delay_ms: float
    download_delay_ms: float

    def __post_init__(self):
        if self.upload_delay_ms < 0 or self.download_delay_ms < 0:
            raise ValueError("delays must be >= 0")


def ttp_total_cost(model):
    """All inputs arrive within one delay, all results return within another;
    independent of the party count."""
    return model.upload_delay_ms + model.download_delay_ms


def latency_interval(n, network_latency_ms):
    """Per-execution duration interval (n*L, 3n*L) for configured latency L."""
    if n < 2:
        raise ValueError("need at least two parties")
    if network_latency_ms < 0:
        raise ValueError("latency must be >= 0")
    return (n * network_latency_ms, 3 * n * network_latency_ms)


def loss_inflation(p):
    """Expected transmissions per packet, 1 / (1 - p); hyperbolic in [0, 1)."""
    if not 0 <= p < 1:
        raise ValueError("loss probability must be in [0, 1)")
    return 1.0 / (1.0 - p)


# -- simulator-calibrated session predictors --------------------------------


def predict_sum_session_ms(n, link, *, unit_bytes, handoff_ms,
                           comp_cost_ms=0.0):
    """Expected duration of one sum-protocol session.

    Input round: n sender turns in sequence, each lasting until the turn's
    transmissions are acknowledged (delivery plus one more one-way trip);
    the final turn only needs to deliver. Output round: one parallel
    exchange, its cost the maximum link time plus the sender-side handoff
    staggering.
    """
    tt = transfer_time(unit_bytes, link)
    ell = link.one_way_latency_ms
    turn = tt + ell
    stagger = (n - 1) * handoff_ms
    close = stagger + (n - 1) * turn + tt
    open_phase = stagger + tt
    return close + open_phase + 2 * comp_cost_ms


def predict_product_session_ms(n, link, *, unit_bytes, handoff_ms,
                               comp_cost_ms=0.0):
    """Expected duration of one product-protocol session: the sequenced
    input round, n-1 parallel degree-reduction rounds, one parallel open."""
    tt = transfer_time(unit_bytes, link)
    ell = link.one_way_latency_ms
    stagger = (n - 1) * handoff_ms
    close = comp_cost_ms + stagger + (n - 1) * (tt + ell) + tt
    parallel_round = comp_cost_ms + stagger + tt
    return close + n * parallel_round


def naive_additive_session_ms(n, rounds, link, *, unit_bytes):
    """Didactic comparison: what rounds would cost if every message of a
    round were waited for one after the other instead of in parallel."""
    tt = transfer_time(unit_bytes, link)
    return rounds * (n * n - n) * tt


def predict_batch_ms(session_ms, sessions, pf, executor_slots):
    """Amortized batch duration: waves of min(pf, slots) concurrent sessions."""
    if sessions < 1:
        raise ValueError("need at least one session")
    concurrency = max(1, min(pf, executor_slots, sessions))
    waves = math.ceil(sessions / concurrency)
    return waves * session_ms


def measure_gate_costs_ms(cfg, modulus, rng, repeats=200):
    """Wall-clock micro-timings of the local gate functions on this host.

    Informational: predictions against the simulator use the configured
    deterministic computation costs, these measurements feed wall-clock
    estimates in reports.
    """
    from . import sharing
    from .field import random_element

    secret = random_element(rng, modulus)
    timings = {}

    begin = time.perf_counter()
    for _ in range(repeats):
        shares = sharing.share_secret(secret, cfg, rng)
    timings["share_secret"] = (time.perf_counter() - begin) / repeats * 1000.0

    begin = time.perf_counter()
    for _ in range(repeats):
        sharing.local_add(shares[0], shares[0])
    timings["local_add"] = (time.perf_counter() - begin) / repeats * 1000.0

    begin = time.perf_counter()
    for _ in range(repeats):
        sharing.local_mul_raw(shares[0], shares[0])
    timings["local_mul_raw"] = (time.perf_counter() - begin) / repeats * 1000.0

    begin = time.perf_counter()
    for _ in range(repeats):
        sharing.reconstruct(shares, cfg)
    timings["reconstruct"] = (time.perf_counter() - begin) / repeats * 1000.0
    return timings
