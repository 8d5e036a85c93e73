"""Parameter sweeps: the distance-averaging workload over the engine.

A sweep runs the cartesian product of peer counts and network impairments.
In every cell, `sessions` protocol executions run per repetition: each
device party contributes its distance since the last session, the
statistics server (party n) carries the running sum, and the average is
taken outside the protocol by dividing the opened sum by the number of
submissions. Results append to a CSV, one row per repetition.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field as dataclass_field

from . import costmodel, gps
from .analysis import (
    RunMetrics,
    compare_to_reference,
    fit_linear,
    load_reference_fits,
    r_squared,
    write_metrics_csv,
)
from .engine import DEFAULT_EXECUTOR_SLOTS, SessionBatch, run_batch
from .field import (
    DEFAULT_MODULUS,
    RECOMMENDED_MIN_PRIME,
    FieldElement,
    PrimeModulus,
)
from .programs import build_product_program, build_sum_program
from .sharing import ThresholdConfig, share_wire_size
from .transport.params import FRAME_OVERHEAD, LinkParams
from .transport.simnet import SimParams, SimulatedNetwork

# One-parameter-at-a-time axis values mirroring the reference measurements.
REFERENCE_AXES = {
    "peers": [3, 5, 7, 9, 11, 13, 15],
    "latency_ms": [0.0, 16.0, 50.0, 200.0, 500.0],
    "rate_mbit": [1.0, 10.0, 100.0, 1000.0],
    "loss": [round(0.01 * k, 2) for k in range(0, 11)],
    "pf": [1, 5, 10, 20, 50, 100, 200, 500, 1000],
}

MODES = ("simulate", "sockets")
PROTOCOLS = ("sum", "product")


class ConfigError(ValueError):
    """Unusable sweep configuration."""


@dataclass(slots=True)
class SweepConfig:
    peers: list = dataclass_field(default_factory=lambda: [3])
    latency_ms: list = dataclass_field(default_factory=lambda: [0.0])
    rate_mbit: list = dataclass_field(default_factory=lambda: [1000.0])
    loss: list = dataclass_field(default_factory=lambda: [0.0])
    pf: list = dataclass_field(default_factory=lambda: [1])
    sessions: int = 1000
    repetitions: int = 50
    seed: int = 0
    mode: str = "simulate"
    protocol: str = "sum"
    traces_dir: str | None = None
    out_csv: str = "results.csv"
    report_json: str | None = None
    executor_slots: int = DEFAULT_EXECUTOR_SLOTS
    modulus_decimal: str | None = None

    def __post_init__(self):
        for name in ("peers", "latency_ms", "rate_mbit", "loss", "pf"):
            values = getattr(self, name)
            if not values:
                raise ConfigError(f"{name} must not be empty")
        if any(n < 3 for n in self.peers):
            raise ConfigError("need at least 3 peers")
        if self.sessions < 1 or self.repetitions < 1:
            raise ConfigError("sessions and repetitions must be >= 1")
        if self.sessions < max(self.pf):
            raise ConfigError("sessions must be >= the largest pf")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}")

    def modulus(self):
        if self.modulus_decimal:
            modulus = PrimeModulus.from_decimal(self.modulus_decimal)
            if modulus.p <= RECOMMENDED_MIN_PRIME:
                raise ConfigError(
                    "benchmark moduli must exceed 2^32 so encoded running "
                    "sums cannot wrap"
                )
            return modulus
        return DEFAULT_MODULUS

    def cells(self):
        combos = itertools.product(
            self.peers, self.latency_ms, self.rate_mbit, self.loss, self.pf
        )
        return [
            {"n": n, "latency_ms": lat, "rate_mbit": rate, "loss": loss, "pf": pf}
            for n, lat, rate, loss, pf in combos
        ]


@dataclass(slots=True)
class CellOutcome:
    """Per-repetition bookkeeping next to the CSV row."""

    cell: dict
    repetition: int
    running_sum_cm: int
    oracle_sum_cm: int
    submissions: int
    failures: int

    @property
    def average_m(self):
        if self.submissions == 0:
            return 0.0
        return self.running_sum_cm / self.submissions / gps.CENTIMETER_SCALE


def _distance_streams(traces, sessions, modulus, peers):
    """Encoded centimeter distances per party, cycled to session count."""
    streams = []
    for trace in traces:
        meters = gps.distances(trace)
        encoded = [
            gps.encode_distance(m, modulus, peers=peers, sessions=sessions)
            for m in meters
        ]
        streams.append([encoded[k % len(encoded)] for k in range(sessions)])
    return streams


def _predict_ms(cfg, cell, modulus, link):
    unit_bytes = FRAME_OVERHEAD + share_wire_size(modulus)
    handoff = SimParams().handoff_ms
    if cfg.protocol == "sum":
        session = costmodel.predict_sum_session_ms(
            cell["n"], link, unit_bytes=unit_bytes, handoff_ms=handoff
        )
    else:
        session = costmodel.predict_product_session_ms(
            cell["n"], link, unit_bytes=unit_bytes, handoff_ms=handoff
        )
    return costmodel.predict_batch_ms(
        session, cfg.sessions, cell["pf"], cfg.executor_slots
    )


def _run_cell_simulated(cfg, cell, rep, modulus, streams):
    n = cell["n"]
    tcfg = ThresholdConfig.for_parties(n)
    program = (
        build_sum_program(tcfg) if cfg.protocol == "sum" else build_product_program(tcfg)
    )
    link = LinkParams.for_scenario(
        added_rtt_ms=cell["latency_ms"], rate_mbit=cell["rate_mbit"], loss=cell["loss"]
    )
    seed = f"{cfg.seed}:{n}:{cell['latency_ms']}:{cell['rate_mbit']}:{cell['loss']}:{cell['pf']}:{rep}"
    net = SimulatedNetwork(n, link, seed=seed)

    chained = cfg.protocol == "sum" and cell["pf"] == 1
    running = 0
    oracle = 0
    failures = 0
    submissions = 0
    device_streams = {p: streams[p - 1] for p in range(1, n + 1)}

    if chained:
        # The statistics server feeds its running sum into every session.
        duration = 0.0
        for k in range(cfg.sessions):
            inputs = {
                p: device_streams[p][k] for p in range(1, n)
            }
            inputs[n] = FieldElement(running, modulus)
            batch = SessionBatch(tcfg, program, [inputs], pf=1)
            outcome = run_batch(
                batch, net, modulus=modulus, seed=f"{seed}:k{k}",
                executor_slots=cfg.executor_slots,
            )
            duration += outcome.batch_duration_ms
            if outcome.failed:
                failures += 1
            else:
                running = outcome.results[0].value
                oracle += sum(inputs[p].value for p in range(1, n))
                submissions += n - 1
        counters = net.counters
        messages = counters.total("messages_sent")
        packets = counters.total("packets_sent")
        retrans = counters.total("retransmissions")
        bytes_sent = counters.total("bytes_sent")
    else:
        # Parallel sessions are independent partial sums; the server inputs
        # zero and accumulates opened results afterwards.
        all_inputs = []
        for k in range(cfg.sessions):
            inputs = {p: device_streams[p][k] for p in range(1, n)}
            inputs[n] = (
                FieldElement(0, modulus)
                if cfg.protocol == "sum"
                else device_streams[n][k]
            )
            all_inputs.append(inputs)
        batch = SessionBatch(tcfg, program, all_inputs, pf=cell["pf"])
        outcome = run_batch(
            batch, net, modulus=modulus, seed=seed,
            executor_slots=cfg.executor_slots,
        )
        failures = outcome.failures
        if cfg.protocol == "sum":
            for sid, result in outcome.results.items():
                if result is None:
                    continue
                running = (running + result.value) % modulus.p
                oracle += sum(all_inputs[sid][p].value for p in range(1, n))
                submissions += n - 1
        duration = outcome.batch_duration_ms
        messages = outcome.total("messages_sent")
        packets = outcome.total("packets_sent")
        retrans = outcome.total("retransmissions")
        bytes_sent = outcome.total("bytes_sent")

    row = RunMetrics(
        n=n,
        latency_ms=cell["latency_ms"],
        rate_mbit=cell["rate_mbit"],
        loss=cell["loss"],
        pf=cell["pf"],
        sessions=cfg.sessions,
        repetition=rep,
        duration_ms=duration,
        bytes_per_peer=bytes_sent / n,
        messages=messages,
        packets=packets,
        retransmissions=retrans,
        failures=failures,
        predicted_ms=_predict_ms(cfg, cell, modulus, link),
    )
    outcome_info = CellOutcome(cell, rep, running, oracle, submissions, failures)
    return row, outcome_info


def _run_cell_sockets(cfg, cell, rep, modulus, streams):
    from .transport.sockets import SocketCluster

    n = cell["n"]
    tcfg = ThresholdConfig.for_parties(n)
    program = (
        build_sum_program(tcfg) if cfg.protocol == "sum" else build_product_program(tcfg)
    )
    all_inputs = []
    for k in range(cfg.sessions):
        inputs = {p: streams[p - 1][k] for p in range(1, n)}
        inputs[n] = (
            FieldElement(0, modulus) if cfg.protocol == "sum" else streams[n - 1][k]
        )
        all_inputs.append(inputs)
    with SocketCluster(range(1, n + 1)) as cluster:
        batch = SessionBatch(tcfg, program, all_inputs, pf=1)
        outcome = run_batch(
            batch, cluster, modulus=modulus, seed=f"{cfg.seed}:{n}:{rep}"
        )
    running = 0
    oracle = 0
    submissions = 0
    if cfg.protocol == "sum":
        for sid, result in outcome.results.items():
            if result is None:
                continue
            running = (running + result.value) % modulus.p
            oracle += sum(all_inputs[sid][p].value for p in range(1, n))
            submissions += n - 1
    link = LinkParams.for_scenario(rate_mbit=cell["rate_mbit"])
    row = RunMetrics(
        n=n,
        latency_ms=cell["latency_ms"],
        rate_mbit=cell["rate_mbit"],
        loss=cell["loss"],
        pf=cell["pf"],
        sessions=cfg.sessions,
        repetition=rep,
        duration_ms=max(outcome.batch_duration_ms, 1e-6),
        bytes_per_peer=outcome.total("bytes_sent") / n,
        messages=outcome.total("messages_sent"),
        packets=outcome.total("packets_sent"),
        retransmissions=outcome.total("retransmissions"),
        failures=outcome.failures,
        predicted_ms=_predict_ms(cfg, cell, modulus, link),
    )
    return row, CellOutcome(cell, rep, running, oracle, submissions, outcome.failures)


def _write_state(cfg, outcome_info):
    state_path = cfg.out_csv + ".state.json"
    state = {
        "cell": outcome_info.cell,
        "repetition": outcome_info.repetition,
        "running_sum_cm": outcome_info.running_sum_cm,
        "submissions": outcome_info.submissions,
        "average_m": outcome_info.average_m,
    }
    with open(state_path, "w", encoding="utf-8") as fh:
        json.dump(state, fh, indent=2)


def run_sweep(cfg):
    """Run every cell and repetition; returns (rows, outcomes, hard_failures).

    Session failures inside a cell are normal output (the failures column);
    hard failures are unexpected exceptions, recorded so the sweep can
    continue with the remaining cells.
    """
    modulus = cfg.modulus()
    traces_dir = cfg.traces_dir or gps.bundled_trace_dir()
    max_peers = max(cfg.peers)
    traces = gps.load_traces(traces_dir, max_peers)
    streams = _distance_streams(traces, cfg.sessions, modulus, max_peers)

    rows = []
    outcomes = []
    hard_failures = []
    for cell in cfg.cells():
        for rep in range(cfg.repetitions):
            try:
                if cfg.mode == "simulate":
                    row, info = _run_cell_simulated(cfg, cell, rep, modulus, streams)
                else:
                    row, info = _run_cell_sockets(cfg, cell, rep, modulus, streams)
            except Exception as exc:  # noqa: BLE001 - sweep must continue
                hard_failures.append({"cell": dict(cell), "repetition": rep, "error": str(exc)})
                continue
            rows.append(row)
            outcomes.append(info)
            _write_state(cfg, info)
    if cfg.out_csv:
        write_metrics_csv(rows, cfg.out_csv)
    return rows, outcomes, hard_failures


# -- reporting ---------------------------------------------------------------

_AXES = ("n", "latency_ms", "rate_mbit", "loss", "pf")


def _mean(values):
    values = list(values)
    return sum(values) / len(values)


def emit_report(rows, *, sessions_hint=None):
    """Per-axis linear fits, the TTP baseline and reference comparisons.

    For every axis with more than one distinct value (other parameters held
    at their smallest value), fits duration against the axis and, for the
    peer axis, bytes per peer against n.
    """
    if not rows:
        raise ValueError("no rows to report on")
    report = {"fits": {}, "ttp": {}, "reference": {}}
    reference = load_reference_fits()

    for axis in _AXES:
        values = sorted({getattr(r, axis) for r in rows})
        if len(values) < 2:
            continue
        others = [a for a in _AXES if a != axis]
        baseline = {a: min(getattr(r, a) for r in rows) for a in others}
        selected = [
            r for r in rows
            if all(getattr(r, a) == baseline[a] for a in others)
        ]
        by_x = {}
        for r in selected:
            by_x.setdefault(getattr(r, axis), []).append(r.duration_ms)
        if len(by_x) < 2:
            continue
        points = [(x, _mean(ds)) for x, ds in sorted(by_x.items())]
        fit = fit_linear(points)
        report["fits"][f"duration_ms_vs_{axis}"] = {
            "slope": fit.slope,
            "intercept": fit.intercept,
            "mse": fit.mse,
            "r_squared": r_squared(points),
            "points": points,
        }
        if axis == "n":
            byte_points = [
                (x, _mean(r.bytes_per_peer for r in selected if r.n == x))
                for x in sorted({r.n for r in selected})
            ]
            bfit = fit_linear(byte_points)
            report["fits"]["bytes_per_peer_vs_n"] = {
                "slope": bfit.slope,
                "intercept": bfit.intercept,
                "mse": bfit.mse,
                "r_squared": r_squared(byte_points),
                "points": byte_points,
            }
            scale = rows[0].sessions or (sessions_hint or 1)
            per_session = [(x, y / scale) for x, y in points]
            session_fit = fit_linear(per_session)
            ref = reference["fits"]["session_ms_vs_peers"]["fit"]
            report["reference"]["session_ms_vs_peers"] = compare_to_reference(
                session_fit, ref, tolerances={}
            )
        if axis == "latency_ms":
            baseline_n = baseline["n"]
            ttp_points = [
                (
                    lat,
                    costmodel.ttp_total_cost(
                        costmodel.TtpModel(
                            baseline_n,
                            upload_delay_ms=(lat / 2.0),
                            download_delay_ms=(lat / 2.0),
                        )
                    ),
                )
                for lat in values
            ]
            report["ttp"]["per_latency_ms"] = ttp_points
    # the TTP baseline does not move with the peer count
    ns = sorted({r.n for r in rows})
    report["ttp"]["per_peer_count"] = [
        (n, costmodel.ttp_total_cost(costmodel.TtpModel(n, 1.0, 1.0))) for n in ns
    ]
    return report


def report_text(report):
    lines = []
    for name, fit in report["fits"].items():
        lines.append(
            f"{name}: y = {fit['intercept']:.4f} + {fit['slope']:.4f} x "
            f"(mse {fit['mse']:.4g}, R^2 {fit['r_squared']:.4f})"
        )
    for name, cmp_result in report.get("reference", {}).items():
        lines.append(f"reference {name}: {cmp_result['summary']}")
    for name, pts in report.get("ttp", {}).items():
        lines.append(f"ttp {name}: " + ", ".join(f"({x:g}, {y:g})" for x, y in pts))
    return "\n".join(lines)
