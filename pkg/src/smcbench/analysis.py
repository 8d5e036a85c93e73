"""Post-processing of benchmark output: linear fits and comparisons.

Plain ordinary-least-squares fits with mean squared error, an R^2 helper
for scaling-law checks, and comparison of fitted coefficients against the
shipped reference lines (hardware-specific, informational).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, fields
from importlib import resources

CSV_COLUMNS = [
    "n", "latency_ms", "rate_mbit", "loss", "pf", "sessions", "repetition",
    "duration_ms", "bytes_per_peer", "messages", "packets",
    "retransmissions", "failures", "predicted_ms",
]

_INT_FIELDS = {
    "n", "pf", "sessions", "repetition", "messages", "packets",
    "retransmissions", "failures",
}


@dataclass(frozen=True, slots=True)
class RunMetrics:
    """One measurement row: the scenario and what it cost."""

    n: int
    latency_ms: float
    rate_mbit: float
    loss: float
    pf: int
    sessions: int
    repetition: int
    duration_ms: float
    bytes_per_peer: float
    messages: int
    packets: int
    retransmissions: int
    failures: int
    predicted_ms: float

    def __post_init__(self):
        if self.duration_ms <= 0:
            raise ValueError("duration must be > 0")
        for name in ("messages", "packets", "retransmissions", "failures"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def csv_row(self):
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            out.append(f"{v:.6f}" if isinstance(v, float) else str(v))
        return out

    @classmethod
    def from_csv_row(cls, row):
        if len(row) != len(CSV_COLUMNS):
            raise ValueError(f"expected {len(CSV_COLUMNS)} columns, got {len(row)}")
        kwargs = {}
        for name, raw in zip(CSV_COLUMNS, row):
            kwargs[name] = int(raw) if name in _INT_FIELDS else float(raw)
        return cls(**kwargs)


def write_metrics_csv(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.csv_row())


def read_metrics_csv(path):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header: {header}")
        for row in reader:
            rows.append(RunMetrics.from_csv_row(row))
    return rows


@dataclass(frozen=True, slots=True)
class RegressionFit:
    slope: float
    intercept: float
    mse: float
    sample_count: int

    def __post_init__(self):
        if self.sample_count < 2:
            raise ValueError("a fit needs at least two samples")
        if self.mse < 0:
            raise ValueError("mse must be >= 0")

    def predict(self, x):
        return self.intercept + self.slope * x


def fit_linear(points):
    """Least-squares line through (x, y) pairs; mse is the mean squared
    residual. Degenerate inputs (fewer than two points, or all x equal)
    are rejected."""
    pts = list(points)
    if len(pts) < 2:
        raise ValueError("need at least two points")
    n = len(pts)
    mean_x = sum(x for x, _ in pts) / n
    mean_y = sum(y for _, y in pts) / n
    sxx = sum((x - mean_x) ** 2 for x, _ in pts)
    if sxx == 0:
        raise ValueError("all x values are identical")
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in pts)
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    mse = sum((y - (intercept + slope * x)) ** 2 for x, y in pts) / n
    return RegressionFit(slope, intercept, mse, n)


def r_squared(points):
    """Coefficient of determination of the least-squares line."""
    pts = list(points)
    fit = fit_linear(pts)
    mean_y = sum(y for _, y in pts) / len(pts)
    ss_tot = sum((y - mean_y) ** 2 for _, y in pts)
    if ss_tot == 0:
        return 1.0
    ss_res = fit.mse * len(pts)
    return 1.0 - ss_res / ss_tot


def compare_to_reference(fit, reference, tolerances):
    """Per-coefficient verdicts against a reference fit.

    tolerances maps coefficient name ('slope', 'intercept', 'mse') to the
    allowed absolute deviation; coefficients without a tolerance are
    reported but not judged.
    """
    verdicts = {}
    lines = []
    for name in ("slope", "intercept", "mse"):
        got = getattr(fit, name)
        want = getattr(reference, name)
        delta = abs(got - want)
        if name in tolerances:
            ok = delta <= tolerances[name]
            verdicts[name] = "within" if ok else "outside"
            lines.append(
                f"{name}: {got:.6g} vs reference {want:.6g} "
                f"(|delta| {delta:.3g} {'<=' if ok else '>'} {tolerances[name]:.3g})"
            )
        else:
            verdicts[name] = "informational"
            lines.append(f"{name}: {got:.6g} vs reference {want:.6g} (informational)")
    return {
        "verdicts": verdicts,
        "all_within": all(v != "outside" for v in verdicts.values()),
        "summary": "; ".join(lines),
    }


def load_reference_fits():
    """Shipped reference regression lines (hardware-specific, informational)."""
    text = resources.files("smcbench").joinpath("data/reference_fits.json").read_text()
    raw = json.loads(text)
    fits = {}
    for name, entry in raw["fits"].items():
        fits[name] = {
            "fit": RegressionFit(
                slope=entry["slope"], intercept=entry["intercept"],
                mse=entry["mse"], sample_count=entry.get("sample_count", 2),
            ),
            "x": entry.get("x", ""),
            "y": entry.get("y", ""),
            "unit_note": entry.get("unit_note", ""),
        }
    return {"note": raw.get("note", ""), "fits": fits}
