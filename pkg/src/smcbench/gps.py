"""GPS trace loading and the distance-averaging workload inputs.

Each party's input stream is the great-circle distance between successive
points of its trace, encoded as centimeter fixed-point field elements.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

from .field import FieldElement

EARTH_RADIUS_M = 6_371_000.0
CENTIMETER_SCALE = 100


class TraceError(ValueError):
    """Unusable trace input (empty file, no valid rows, too few points)."""


@dataclass(frozen=True, slots=True)
class GpsTrace:
    """An ordered GPS trace: (timestamp_s, lat_deg, lon_deg) tuples."""

    name: str
    points: tuple

    def __len__(self):
        return len(self.points)


def haversine_m(lat1, lon1, lat2, lon2):
    """Great-circle distance in meters on a sphere of the earth's radius."""
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(a)))


def distances(trace):
    """Distances in meters between successive trace points."""
    if len(trace) < 2:
        raise TraceError(f"{trace.name}: need at least two points")
    out = []
    pts = trace.points
    for (_, lat1, lon1), (_, lat2, lon2) in zip(pts, pts[1:]):
        out.append(haversine_m(lat1, lon1, lat2, lon2))
    return out


def encode_distance(meters, modulus, *, peers, sessions):
    """Centimeter fixed-point encoding with an overflow safety bound.

    The bound keeps the running sum of `peers` contributions over `sessions`
    executions below the modulus: meters < p / (100 * peers * sessions).
    Rounds half away from zero.
    """
    if meters < 0:
        raise ValueError("distances are nonnegative")
    limit = modulus.p / (CENTIMETER_SCALE * peers * sessions)
    if meters >= limit:
        raise ValueError(
            f"distance {meters} m exceeds the overflow bound {limit:.3f} m "
            f"for {peers} peers and {sessions} sessions"
        )
    centimeters = math.floor(meters * CENTIMETER_SCALE + 0.5)
    return FieldElement(centimeters, modulus)


def _parse_row(row, lineno):
    if len(row) != 3:
        raise ValueError(f"line {lineno}: expected 3 columns, got {len(row)}")
    ts, lat, lon = float(row[0]), float(row[1]), float(row[2])
    if not -90.0 <= lat <= 90.0:
        raise ValueError(f"line {lineno}: latitude {lat} outside [-90, 90]")
    if not -180.0 <= lon <= 180.0:
        raise ValueError(f"line {lineno}: longitude {lon} outside [-180, 180]")
    return ts, lat, lon


def load_trace_file(path):
    """One trace from a CSV of timestamp,lat,lon rows.

    A leading header row is tolerated. Malformed rows are skipped and
    reported with their line numbers; a file without valid rows is an error.
    """
    points = []
    rejected = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (lineno == 1 and not _is_numeric(row[0])):
                continue
            try:
                ts, lat, lon = _parse_row(row, lineno)
            except ValueError as exc:
                rejected.append(str(exc))
                continue
            if points and ts <= points[-1][0]:
                rejected.append(f"line {lineno}: timestamp {ts} not increasing")
                continue
            points.append((ts, lat, lon))
    if not points:
        raise TraceError(f"{path}: no valid rows ({len(rejected)} rejected)")
    trace = GpsTrace(os.path.basename(path), tuple(points))
    return trace, rejected


def _is_numeric(text):
    try:
        float(text)
        return True
    except ValueError:
        return False


def load_traces(directory, peers):
    """One trace per party from all CSV files of a directory.

    With fewer trace files than peers the traces repeat round-robin, so
    every party gets an input list.
    """
    names = sorted(
        f for f in os.listdir(directory) if f.lower().endswith(".csv")
    )
    if not names:
        raise TraceError(f"{directory}: no trace files")
    loaded = [load_trace_file(os.path.join(directory, name))[0] for name in names]
    return [loaded[i % len(loaded)] for i in range(peers)]


def bundled_trace_dir():
    """Directory of the five synthetic traces shipped with the package."""
    return os.path.join(os.path.dirname(__file__), "data", "traces")
