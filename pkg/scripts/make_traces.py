#!/usr/bin/env python3
"""Regenerate the bundled synthetic GPS traces.

Five seeded random walks (1200 points each, one point every 15 minutes)
around different city centers. Output lands in src/smcbench/data/traces/.
"""

import os
import random

CITIES = [
    ("trace_1.csv", 48.137, 11.575),
    ("trace_2.csv", 52.520, 13.405),
    ("trace_3.csv", 50.110, 8.682),
    ("trace_4.csv", 53.551, 9.994),
    ("trace_5.csv", 51.227, 6.773),
]

POINTS = 1200
INTERVAL_S = 900


def main():
    out_dir = os.path.join(
        os.path.dirname(__file__), "..", "src", "smcbench", "data", "traces"
    )
    os.makedirs(out_dir, exist_ok=True)
    for index, (name, lat, lon) in enumerate(CITIES):
        rng = random.Random(f"trace:{index}")
        ts = 1_500_000_000
        rows = ["timestamp,lat,lon"]
        for _ in range(POINTS):
            rows.append(f"{ts},{lat:.6f},{lon:.6f}")
            ts += INTERVAL_S
            lat += rng.gauss(0.0, 0.002)
            lon += rng.gauss(0.0, 0.003)
            lat = max(-89.9, min(89.9, lat))
            lon = max(-179.9, min(179.9, lon))
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(rows) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
