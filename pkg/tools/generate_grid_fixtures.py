#!/usr/bin/env python3
"""Generate (and freeze) the grid conformance fixture vectors.

Writes tests/fixtures/grid_vectors.csv: a deterministic set of points spread
over the sphere (including poles, the antimeridian, and cell-boundary-ish
jitter), each indexed at every resolution. The committed file is the source of
truth the `conformance` command checks against; regenerate only on a
deliberate grid change.
"""
from __future__ import annotations

import csv
import math
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from bierstar.geo import GeoPoint
from bierstar.geogrid import MAX_RESOLUTION, cell_index

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "grid_vectors.csv"


def fixture_points() -> list[GeoPoint]:
    pts = {
        GeoPoint(90.0, 0.0), GeoPoint(-90.0, 0.0),
        GeoPoint(0.0, 0.0), GeoPoint(0.0, 180.0),
        GeoPoint(48.8566, 2.3522), GeoPoint(-33.8688, 151.2093),
        GeoPoint(64.1466, -21.9426), GeoPoint(1.3521, 103.8198),
    }
    rng = random.Random(20240917)
    while len(pts) < 510:
        z = rng.uniform(-1.0, 1.0)
        lon = rng.uniform(-180.0, 180.0)
        pts.add(GeoPoint(math.degrees(math.asin(z)), lon))
    return sorted(pts)


def main() -> None:
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lat", "lon", "resolution", "expected_cell_index"])
        for p in fixture_points():
            for r in range(MAX_RESOLUTION + 1):
                w.writerow([f"{p.lat:.10f}", f"{p.lon:.10f}", r, cell_index(p, r).index])
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
