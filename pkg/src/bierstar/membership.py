"""User-layer group membership: serving-satellite assignment and the ingress
registry driven by join/leave/handover/refresh events.

Satellites stay stateless for transit; all membership state lives here (at the
ingress and, conceptually, at each terminal's serving satellite).
"""
from __future__ import annotations

import csv
import enum
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constants import EARTH_RADIUS_KM
from .errors import BierStarError, NoCoverage
from .geo import GeoPoint, geopoint_from_unit, unit3
from .orbit import SatId, Snapshot, coverage_angle_rad

DEFAULT_REFRESH_INTERVAL_S = 30.0
DEFAULT_TIMEOUT_S = 90.0


@dataclass(frozen=True)
class Terminal:
    """A ground terminal; either a fixed location or a time-indexed trajectory."""

    terminal_id: str
    location: GeoPoint
    trajectory: tuple[tuple[float, GeoPoint], ...] = ()

    def position_at(self, t: float) -> GeoPoint:
        if not self.trajectory:
            return self.location
        pos = self.trajectory[0][1]
        for ts, p in self.trajectory:
            if ts > t:
                break
            pos = p
        return pos


class EventKind(enum.Enum):
    JOIN = "join"
    LEAVE = "leave"
    HANDOVER = "handover"
    REFRESH = "refresh"


@dataclass(frozen=True)
class MembershipEvent:
    kind: EventKind
    group_id: int
    terminal_id: str
    sat: SatId | None = None  # required for JOIN and HANDOVER


@dataclass(frozen=True)
class MembershipRecord:
    terminal_id: str
    group_id: int
    serving_sat: SatId
    last_refresh_s: float


class IngressRegistry:
    """Group membership as seen by the ingress.

    Records expire `timeout_s` after their last refresh; a prune pass removes
    them. Leave/Refresh against an absent record is a counted no-op.
    """

    def __init__(self, refresh_interval_s: float = DEFAULT_REFRESH_INTERVAL_S,
                 timeout_s: float = DEFAULT_TIMEOUT_S):
        self.refresh_interval_s = refresh_interval_s
        self.timeout_s = timeout_s
        self._groups: dict[int, dict[str, MembershipRecord]] = {}
        self.warnings: dict[str, int] = {"leave_absent": 0, "refresh_absent": 0}

    def process_event(self, event: MembershipEvent, now: float) -> None:
        group = self._groups.setdefault(event.group_id, {})
        rec = group.get(event.terminal_id)
        if event.kind is EventKind.JOIN:
            if event.sat is None:
                raise BierStarError("join event needs a serving satellite")
            group[event.terminal_id] = MembershipRecord(
                event.terminal_id, event.group_id, event.sat, now
            )
        elif event.kind is EventKind.LEAVE:
            if rec is None:
                self.warnings["leave_absent"] += 1
            else:
                del group[event.terminal_id]
        elif event.kind is EventKind.HANDOVER:
            if event.sat is None:
                raise BierStarError("handover event needs the new serving satellite")
            if rec is None:
                self.warnings["refresh_absent"] += 1
                group[event.terminal_id] = MembershipRecord(
                    event.terminal_id, event.group_id, event.sat, now
                )
            else:
                group[event.terminal_id] = MembershipRecord(
                    rec.terminal_id, rec.group_id, event.sat, now
                )
        elif event.kind is EventKind.REFRESH:
            if rec is None:
                self.warnings["refresh_absent"] += 1
            else:
                group[event.terminal_id] = MembershipRecord(
                    rec.terminal_id, rec.group_id, rec.serving_sat, now
                )
        else:  # pragma: no cover
            raise BierStarError(f"unknown event kind {event.kind}")

    def _expired(self, rec: MembershipRecord, now: float) -> bool:
        return now - rec.last_refresh_s >= self.timeout_s

    def prune(self, now: float) -> int:
        """Drop expired records; returns how many were removed."""
        removed = 0
        for group in self._groups.values():
            stale = [tid for tid, rec in group.items() if self._expired(rec, now)]
            for tid in stale:
                del group[tid]
            removed += len(stale)
        return removed

    def active_destination_sats(self, group_id: int, now: float) -> set[SatId]:
        group = self._groups.get(group_id, {})
        return {rec.serving_sat for rec in group.values() if not self._expired(rec, now)}

    def records(self, group_id: int) -> dict[str, MembershipRecord]:
        return dict(self._groups.get(group_id, {}))

    def group_ids(self) -> list[int]:
        return sorted(self._groups)

    def terminal_count(self, group_id: int, now: float) -> int:
        group = self._groups.get(group_id, {})
        return sum(1 for rec in group.values() if not self._expired(rec, now))


# ---------------------------------------------------------------------------
# Serving-satellite assignment.
# ---------------------------------------------------------------------------


def _coverage_cosines(snapshot: Snapshot, elevation_mask_deg: float) -> np.ndarray:
    """cos of the max coverage angle, per satellite (shells may differ)."""
    cos_by_alt = {}
    out = np.empty(len(snapshot.sats))
    for i, alt in enumerate(snapshot.alt_km):
        c = cos_by_alt.get(alt)
        if c is None:
            c = math.cos(coverage_angle_rad(float(alt), elevation_mask_deg))
            cos_by_alt[alt] = c
        out[i] = c
    return out


def bulk_assign(units: np.ndarray, snapshot: Snapshot,
                elevation_mask_deg: float) -> list[SatId | None]:
    """Nearest covering satellite (by slant range) for each terminal unit
    vector; None where nothing clears the mask. Ties break on lowest SatId."""
    cov_cos = _coverage_cosines(snapshot, elevation_mask_deg)
    sat_ecef = snapshot.ecef_km
    term_ecef = units * EARTH_RADIUS_KM
    out: list[SatId | None] = []
    chunk = 512
    for lo in range(0, len(units), chunk):
        u = units[lo:lo + chunk]
        dots = u @ snapshot.units.T
        covered = dots >= cov_cos[None, :]
        diff = term_ecef[lo:lo + chunk][:, None, :] - sat_ecef[None, :, :]
        slant = np.einsum("ijk,ijk->ij", diff, diff)
        slant = np.where(covered, slant, np.inf)
        best = np.argmin(slant, axis=1)
        for row, b in enumerate(best):
            if math.isinf(slant[row, b]):
                out.append(None)
            else:
                out.append(snapshot.sats[b])
    return out


def assign_serving_satellite(point: GeoPoint, snapshot: Snapshot,
                             elevation_mask_deg: float = 25.0) -> SatId:
    """Nearest-policy assignment for a single terminal."""
    sat = bulk_assign(np.asarray([point.unit()]), snapshot, elevation_mask_deg)[0]
    if sat is None:
        raise NoCoverage(f"no satellite covers {point} at mask {elevation_mask_deg} deg")
    return sat


# ---------------------------------------------------------------------------
# Terminal populations: synthetic generators and CSV ingestion.
# ---------------------------------------------------------------------------


def _offset_point(u, dx_km: float, dy_km: float) -> GeoPoint:
    """Displace a unit vector by tangent-plane offsets (east, north), in km."""
    east = (-u[1], u[0], 0.0)
    n = math.sqrt(east[0] ** 2 + east[1] ** 2)
    if n < 1e-12:  # at a pole any tangent direction works
        east = (1.0, 0.0, 0.0)
        n = 1.0
    east = (east[0] / n, east[1] / n, 0.0)
    north = (
        u[1] * east[2] - u[2] * east[1],
        u[2] * east[0] - u[0] * east[2],
        u[0] * east[1] - u[1] * east[0],
    )
    ax = dx_km / EARTH_RADIUS_KM
    ay = dy_km / EARTH_RADIUS_KM
    v = (
        u[0] + ax * east[0] + ay * north[0],
        u[1] + ax * east[1] + ay * north[1],
        u[2] + ax * east[2] + ay * north[2],
    )
    return geopoint_from_unit(v)


def generate_uniform_sphere(count: int, rng: random.Random) -> list[Terminal]:
    out = []
    for i in range(count):
        z = rng.uniform(-1.0, 1.0)
        lon = rng.uniform(-180.0, 180.0)
        lat = math.degrees(math.asin(z))
        out.append(Terminal(f"u{i}", GeoPoint(lat, lon)))
    return out


def generate_clustered(count: int, centers: list[GeoPoint], sigma_km: float,
                       rng: random.Random) -> list[Terminal]:
    """Gaussian blobs around the given centers, round-robin."""
    if not centers:
        raise BierStarError("clustered generator needs at least one center")
    out = []
    for i in range(count):
        c = centers[i % len(centers)]
        p = _offset_point(c.unit(), rng.gauss(0.0, sigma_km), rng.gauss(0.0, sigma_km))
        out.append(Terminal(f"c{i}", p))
    return out


def generate_corridor(count: int, start: GeoPoint, end: GeoPoint, width_km: float,
                      rng: random.Random) -> list[Terminal]:
    """A great-circle band between two endpoints, like a flight route."""
    a = start.unit()
    b = end.unit()
    ang = math.acos(max(-1.0, min(1.0, sum(x * y for x, y in zip(a, b)))))
    if ang < 1e-9:
        raise BierStarError("corridor endpoints coincide")
    out = []
    for i in range(count):
        f = rng.random()
        sa = math.sin((1.0 - f) * ang) / math.sin(ang)
        sb = math.sin(f * ang) / math.sin(ang)
        u = unit3((a[0] * sa + b[0] * sb, a[1] * sa + b[1] * sb, a[2] * sa + b[2] * sb))
        p = _offset_point(u, rng.gauss(0.0, width_km), rng.gauss(0.0, width_km))
        out.append(Terminal(f"t{i}", p))
    return out


def load_terminals_csv(path: str | Path) -> list[Terminal]:
    """Read `terminal_id,lat,lon[,time_s]`; repeated ids build a trajectory."""
    samples: dict[str, list[tuple[float, GeoPoint]]] = {}
    order: list[str] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"terminal_id", "lat", "lon"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise BierStarError(f"terminal CSV needs columns {sorted(required)}")
        has_time = "time_s" in reader.fieldnames
        for row in reader:
            tid = row["terminal_id"]
            if tid not in samples:
                samples[tid] = []
                order.append(tid)
            t = float(row["time_s"]) if has_time and row.get("time_s") else 0.0
            samples[tid].append((t, GeoPoint(float(row["lat"]), float(row["lon"]))))
    out = []
    for tid in order:
        traj = sorted(samples[tid], key=lambda s: s[0])
        if len(traj) == 1:
            out.append(Terminal(tid, traj[0][1]))
        else:
            out.append(Terminal(tid, traj[0][1], tuple(traj)))
    return out


GENERATORS = {
    "uniform-sphere": generate_uniform_sphere,
    "clustered": generate_clustered,
    "corridor": generate_corridor,
}
