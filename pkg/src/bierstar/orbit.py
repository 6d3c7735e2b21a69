"""Walker constellations: generation, circular-orbit propagation, +grid ISLs.

Orbits are circular and Keplerian; Earth rotation is applied so ground tracks
precess realistically. A Snapshot freezes satellite positions and the ISL
graph at one instant and is immutable afterwards.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .constants import EARTH_RADIUS_KM, MU_EARTH, SIDEREAL_DAY_S
from .errors import BierStarError
from .geo import GeoPoint, geopoint_from_unit


class Pattern(enum.Enum):
    STAR = "star"
    DELTA = "delta"


@dataclass(frozen=True)
class ShellSpec:
    """One constellation shell: geometry shared by planes x sats_per_plane."""

    shell_id: int
    altitude_km: float
    inclination_deg: float
    planes: int
    sats_per_plane: int
    phasing_f: int = 0
    pattern: Pattern = Pattern.DELTA

    def __post_init__(self):
        problems = []
        if self.planes < 1:
            problems.append(f"planes must be >= 1, got {self.planes}")
        if self.sats_per_plane < 1:
            problems.append(f"sats_per_plane must be >= 1, got {self.sats_per_plane}")
        if not 0.0 <= self.inclination_deg <= 180.0:
            problems.append(f"inclination {self.inclination_deg} outside [0, 180]")
        if self.altitude_km <= 0:
            problems.append(f"altitude {self.altitude_km} must be positive")
        if self.planes >= 1 and not 0 <= self.phasing_f < max(1, self.planes):
            problems.append(f"phasing_f {self.phasing_f} outside [0, {self.planes})")
        if not 0 <= self.shell_id < 16:
            problems.append(f"shell_id {self.shell_id} outside 0..15 (4-bit header field)")
        if problems:
            raise BierStarError("; ".join(problems))

    @property
    def size(self) -> int:
        return self.planes * self.sats_per_plane

    @property
    def period_s(self) -> float:
        a = EARTH_RADIUS_KM + self.altitude_km
        return 2.0 * math.pi * math.sqrt(a ** 3 / MU_EARTH)


@dataclass(frozen=True, order=True)
class SatId:
    shell_id: int
    plane: int
    slot: int

    def __str__(self):
        return f"{self.shell_id}-{self.plane}-{self.slot}"

    @classmethod
    def parse(cls, text: str) -> "SatId":
        shell, plane, slot = (int(p) for p in text.split("-"))
        return cls(shell, plane, slot)


@dataclass(frozen=True)
class Constellation:
    shells: tuple[ShellSpec, ...]

    def __post_init__(self):
        if not self.shells:
            raise BierStarError("constellation needs at least one shell")
        ids = [s.shell_id for s in self.shells]
        if len(set(ids)) != len(ids):
            raise BierStarError(f"duplicate shell ids in {ids}")

    @property
    def size(self) -> int:
        return sum(s.size for s in self.shells)

    def shell(self, shell_id: int) -> ShellSpec:
        for s in self.shells:
            if s.shell_id == shell_id:
                return s
        raise KeyError(shell_id)

    def sat_ids(self) -> list[SatId]:
        out = []
        for s in self.shells:
            for p in range(s.planes):
                for k in range(s.sats_per_plane):
                    out.append(SatId(s.shell_id, p, k))
        return out


def build_walker(spec: ShellSpec) -> Constellation:
    """Single-shell Walker constellation (star spreads nodes over 180 degrees,
    delta over 360) with phase offset 360*F/(planes*sats_per_plane) degrees."""
    return Constellation((spec,))


def _shell_units_at(spec: ShellSpec, t: float) -> np.ndarray:
    """Earth-fixed unit vectors of every satellite of a shell at time t,
    ordered (plane, slot) row-major."""
    planes = spec.planes
    slots = spec.sats_per_plane
    node_spread = 180.0 if spec.pattern is Pattern.STAR else 360.0
    p_idx = np.repeat(np.arange(planes), slots)
    s_idx = np.tile(np.arange(slots), planes)

    raan = np.radians(node_spread * p_idx / planes)
    phase0 = np.radians(360.0 * s_idx / slots + 360.0 * spec.phasing_f * p_idx / (planes * slots))
    nu = phase0 + 2.0 * math.pi * t / spec.period_s
    inc = math.radians(spec.inclination_deg)

    cos_nu, sin_nu = np.cos(nu), np.sin(nu)
    cos_om, sin_om = np.cos(raan), np.sin(raan)
    ci, si = math.cos(inc), math.sin(inc)

    x_eci = cos_nu * cos_om - sin_nu * ci * sin_om
    y_eci = cos_nu * sin_om + sin_nu * ci * cos_om
    z_eci = sin_nu * si

    theta = 2.0 * math.pi * t / SIDEREAL_DAY_S
    ct, st = math.cos(theta), math.sin(theta)
    x = x_eci * ct + y_eci * st
    y = -x_eci * st + y_eci * ct
    return np.column_stack([x, y, z_eci])


class Snapshot:
    """Satellite positions plus the ISL graph at one epoch. Immutable."""

    def __init__(self, constellation: Constellation, time_s: float):
        self.constellation = constellation
        self.time_s = float(time_s)
        self.sats: list[SatId] = constellation.sat_ids()
        self.sat_pos = {}
        units = []
        alts = []
        for shell in constellation.shells:
            u = _shell_units_at(shell, self.time_s)
            units.append(u)
            alts.append(np.full(shell.size, shell.altitude_km))
        self.units = np.vstack(units)
        self.alt_km = np.concatenate(alts)
        self.ecef_km = self.units * (EARTH_RADIUS_KM + self.alt_km)[:, None]
        self._index = {s: i for i, s in enumerate(self.sats)}
        self.edges = _plus_grid_edges(self)
        adj: dict[SatId, list[tuple[SatId, float]]] = {s: [] for s in self.sats}
        for a, b, w in self.edges:
            adj[a].append((b, w))
            adj[b].append((a, w))
        self.adjacency = {s: tuple(sorted(n)) for s, n in adj.items()}

    def index_of(self, sat: SatId) -> int:
        return self._index[sat]

    def unit_of(self, sat: SatId) -> tuple[float, float, float]:
        return tuple(self.units[self._index[sat]])

    def ecef_of(self, sat: SatId) -> tuple[float, float, float]:
        return tuple(self.ecef_km[self._index[sat]])

    def subpoint(self, sat: SatId) -> GeoPoint:
        return geopoint_from_unit(self.unit_of(sat))

    def altitude_of(self, sat: SatId) -> float:
        return float(self.alt_km[self._index[sat]])

    def neighbors_of(self, sat: SatId) -> tuple[tuple[SatId, float], ...]:
        return self.adjacency[sat]

    def is_connected(self) -> bool:
        if not self.sats:
            return True
        seen = {self.sats[0]}
        stack = [self.sats[0]]
        while stack:
            for nbr, _ in self.adjacency[stack.pop()]:
                if nbr not in seen:
                    seen.add(nbr)
                    stack.append(nbr)
        return len(seen) == len(self.sats)


def propagate(constellation: Constellation, t: float) -> Snapshot:
    """Snapshot at `t` seconds after epoch; deterministic in (spec, t)."""
    if t < 0:
        raise BierStarError(f"time {t} must be >= 0")
    return Snapshot(constellation, t)


def _plus_grid_edges(snap: Snapshot) -> list[tuple[SatId, SatId, float]]:
    """+grid wiring: slot+-1 in-plane (ring) and same slot in plane+-1; star
    shells omit the seam link between the first and last plane."""
    pairs: set[tuple[SatId, SatId]] = set()
    for shell in snap.constellation.shells:
        planes, slots = shell.planes, shell.sats_per_plane
        for p in range(planes):
            for k in range(slots):
                if slots > 1:
                    a, b = SatId(shell.shell_id, p, k), SatId(shell.shell_id, p, (k + 1) % slots)
                    if a != b:
                        pairs.add((a, b) if a < b else (b, a))
                if planes > 1:
                    q = p + 1
                    if q == planes:
                        if shell.pattern is Pattern.STAR:
                            continue
                        q = 0
                    a, b = SatId(shell.shell_id, p, k), SatId(shell.shell_id, q, k)
                    if a != b:
                        pairs.add((a, b) if a < b else (b, a))
    edges = []
    for a, b in sorted(pairs):
        d = snap.ecef_km[snap.index_of(a)] - snap.ecef_km[snap.index_of(b)]
        edges.append((a, b, float(np.linalg.norm(d))))
    return edges


def plus_grid_isls(constellation: Constellation, t: float) -> list[tuple[SatId, SatId, float]]:
    """Edge set of the +grid ISL topology at time t (weights in chord km)."""
    return propagate(constellation, t).edges


# ---------------------------------------------------------------------------
# Coverage geometry.
# ---------------------------------------------------------------------------


def coverage_angle_rad(altitude_km: float, elevation_mask_deg: float) -> float:
    """Max central angle between sub-satellite point and a coverable terminal."""
    mask = math.radians(elevation_mask_deg)
    ratio = EARTH_RADIUS_KM * math.cos(mask) / (EARTH_RADIUS_KM + altitude_km)
    return math.acos(ratio) - mask


def coverage_radius_km(altitude_km: float, elevation_mask_deg: float) -> float:
    return EARTH_RADIUS_KM * coverage_angle_rad(altitude_km, elevation_mask_deg)


def serving_candidates(sat: SatId, snapshot: Snapshot, elevation_mask_deg: float):
    """Predicate over GeoPoint: can this satellite serve that terminal?"""
    gamma = coverage_angle_rad(snapshot.altitude_of(sat), elevation_mask_deg)
    cos_gamma = math.cos(gamma)
    su = snapshot.unit_of(sat)

    def coverable(p: GeoPoint) -> bool:
        u = p.unit()
        return su[0] * u[0] + su[1] * u[1] + su[2] * u[2] >= cos_gamma

    return coverable


def snapshot_to_rows(snap: Snapshot) -> list[dict]:
    """CSV rows `sat_id,time_s,lat,lon,alt_km` for the export interface."""
    rows = []
    for sat in snap.sats:
        gp = snap.subpoint(sat)
        rows.append(
            {
                "sat_id": str(sat),
                "time_s": snap.time_s,
                "lat": round(gp.lat, 6),
                "lon": round(gp.lon, 6),
                "alt_km": snap.altitude_of(sat),
            }
        )
    return rows
