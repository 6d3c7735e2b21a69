"""Comparison schemes: classic and segmented bitstring sizing, and greedy
geographic multicast variants.

The greedy routers are parameterized archetypes of geographic forwarding
(pure greedy, greedy with one lateral switch, greedy with a bounded perimeter
walk). They approximate the cited unicast methods extended to multicast by
per-destination routing with shared-prefix merging; none is a reproduction of
a published algorithm.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BierStarError
from .geo import GeoPoint
from .geogrid import cell_key
from .membership import bulk_assign
from .orbit import SatId, Snapshot
from .protocol.forward import DeliveryReport


def traditional_bitstring_bits(terminal_count: int) -> int:
    """Classic bitstring sizing: one header bit per terminal."""
    if terminal_count < 0:
        raise BierStarError(f"negative terminal count {terminal_count}")
    return terminal_count


class PartitionKind(enum.Enum):
    GEO_CELLS = "geo_cells"
    SAT_FOOTPRINT = "sat_footprint"


@dataclass(frozen=True)
class PartitionScheme:
    kind: PartitionKind
    resolution: int | None = None

    def __post_init__(self):
        if self.kind is PartitionKind.GEO_CELLS:
            if self.resolution not in (0, 1):
                raise BierStarError(f"geo-cell partition resolution {self.resolution} not in {{0, 1}}")
        elif self.resolution is not None:
            raise BierStarError("satellite-footprint partition takes no resolution")


GEO_R0 = PartitionScheme(PartitionKind.GEO_CELLS, 0)
GEO_R1 = PartitionScheme(PartitionKind.GEO_CELLS, 1)
SAT_FOOT = PartitionScheme(PartitionKind.SAT_FOOTPRINT)


@dataclass(frozen=True)
class SegmentedBits:
    bits: int                 # max partition cardinality (worst-case segment)
    excluded_no_coverage: int


def segmented_bitstring_bits(locations: list[GeoPoint], scheme: PartitionScheme,
                             snapshot: Snapshot | None = None,
                             elevation_mask_deg: float = 25.0) -> SegmentedBits:
    """Worst-case per-segment bitstring: the largest terminal count of any
    partition (geographic cell or serving-satellite footprint)."""
    counts: dict = {}
    excluded = 0
    if scheme.kind is PartitionKind.GEO_CELLS:
        for p in locations:
            k = cell_key(p, scheme.resolution)
            counts[k] = counts.get(k, 0) + 1
    else:
        if snapshot is None:
            raise BierStarError("satellite-footprint partition needs a snapshot")
        units = np.asarray([p.unit() for p in locations])
        for sat in bulk_assign(units, snapshot, elevation_mask_deg):
            if sat is None:
                excluded += 1
            else:
                counts[sat] = counts.get(sat, 0) + 1
    return SegmentedBits(max(counts.values(), default=0), excluded)


# ---------------------------------------------------------------------------
# Greedy geographic multicast.
# ---------------------------------------------------------------------------


class GreedyKind(enum.Enum):
    PURE = "greedy"
    SWITCH = "greedy_switch"
    PERIMETER = "greedy_perimeter"


@dataclass(frozen=True)
class GreedyVariant:
    kind: GreedyKind
    perimeter_steps: int = 4

    @property
    def name(self) -> str:
        return self.kind.value


STUCK = None  # sentinel result of greedy_next_hop


def _angle_to(u, v) -> float:
    return math.acos(max(-1.0, min(1.0, u[0] * v[0] + u[1] * v[1] + u[2] * v[2])))


def _edge(a: SatId, b: SatId) -> tuple[SatId, SatId]:
    return (a, b) if a < b else (b, a)


def _live_neighbors(snapshot: Snapshot, current: SatId, failed_links: frozenset,
                    failed_sats: frozenset):
    for n, w in snapshot.neighbors_of(current):
        if n in failed_sats or _edge(current, n) in failed_links:
            continue
        yield n, w


def _bearing_order(snapshot: Snapshot, current: SatId, target_unit,
                   failed_links: frozenset = frozenset(),
                   failed_sats: frozenset = frozenset()) -> list[SatId]:
    """ISL neighbors in clockwise bearing order, starting at the target
    direction: the probe order of the perimeter recovery walk."""
    cu = snapshot.unit_of(current)
    tangent = []
    for v in (target_unit,):
        d = v[0] * cu[0] + v[1] * cu[1] + v[2] * cu[2]
        t = (v[0] - d * cu[0], v[1] - d * cu[1], v[2] - d * cu[2])
        n = math.sqrt(t[0] ** 2 + t[1] ** 2 + t[2] ** 2)
        tangent.append((t[0] / n, t[1] / n, t[2] / n) if n > 1e-12 else (1.0, 0.0, 0.0))
    ref = tangent[0]
    # ref x cu gives the 90-degree-rotated reference in the tangent plane.
    ref90 = (
        ref[1] * cu[2] - ref[2] * cu[1],
        ref[2] * cu[0] - ref[0] * cu[2],
        ref[0] * cu[1] - ref[1] * cu[0],
    )
    scored = []
    for n, _w in _live_neighbors(snapshot, current, failed_links, failed_sats):
        nu = snapshot.unit_of(n)
        d = nu[0] * cu[0] + nu[1] * cu[1] + nu[2] * cu[2]
        t = (nu[0] - d * cu[0], nu[1] - d * cu[1], nu[2] - d * cu[2])
        ang = math.atan2(
            t[0] * ref90[0] + t[1] * ref90[1] + t[2] * ref90[2],
            t[0] * ref[0] + t[1] * ref[1] + t[2] * ref[2],
        )
        scored.append(((ang % (2.0 * math.pi)), n))
    scored.sort()
    return [n for _, n in scored]


def greedy_next_hop(variant: GreedyVariant, current: SatId, target_unit,
                    snapshot: Snapshot, visited: set[SatId],
                    failed_links: frozenset = frozenset(),
                    failed_sats: frozenset = frozenset()) -> SatId | None:
    """One greedy step toward `target_unit`; None means Stuck.

    PURE takes only strict progress. SWITCH additionally allows an
    equal-or-closer unvisited neighbor when strict progress is unavailable
    (the walk budgets one such move per stuck event). PERIMETER instead probes
    neighbors in bearing order; the walk bounds those probes.
    """
    cu = snapshot.unit_of(current)
    own = _angle_to(cu, target_unit)
    best = None
    best_key = None
    lateral = None
    lateral_key = None
    for n, _w in _live_neighbors(snapshot, current, failed_links, failed_sats):
        if n in visited:
            continue
        d = _angle_to(snapshot.unit_of(n), target_unit)
        if d < own and (best_key is None or (d, n) < best_key):
            best, best_key = n, (d, n)
        if d <= own and (lateral_key is None or (d, n) < lateral_key):
            lateral, lateral_key = n, (d, n)
    if best is not None:
        return best
    if variant.kind is GreedyKind.SWITCH:
        return lateral
    if variant.kind is GreedyKind.PERIMETER:
        for n in _bearing_order(snapshot, current, target_unit, failed_links, failed_sats):
            if n not in visited:
                return n
    return STUCK


@dataclass
class GreedyWalk:
    reached: bool
    path: list[SatId]
    stuck_at: SatId | None = None


def _strict_step(snapshot: Snapshot, current: SatId, target_unit,
                 visited: set[SatId], failed_links: frozenset,
                 failed_sats: frozenset) -> SatId | None:
    return greedy_next_hop(GreedyVariant(GreedyKind.PURE), current, target_unit,
                           snapshot, visited, failed_links, failed_sats)


def greedy_walk(variant: GreedyVariant, src: SatId, dest: SatId,
                snapshot: Snapshot, max_hops: int = 256,
                failed_links: frozenset = frozenset(),
                failed_sats: frozenset = frozenset()) -> GreedyWalk:
    """Route toward the destination satellite's sub-satellite point.

    PURE fails at the first local minimum. SWITCH may take one lateral
    (equal-or-closer) move per stuck event but must then resume strict
    progress. PERIMETER probes neighbors in bearing order for up to
    `perimeter_steps` moves, recovering once it gets strictly closer than the
    stuck point.
    """
    target = snapshot.unit_of(dest)
    path = [src]
    visited = {src}
    current = src
    lateral_armed = True
    budget = 0
    stuck_d = math.inf

    def advance(n: SatId) -> None:
        nonlocal current
        visited.add(n)
        path.append(n)
        current = n

    while current != dest:
        if len(path) > max_hops:
            return GreedyWalk(False, path, current)
        own = _angle_to(snapshot.unit_of(current), target)
        if budget > 0 and own < stuck_d:
            budget = 0  # perimeter walk recovered
        nxt = _strict_step(snapshot, current, target, visited, failed_links, failed_sats)
        if nxt is not None:
            lateral_armed = True
            if budget == 0:
                advance(nxt)
                continue
        if variant.kind is GreedyKind.PURE:
            return GreedyWalk(False, path, current)
        if variant.kind is GreedyKind.SWITCH:
            if not lateral_armed:
                return GreedyWalk(False, path, current)
            lateral = greedy_next_hop(variant, current, target, snapshot, visited,
                                      failed_links, failed_sats)
            if lateral is None:
                return GreedyWalk(False, path, current)
            lateral_armed = False
            advance(lateral)
            continue
        # PERIMETER
        if budget == 0:
            budget = variant.perimeter_steps
            stuck_d = own
        elif budget == 1:
            return GreedyWalk(False, path, current)
        else:
            budget -= 1
        probe = next((n for n in _bearing_order(snapshot, current, target,
                                            failed_links, failed_sats)
                      if n not in visited), None)
        if probe is None:
            return GreedyWalk(False, path, current)
        advance(probe)
    return GreedyWalk(True, path)


def greedy_multicast(variant: GreedyVariant, src: SatId, destination_sats: set[SatId],
                     snapshot: Snapshot, max_hops: int = 256,
                     failed_links: frozenset = frozenset(),
                     failed_sats: frozenset = frozenset()) -> DeliveryReport:
    """Per-destination greedy walks with shared prefixes merged: one copy per
    distinct continuation at each satellite."""
    from .protocol.forward import BranchFailure

    report = DeliveryReport(group_id=0)
    edges: dict[SatId, set[SatId]] = {}
    for dest in sorted(destination_sats):
        if dest == src:
            report.delivered[dest] = 0
            continue
        walk = greedy_walk(variant, src, dest, snapshot, max_hops,
                           failed_links, failed_sats)
        if walk.reached:
            report.delivered[dest] = len(walk.path) - 1
        else:
            report.branch_failures.append(
                BranchFailure(walk.stuck_at if walk.stuck_at is not None else dest,
                              None, f"greedy stuck short of {dest}"))
        for a, b in zip(walk.path, walk.path[1:]):
            edges.setdefault(a, set()).add(b)
    report.replications = sum(max(0, len(v) - 1) for v in edges.values())
    report.forward_calls = sum(len(v) for v in edges.values())
    return report
