"""Per-epoch target-cell routing tables.

Each satellite's table maps a header cell to the ISL neighbor lying on the
cheapest snapshot path toward the nearest satellite inside that cell, with up
to two backups. All candidates are strictly *downstream* (their own distance
to the cell is smaller than the owner's), so any sequence of table hops
strictly decreases the remaining distance: forwarding is loop-free and, on a
connected snapshot, always enters the target cell.

Tables are pure functions of the epoch snapshot; nothing per-flow is stored.
Satellites inside the target cell get no entry for it (they are already
there), and cells with no downstream neighbor (only possible once links have
failed) fall back to the coarser parent cell at the forwarder.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

from ..geogrid import CellId, key_center_unit, key_of_cell
from ..orbit import SatId, Snapshot

MAX_BACKUPS = 2

_center_cache: dict[CellId, tuple[float, float, float]] = {}


def cell_center_unit(cell: CellId) -> tuple[float, float, float]:
    c = _center_cache.get(cell)
    if c is None:
        c = key_center_unit(key_of_cell(cell), cell.resolution)
        _center_cache[cell] = c
    return c


@dataclass(frozen=True)
class TableEntry:
    primary: SatId
    backups: tuple[SatId, ...]

    def candidates(self) -> tuple[SatId, ...]:
        return (self.primary, *self.backups)


@dataclass(frozen=True)
class TargetCellTable:
    owner: SatId
    epoch: float
    entries: dict[CellId, TableEntry]
    # Owner's neighbors on the per-cell delivery relay tree (flagged cells
    # only): the deterministic snapshot tree spanning the cell's satellites,
    # used to cover every member-holding satellite of a destination cell.
    relays: dict[CellId, tuple[SatId, ...]] = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.relays is None:
            object.__setattr__(self, "relays", {})


def anycast_distance(snapshot: Snapshot, cell: CellId) -> dict[SatId, float]:
    """Cheapest path cost (chord km) from every satellite to the closest
    satellite whose sub-satellite point lies in `cell`."""
    from .encode import snapshot_cells

    members = [s for s, c in snapshot_cells(snapshot, cell.resolution).items() if c == cell]
    dist: dict[SatId, float] = {}
    heap: list[tuple[float, SatId]] = []
    for s in members:
        dist[s] = 0.0
        heap.append((0.0, s))
    heapq.heapify(heap)
    done: set[SatId] = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, w in snapshot.adjacency[u]:
            nd = d + w
            if v not in dist or nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def _entry_for(sat: SatId, snapshot: Snapshot, dist: dict[SatId, float]) -> TableEntry | None:
    own = dist.get(sat)
    if own is None or own == 0.0:
        return None
    ranked = []
    for n, w in snapshot.neighbors_of(sat):
        dn = dist.get(n)
        if dn is not None and dn < own:
            ranked.append((dn + w, n))
    if not ranked:
        return None
    ranked.sort()
    ordered = [n for _, n in ranked]
    return TableEntry(ordered[0], tuple(ordered[1:1 + MAX_BACKUPS]))


def cell_relay_adjacency(snapshot: Snapshot, cell: CellId) -> dict[SatId, tuple[SatId, ...]]:
    """Adjacency of the delivery relay tree of `cell`: the union of shortest
    paths from the lowest-id member satellite to every other member. The tree
    may route through satellites outside the cell (e.g. around a seam) and is
    a pure function of the snapshot."""
    from .encode import snapshot_cells
    from .spt import shortest_path_tree

    members = sorted(s for s, c in snapshot_cells(snapshot, cell.resolution).items()
                     if c == cell)
    adj: dict[SatId, set[SatId]] = {}
    if len(members) > 1:
        spt = shortest_path_tree(snapshot.adjacency, members[0])
        for m in members[1:]:
            node = m
            while node != members[0]:
                par = spt.parents.get(node)
                if par is None:
                    break  # member unreachable in this snapshot
                adj.setdefault(node, set()).add(par)
                adj.setdefault(par, set()).add(node)
                node = par
    return {s: tuple(sorted(n)) for s, n in adj.items()}


def build_target_cell_table(sat: SatId, snapshot: Snapshot, r: int,
                            header_cells: set[CellId],
                            distances: dict[CellId, dict[SatId, float]] | None = None,
                            flagged_cells: set[CellId] | None = None,
                            relay_adjacency: dict[CellId, dict[SatId, tuple[SatId, ...]]] | None = None,
                            ) -> TargetCellTable:
    """Table for one satellite. `r` is the header resolution; `header_cells`
    may also carry coarser parent cells for the fallback path. Relay-tree
    slices are included for `flagged_cells` (destination cells)."""
    entries: dict[CellId, TableEntry] = {}
    for cell in header_cells:
        dist = None if distances is None else distances.get(cell)
        if dist is None:
            dist = anycast_distance(snapshot, cell)
            if distances is not None:
                distances[cell] = dist
        entry = _entry_for(sat, snapshot, dist)
        if entry is not None:
            entries[cell] = entry
    relays: dict[CellId, tuple[SatId, ...]] = {}
    for cell in flagged_cells or ():
        shared = None if relay_adjacency is None else relay_adjacency.get(cell)
        if shared is None:
            shared = cell_relay_adjacency(snapshot, cell)
            if relay_adjacency is not None:
                relay_adjacency[cell] = shared
        mine = shared.get(sat)
        if mine:
            relays[cell] = mine
    return TargetCellTable(sat, snapshot.time_s, entries, relays)
