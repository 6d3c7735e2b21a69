"""Stateless cell-based forwarding and the hop-by-hop multicast driver.

A packet carries a forest of cell trees. At a satellite, each carried tree is
either *processed* (the satellite's cell equals the tree root: deliver to
local members, replicate one pruned subtree per child cell, and relay a
flagged leaf to nearby satellites so every member-holding satellite in the
cell is covered) or *in transit* (forward one copy toward the root's cell
center via the target-cell table; on dead or absent entries retry at the
cell's coarser parent).

``forward`` is a pure function of its arguments; duplicate suppression (the
physical analogue of link-local duplicate filtering) lives in the driver.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..errors import BierStarError
from ..geogrid import CellId, parent as cell_parent
from ..orbit import SatId, Snapshot
from .codec import header_bit_length
from .encode import snapshot_cells
from .tables import TargetCellTable, build_target_cell_table, cell_center_unit
from .tree import CellTree, Header, HeaderShell

DEFAULT_TTL = 64


@dataclass(frozen=True)
class Packet:
    header: Header
    payload_len: int = 0
    hop_count: int = 0


@dataclass(frozen=True)
class BranchFailure:
    at_sat: SatId
    cell: CellId
    reason: str


@dataclass
class ForwardResult:
    emissions: list[tuple[SatId, Packet]]
    delivered: bool
    branch_failures: list[BranchFailure]
    ttl_drops: int
    replications: int


@dataclass
class DeliveryReport:
    group_id: int
    delivered: dict[SatId, int] = field(default_factory=dict)
    replications: int = 0
    ttl_drops: int = 0
    dedup_drops_transit: int = 0
    dedup_drops_relay: int = 0
    branch_failures: list[BranchFailure] = field(default_factory=list)
    forward_calls: int = 0
    trace: list | None = None

    @property
    def delivered_sats(self) -> set[SatId]:
        return set(self.delivered)

    @property
    def dedup_drops(self) -> int:
        return self.dedup_drops_transit + self.dedup_drops_relay


def _edge(a: SatId, b: SatId) -> tuple[SatId, SatId]:
    return (a, b) if a < b else (b, a)


def _first_live(table: TargetCellTable, cell: CellId, sat: SatId,
                failed_links: frozenset) -> SatId | None:
    entry = table.entries.get(cell)
    if entry is None:
        return None
    for cand in entry.candidates():
        if _edge(sat, cand) not in failed_links:
            return cand
    return None


def _route_toward(table: TargetCellTable, cell: CellId, sat: SatId,
                  failed_links: frozenset) -> SatId | None:
    """Table lookup with the coarser-parent fallback."""
    hop = _first_live(table, cell, sat, failed_links)
    if hop is None and cell.resolution > 0:
        hop = _first_live(table, cell_parent(cell, cell.resolution - 1), sat, failed_links)
    return hop


def forward(sat: SatId, packet: Packet, table: TargetCellTable, snapshot: Snapshot,
            failed_links: frozenset = frozenset(), member_sats: frozenset = frozenset(),
            ttl: int = DEFAULT_TTL,
            cell_of: dict[SatId, CellId] | None = None) -> ForwardResult:
    header = packet.header
    r = header.shells[0].resolution
    if cell_of is None:
        cell_of = snapshot_cells(snapshot, r)
    my_cell = cell_of[sat]
    out_shells: dict[SatId, list[HeaderShell]] = {}
    delivered = False
    failures: list[BranchFailure] = []

    def emit(to: SatId, shell_id: int, tree: CellTree) -> None:
        out_shells.setdefault(to, []).append(HeaderShell(shell_id, r, tree))

    for sh in header.shells:
        tree = sh.tree
        root = tree.root
        is_leaf = not tree.children
        if my_cell == root:
            if root in tree.dest_flags and sat in member_sats:
                delivered = True
            for child in tree.children.get(root, ()):
                hop = _route_toward(table, child, sat, failed_links)
                if hop is None:
                    failures.append(BranchFailure(sat, child, "no live next hop"))
                else:
                    emit(hop, sh.shell_id, tree.subtree(child))
            if root in tree.dest_flags:
                # In-cell delivery: spread a flagged leaf along the cell's
                # relay tree so every member-holding satellite is covered,
                # even when the cell's satellites are split across a seam.
                leaf = tree.leaf(root)
                for nbr in table.relays.get(root, ()):
                    if _edge(sat, nbr) not in failed_links:
                        emit(nbr, sh.shell_id, leaf)
        elif is_leaf and root in tree.dest_flags and table.relays.get(root):
            # Off-cell satellite on the relay tree: keep the leaf moving
            # along the tree (it may detour outside the destination cell).
            sent = False
            for nbr in table.relays[root]:
                if _edge(sat, nbr) not in failed_links:
                    emit(nbr, sh.shell_id, tree)
                    sent = True
            if not sent:
                hop = _route_toward(table, root, sat, failed_links)
                if hop is None:
                    failures.append(BranchFailure(sat, root, "no live next hop"))
                else:
                    emit(hop, sh.shell_id, tree)
        else:
            hop = _route_toward(table, root, sat, failed_links)
            if hop is None:
                failures.append(BranchFailure(sat, root, "no live next hop"))
            else:
                emit(hop, sh.shell_id, tree)

    emissions: list[tuple[SatId, Packet]] = []
    ttl_drops = 0
    hops = packet.hop_count + 1
    for to in sorted(out_shells):
        if hops > ttl:
            ttl_drops += 1
            continue
        hdr = Header(header.group_id, tuple(out_shells[to]), header.version)
        emissions.append((to, Packet(hdr, packet.payload_len, hops)))
    replications = max(0, len(emissions) - 1)
    return ForwardResult(emissions, delivered, failures, ttl_drops, replications)


class TableCache:
    """Lazy per-satellite target-cell tables for one snapshot + header-cell set.

    The anycast distance field of each cell is computed once and shared by
    every satellite's table.
    """

    def __init__(self, snapshot: Snapshot, r: int, cells: set[CellId],
                 flagged: set[CellId] = frozenset()):
        self.snapshot = snapshot
        self.r = r
        wanted = set(cells)
        for c in cells:
            if c.resolution > 0:
                wanted.add(cell_parent(c, c.resolution - 1))
        self.cells = wanted
        self.flagged = set(flagged)
        self._distances: dict[CellId, dict[SatId, float]] = {}
        self._relays: dict[CellId, dict[SatId, tuple[SatId, ...]]] = {}
        self._tables: dict[SatId, TargetCellTable] = {}

    def get(self, sat: SatId) -> TargetCellTable:
        t = self._tables.get(sat)
        if t is None:
            t = build_target_cell_table(sat, self.snapshot, self.r, self.cells,
                                        self._distances, self.flagged, self._relays)
            self._tables[sat] = t
        return t


def run_multicast(snapshot: Snapshot, header: Header, src: SatId,
                  member_sats: set[SatId], *, failed_links: frozenset = frozenset(),
                  failed_sats: frozenset = frozenset(), ttl: int = DEFAULT_TTL,
                  tables: TableCache | None = None,
                  collect_trace: bool = False) -> DeliveryReport:
    """Simulate hop-by-hop forwarding until quiescence.

    `member_sats` are the satellites currently holding local members of the
    group (the encode-time destination set). Duplicate (satellite, forest)
    visits are suppressed and counted.
    """
    if not header.shells:
        raise BierStarError("header has no shell blocks")
    r = header.shells[0].resolution
    report = DeliveryReport(header.group_id)
    if src in failed_sats:
        return report
    links = set(failed_links)
    for a, b, _w in snapshot.edges:
        if a in failed_sats or b in failed_sats:
            links.add(_edge(a, b))
    links = frozenset(links)
    if tables is None:
        flagged: set[CellId] = set()
        for sh in header.shells:
            flagged.update(sh.tree.dest_flags)
        tables = TableCache(snapshot, r, header.cells(), flagged)
    cell_of = snapshot_cells(snapshot, r)
    members = frozenset(member_sats)
    seen: set = set()
    trace: list[tuple[SatId, tuple]] = []
    queue: list[tuple[SatId, Packet]] = [(src, Packet(header))]
    while queue:
        sat, packet = queue.pop(0)
        # Duplicate suppression per (satellite, carried tree): the physical
        # analogue of link-local duplicate filtering for the in-cell relays.
        fresh = []
        for sh in packet.header.shells:
            sig = (sat, sh.shell_id, sh.tree.signature())
            if sig in seen:
                if sh.tree.children or sh.tree.node_count > 1:
                    report.dedup_drops_transit += 1
                else:
                    report.dedup_drops_relay += 1
                continue
            seen.add(sig)
            fresh.append(sh)
            if collect_trace:
                trace.append(sig)
        if not fresh:
            continue
        packet = Packet(Header(packet.header.group_id, tuple(fresh),
                               packet.header.version),
                        packet.payload_len, packet.hop_count)
        result = forward(sat, packet, tables.get(sat), snapshot,
                         failed_links=links, member_sats=members,
                         ttl=ttl, cell_of=cell_of)
        report.forward_calls += 1
        if result.delivered and sat not in report.delivered:
            report.delivered[sat] = packet.hop_count
        report.replications += result.replications
        report.ttl_drops += result.ttl_drops
        report.branch_failures.extend(result.branch_failures)
        for to, pkt in result.emissions:
            if to in failed_sats:
                continue
            queue.append((to, pkt))
    if collect_trace:
        report.trace = trace
    return report
