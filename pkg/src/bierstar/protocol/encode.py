"""Header encoding: destinations -> shortest-path tree -> cell-tree header.

Each destination's SPT path is mapped to the cells under the satellites'
sub-satellite points, consecutive duplicates collapse, and loops are erased so
every path is a simple cell chain. Chains merge into a tree when their parent
relations agree; a chain that would need a conflicting parent for some cell
starts a new tree in the same header (forest), so every destination keeps an
intact route. Trees are serialized per shell block with children in ascending
cell-index order.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import BierStarError, Unreachable
from ..geogrid import CellId, cell_from_key, cell_key_from_unit
from ..orbit import SatId, Snapshot
from .spt import SptResult, reconstruct_path, spt_for_snapshot
from .tree import MAX_TREE_CHILDREN, CellTree, Header, HeaderShell

_cellmap_cache: dict[tuple[int, float, int], dict[SatId, CellId]] = {}


def snapshot_cells(snapshot: Snapshot, r: int) -> dict[SatId, CellId]:
    """Cell of every satellite's sub-satellite point, cached per snapshot."""
    key = (id(snapshot), snapshot.time_s, r)
    cached = _cellmap_cache.get(key)
    if cached is not None:
        return cached
    by_key: dict[tuple, CellId] = {}
    out: dict[SatId, CellId] = {}
    for i, sat in enumerate(snapshot.sats):
        k = cell_key_from_unit(tuple(snapshot.units[i]), r)
        cell = by_key.get(k)
        if cell is None:
            cell = cell_from_key(k, r)
            by_key[k] = cell
        out[sat] = cell
    if len(_cellmap_cache) > 64:
        _cellmap_cache.clear()
    _cellmap_cache[key] = out
    return out


def _loop_erased(cells: list[CellId]) -> list[CellId]:
    """Collapse consecutive duplicates, then erase any revisit loops."""
    out: list[CellId] = []
    pos: dict[CellId, int] = {}
    for c in cells:
        if out and out[-1] == c:
            continue
        if c in pos:
            for dropped in out[pos[c] + 1:]:
                del pos[dropped]
            del out[pos[c] + 1:]
        else:
            out.append(c)
            pos[c] = len(out) - 1
    return out


class _TreeBuilder:
    def __init__(self, root: CellId):
        self.root = root
        self.parent: dict[CellId, CellId | None] = {root: None}
        self.children: dict[CellId, list[CellId]] = {}
        self.flags: set[CellId] = set()

    def compatible(self, path: list[CellId]) -> bool:
        for a, b in zip(path, path[1:]):
            existing = self.parent.get(b, _MISSING)
            if existing is not _MISSING and existing != a:
                return False
        return True

    def merge(self, path: list[CellId], flag_last: bool) -> None:
        for a, b in zip(path, path[1:]):
            if b not in self.parent:
                self.parent[b] = a
                self.children.setdefault(a, []).append(b)
        if flag_last:
            self.flags.add(path[-1])

    def build(self) -> CellTree:
        ordered = {c: tuple(sorted(k, key=lambda x: x.index))
                   for c, k in self.children.items()}
        return CellTree(self.root, ordered, frozenset(self.flags))


_MISSING = object()


def _split_overflow(trees: list[CellTree]) -> list[CellTree]:
    """Move excess children (beyond the 3-bit wire limit) into extra trees,
    reusing the root-to-node chain so routes stay intact."""
    out: list[CellTree] = []
    queue = list(trees)
    while queue:
        t = queue.pop(0)
        over = None
        for cell, kids in t.children.items():
            if len(kids) > MAX_TREE_CHILDREN:
                over = cell
                break
        if over is None:
            out.append(t)
            continue
        kids = t.children[over]
        keep, moved = kids[:MAX_TREE_CHILDREN], kids[MAX_TREE_CHILDREN:]
        # Chain from root down to the overflowing cell.
        parent_of: dict[CellId, CellId] = {}
        for c, ks in t.children.items():
            for k in ks:
                parent_of[k] = c
        chain = [over]
        while chain[-1] != t.root:
            chain.append(parent_of[chain[-1]])
        chain.reverse()
        kept_children = dict(t.children)
        kept_children[over] = keep
        moved_nodes: set[CellId] = set()
        stack = list(moved)
        while stack:
            c = stack.pop()
            moved_nodes.add(c)
            stack.extend(t.children.get(c, ()))
        kept_children = {c: tuple(k for k in ks if k not in moved_nodes)
                         for c, ks in kept_children.items() if c not in moved_nodes}
        kept_children = {c: ks for c, ks in kept_children.items() if ks}
        kept_flags = frozenset(f for f in t.dest_flags if f not in moved_nodes)
        out_tree = CellTree(t.root, kept_children, kept_flags)
        new_children: dict[CellId, tuple[CellId, ...]] = {}
        for a, b in zip(chain, chain[1:]):
            new_children[a] = (b,)
        new_children[over] = tuple(moved)
        for c in moved_nodes:
            ks = t.children.get(c)
            if ks:
                new_children[c] = ks
        new_flags = frozenset(f for f in t.dest_flags if f in moved_nodes)
        queue.append(out_tree)
        queue.append(CellTree(t.root, new_children, new_flags))
    return out


def encode(snapshot: Snapshot, src: SatId, destination_sats: set[SatId],
           r: int, group_id: int, spt: SptResult | None = None) -> Header:
    """Build the cell-tree header for one multicast group."""
    if not destination_sats:
        raise BierStarError("destination set is empty")
    if spt is None or spt.source != src:
        spt = spt_for_snapshot(snapshot, src)
    unreachable = sorted(d for d in destination_sats if d not in spt.parents)
    if unreachable:
        raise Unreachable(
            f"{len(unreachable)} destination(s) unreachable from {src}", unreachable
        )
    cells = snapshot_cells(snapshot, r)
    root = cells[src]
    builders: list[_TreeBuilder] = []
    for dst in sorted(destination_sats):
        sat_path = reconstruct_path(src, dst, spt.parents)
        cell_path = _loop_erased([cells[s] for s in sat_path])
        for b in builders:
            if b.compatible(cell_path):
                b.merge(cell_path, True)
                break
        else:
            b = _TreeBuilder(root)
            b.merge(cell_path, True)
            builders.append(b)
    trees = _split_overflow([b.build() for b in builders])
    shells = tuple(HeaderShell(src.shell_id, r, t) for t in trees)
    return Header(group_id, shells)
