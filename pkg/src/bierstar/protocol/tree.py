"""Cell trees and the packet header structure.

A header carries one or more cell trees per shell block. Each tree is rooted
at the ingress satellite's cell; destination cells carry a flag bit. Multiple
blocks with the same shell id form a forest: the encoder emits extra trees
when two routes need incompatible parents for the same cell (e.g. a cell
straddling the seam that is approached from both sides), keeping every
destination's full cell path intact in some tree.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import HeaderFormatError
from ..geogrid import CellId

HEADER_VERSION = 1
MAX_TREE_CHILDREN = 7  # 3-bit wire field


@dataclass(frozen=True)
class CellTree:
    """Rooted tree of cells; children ordered by ascending cell index."""

    root: CellId
    children: dict[CellId, tuple[CellId, ...]]
    dest_flags: frozenset[CellId]

    def nodes(self) -> list[CellId]:
        """Pre-order node list."""
        out = []
        stack = [self.root]
        while stack:
            c = stack.pop()
            out.append(c)
            for kid in reversed(self.children.get(c, ())):
                stack.append(kid)
        return out

    @property
    def node_count(self) -> int:
        return len(self.nodes())

    def subtree(self, cell: CellId) -> "CellTree":
        """Pruned subtree rooted at `cell`, flags restricted to it."""
        kids: dict[CellId, tuple[CellId, ...]] = {}
        keep: set[CellId] = set()
        stack = [cell]
        while stack:
            c = stack.pop()
            keep.add(c)
            ch = self.children.get(c, ())
            if ch:
                kids[c] = ch
                stack.extend(ch)
        return CellTree(cell, kids, frozenset(f for f in self.dest_flags if f in keep))

    def leaf(self, cell: CellId) -> "CellTree":
        """Single-node flagged tree used for in-cell delivery relays."""
        return CellTree(cell, {}, frozenset({cell}))

    def signature(self):
        """Structural identity used for duplicate suppression in the driver."""
        def sig(c: CellId):
            return (c.index, c in self.dest_flags,
                    tuple(sig(k) for k in self.children.get(c, ())))
        return (self.root.resolution, sig(self.root))

    def validate(self) -> None:
        res = self.root.resolution
        scheme = self.root.scheme
        seen: set[CellId] = set()
        stack = [self.root]
        while stack:
            c = stack.pop()
            if c in seen:
                raise HeaderFormatError(f"cell {c.index} repeats inside one tree")
            seen.add(c)
            if c.resolution != res or c.scheme != scheme:
                raise HeaderFormatError("tree mixes resolutions or schemes")
            stack.extend(self.children.get(c, ()))
        for c in self.children:
            if c not in seen:
                raise HeaderFormatError("children map lists a disconnected cell")
        for f in self.dest_flags:
            if f not in seen:
                raise HeaderFormatError("flagged cell not reachable from root")


def tree_from_paths(root: CellId, paths: list[list[CellId]],
                    flags: dict[CellId, bool]) -> CellTree:
    """Merge loop-free cell paths (all starting at `root`) into one tree."""
    children: dict[CellId, list[CellId]] = {}
    nodes = {root}
    for path in paths:
        for a, b in zip(path, path[1:]):
            if b in nodes:
                continue
            nodes.add(b)
            children.setdefault(a, []).append(b)
    ordered = {c: tuple(sorted(k, key=lambda x: x.index)) for c, k in children.items()}
    fl = frozenset(c for c in nodes if flags.get(c))
    return CellTree(root, ordered, fl)


@dataclass(frozen=True)
class HeaderShell:
    shell_id: int
    resolution: int
    tree: CellTree


@dataclass(frozen=True)
class Header:
    group_id: int
    shells: tuple[HeaderShell, ...]
    version: int = HEADER_VERSION

    def cells(self) -> set[CellId]:
        out: set[CellId] = set()
        for sh in self.shells:
            out.update(sh.tree.nodes())
        return out

    def signature(self):
        return tuple((sh.shell_id, sh.tree.signature()) for sh in self.shells)
