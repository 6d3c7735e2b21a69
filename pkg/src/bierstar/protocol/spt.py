"""Single-source shortest path trees over the ISL graph.

Weights are chord kilometres. The parent map is canonical: among equal-cost
predecessors the lowest SatId wins, so two runs over the same snapshot always
produce the same tree.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

from ..errors import Unreachable
from ..orbit import SatId, Snapshot


@dataclass(frozen=True)
class SptResult:
    source: SatId
    parents: dict[SatId, SatId | None]
    dist: dict[SatId, float]


def shortest_path_tree(adjacency: dict[SatId, tuple[tuple[SatId, float], ...]],
                       src: SatId) -> SptResult:
    if src not in adjacency:
        raise Unreachable(f"source {src} not in graph", [src])
    dist: dict[SatId, float] = {src: 0.0}
    done: set[SatId] = set()
    heap: list[tuple[float, SatId]] = [(0.0, src)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, w in adjacency[u]:
            nd = d + w
            if v not in dist or nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    # Canonical predecessor pass: lowest SatId among optimal parents.
    parents: dict[SatId, SatId | None] = {src: None}
    for v, dv in dist.items():
        if v == src:
            continue
        best = None
        for u, w in adjacency[v]:
            du = dist.get(u)
            if du is not None and du + w == dv and (best is None or u < best):
                best = u
        parents[v] = best
    return SptResult(src, parents, dist)


def spt_for_snapshot(snapshot: Snapshot, src: SatId) -> SptResult:
    return shortest_path_tree(snapshot.adjacency, src)


def reconstruct_path(src: SatId, dst: SatId, parents: dict[SatId, SatId | None]) -> list[SatId]:
    """Path src..dst following parent pointers; raises Unreachable if absent."""
    if dst not in parents:
        raise Unreachable(f"{dst} unreachable from {src}", [dst])
    path = [dst]
    guard = len(parents) + 1
    while path[-1] != src:
        p = parents[path[-1]]
        if p is None or len(path) > guard:
            raise Unreachable(f"{dst} has no parent chain to {src}", [dst])
        path.append(p)
    path.reverse()
    return path
