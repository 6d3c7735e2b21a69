"""Public hierarchical hex-grid API: cells, adjacency, hierarchy, indexing.

Cells are addressed two ways:

* ``CellId`` — the stable public identity: (scheme, resolution, dense index)
  with the dense index in ``[0, cell_count(resolution))``. This is what goes
  into headers, CSVs and fixtures.
* internal lattice keys ``(face, i, j)`` — what the geometry layer works in.
  Hot paths (per-epoch satellite cell maps, dwell tracking) stay on keys and
  only pay for dense ranking when a cell reaches the wire or a file.

The dense index is the lexicographic rank in the aperture-7 tree: base cells
sorted by key, then child order sorted by key at each level, with pentagon
subtrees (which lack one child) sized accordingly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from ..errors import ResolutionError, SchemeError
from ..geo import GeoPoint, geopoint_from_unit
from . import icosa
from .schemes import HEX_HIER, GridScheme, cell_count

MAX_RESOLUTION = icosa.MAX_RESOLUTION

Key = tuple[int, tuple[int, int]]


@dataclass(frozen=True, order=True)
class CellId:
    """One cell of a grid scheme at a given resolution."""

    scheme: GridScheme
    resolution: int
    index: int

    def __post_init__(self):
        total = cell_count(self.scheme, self.resolution)
        if not 0 <= self.index < total:
            raise ResolutionError(
                f"cell index {self.index} outside [0, {total}) at resolution {self.resolution}"
            )


def _check_res(r: int) -> None:
    if not isinstance(r, int) or not 0 <= r <= MAX_RESOLUTION:
        raise ResolutionError(f"resolution {r!r} outside 0..{MAX_RESOLUTION}")


def _check_hex(cell: CellId) -> None:
    if cell.scheme is not HEX_HIER:
        raise SchemeError(f"operation requires the hex scheme, got {cell.scheme}")


# ---------------------------------------------------------------------------
# Dense ranking.
# ---------------------------------------------------------------------------

_BASE_KEYS: list[Key] = [(f, z) for (f, z) in icosa.base_cells()]
_BASE_INDEX = {k: i for i, k in enumerate(_BASE_KEYS)}
_BASE_IS_PENT = [icosa.is_corner(f, z, 0) for (f, z) in _BASE_KEYS]


def _subtree_size(is_pent: bool, depth: int) -> int:
    if is_pent:
        return 1 + 5 * (7 ** depth - 1) // 6
    return 7 ** depth


def _build_base_prefix():
    out = []
    for r in range(MAX_RESOLUTION + 1):
        acc = [0]
        for pent in _BASE_IS_PENT:
            acc.append(acc[-1] + _subtree_size(pent, r))
        out.append(acc)
    return out


_BASE_PREFIX = _build_base_prefix()

_rank_cache: dict[tuple[int, Key], int] = {}
_key_cache: dict[tuple[int, int], Key] = {}


def _rank_of_key(key: Key, res: int) -> int:
    cached = _rank_cache.get((res, key))
    if cached is not None:
        return cached
    chain = [key]
    for r in range(res, 0, -1):
        f, z = chain[-1]
        chain.append(icosa.parent_of(f, z, r))
    chain.reverse()
    rank = _BASE_PREFIX[res][_BASE_INDEX[chain[0]]]
    for level in range(res):
        f, z = chain[level]
        depth = res - level - 1
        for kid in icosa.children_of(f, z, level):
            if kid == chain[level + 1]:
                break
            rank += _subtree_size(icosa.is_corner(kid[0], kid[1], level + 1), depth)
    _rank_cache[(res, key)] = rank
    _key_cache[(res, rank)] = key
    return rank


def _key_of_rank(index: int, res: int) -> Key:
    cached = _key_cache.get((res, index))
    if cached is not None:
        return cached
    prefix = _BASE_PREFIX[res]
    lo, hi = 0, len(_BASE_KEYS)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if prefix[mid] <= index:
            lo = mid
        else:
            hi = mid
    key = _BASE_KEYS[lo]
    rem = index - prefix[lo]
    for level in range(res):
        depth = res - level - 1
        for kid in icosa.children_of(key[0], key[1], level):
            size = _subtree_size(icosa.is_corner(kid[0], kid[1], level + 1), depth)
            if rem < size:
                key = kid
                break
            rem -= size
        else:  # pragma: no cover - rank arithmetic guarantees a branch
            raise AssertionError("rank descent fell off the tree")
    _key_cache[(res, index)] = key
    _rank_cache[(res, key)] = index
    return key


def cell_from_key(key: Key, res: int) -> CellId:
    return CellId(HEX_HIER, res, _rank_of_key(key, res))


def key_of_cell(cell: CellId) -> Key:
    _check_hex(cell)
    return _key_of_rank(cell.index, cell.resolution)


# ---------------------------------------------------------------------------
# Spec operations.
# ---------------------------------------------------------------------------


def cell_key(point: GeoPoint, r: int) -> Key:
    """Lattice key of the cell containing `point` (hot-path variant)."""
    _check_res(r)
    return icosa.locate_unit(point.unit(), r)


def cell_key_from_unit(v: tuple[float, float, float], r: int) -> Key:
    return icosa.locate_unit(v, r)


def cell_index(point: GeoPoint, r: int) -> CellId:
    """Cell containing `point` at resolution `r`; total and deterministic."""
    _check_res(r)
    return cell_from_key(icosa.locate_unit(point.unit(), r), r)


def neighbors(cell: CellId) -> set[CellId]:
    """Adjacent cells: 6 for hexagons, 5 for the 12 pentagons per resolution."""
    f, z = key_of_cell(cell)
    r = cell.resolution
    return {cell_from_key(k, r) for k in icosa.neighbors_of(f, z, r)}


def parent(cell: CellId, r_coarse: int) -> CellId:
    """Containing cell at a coarser resolution."""
    _check_hex(cell)
    _check_res(r_coarse)
    if r_coarse >= cell.resolution:
        raise ResolutionError(
            f"parent resolution {r_coarse} must be coarser than {cell.resolution}"
        )
    f, z = key_of_cell(cell)
    for r in range(cell.resolution, r_coarse, -1):
        f, z = icosa.parent_of(f, z, r)
    return cell_from_key((f, z), r_coarse)


def children(cell: CellId) -> list[CellId]:
    """Child cells one resolution finer: 7 for hexagons, 6 for pentagons."""
    _check_hex(cell)
    r = cell.resolution
    if r >= MAX_RESOLUTION:
        raise ResolutionError(f"no children beyond resolution {MAX_RESOLUTION}")
    f, z = key_of_cell(cell)
    return [cell_from_key(k, r + 1) for k in icosa.children_of(f, z, r)]


def is_pentagon(cell: CellId) -> bool:
    f, z = key_of_cell(cell)
    return icosa.is_corner(f, z, cell.resolution)


def cell_center(cell: CellId) -> GeoPoint:
    f, z = key_of_cell(cell)
    return geopoint_from_unit(icosa.vertex_unit(f, z, cell.resolution))


def key_center_unit(key: Key, r: int) -> tuple[float, float, float]:
    f, z = key
    return icosa.vertex_unit(f, z, r)


def key_parent(key: Key, r: int) -> Key:
    f, z = key
    return icosa.parent_of(f, z, r)


def base_cells() -> list[CellId]:
    return [cell_from_key(k, 0) for k in _BASE_KEYS]


def enumerate_cells(r: int) -> Iterable[Key]:
    """All lattice keys at resolution r, by recursive child expansion.

    Intended for the structural test suite; materializes 2 + 120*7^r keys.
    """
    _check_res(r)
    level = list(_BASE_KEYS)
    for rr in range(r):
        nxt = []
        for f, z in level:
            nxt.extend(icosa.children_of(f, z, rr))
        level = nxt
    return level
