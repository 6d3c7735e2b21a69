"""Hierarchical spherical cell indexing and grid-scheme arithmetic."""

from .hexgrid import (
    MAX_RESOLUTION,
    CellId,
    base_cells,
    cell_center,
    cell_from_key,
    cell_index,
    cell_key,
    cell_key_from_unit,
    children,
    enumerate_cells,
    is_pentagon,
    key_center_unit,
    key_of_cell,
    key_parent,
    neighbors,
    parent,
)
from .schemes import (
    BASE32_HASH,
    HEX_HIER,
    QUAD_CUBE,
    GridKind,
    GridScheme,
    bits_per_cell,
    cell_count,
    effective_diameter_km,
    lat_lon_deg,
)

__all__ = [
    "MAX_RESOLUTION",
    "CellId",
    "base_cells",
    "cell_center",
    "cell_from_key",
    "cell_index",
    "cell_key",
    "cell_key_from_unit",
    "children",
    "enumerate_cells",
    "is_pentagon",
    "key_center_unit",
    "key_of_cell",
    "key_parent",
    "neighbors",
    "parent",
    "BASE32_HASH",
    "HEX_HIER",
    "QUAD_CUBE",
    "GridKind",
    "GridScheme",
    "bits_per_cell",
    "cell_count",
    "effective_diameter_km",
    "lat_lon_deg",
]
