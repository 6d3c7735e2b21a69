"""Grid schemes and their cell-count / header-bit arithmetic.

Only the hex hierarchy supports geometric operations; the three comparison
schemes exist for the bits-per-cell analysis and implement counting only.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from ..constants import EARTH_RADIUS_KM
from ..errors import ResolutionError, SchemeError


class GridKind(enum.Enum):
    HEX_HIER = "hex_hier"
    QUAD_CUBE = "quad_cube"
    BASE32_HASH = "base32_hash"
    LAT_LON_DEG = "lat_lon_deg"


@dataclass(frozen=True)
class GridScheme:
    kind: GridKind
    step_deg: float | None = None

    def __post_init__(self):
        if self.kind is GridKind.LAT_LON_DEG:
            step = self.step_deg
            if step is None or step <= 0 or abs(180.0 / step - round(180.0 / step)) > 1e-9:
                raise SchemeError(f"lat/lon step {step} must divide 180 evenly")
        elif self.step_deg is not None:
            raise SchemeError(f"{self.kind.value} takes no step parameter")

    def __str__(self):
        if self.kind is GridKind.LAT_LON_DEG:
            return f"lat_lon_{self.step_deg:g}deg"
        return self.kind.value


HEX_HIER = GridScheme(GridKind.HEX_HIER)
QUAD_CUBE = GridScheme(GridKind.QUAD_CUBE)
BASE32_HASH = GridScheme(GridKind.BASE32_HASH)


def lat_lon_deg(step: float) -> GridScheme:
    return GridScheme(GridKind.LAT_LON_DEG, step)


def cell_count(scheme: GridScheme, r: int | None = None) -> int:
    """Number of cells of `scheme` at resolution/level/length `r`."""
    if scheme.kind is GridKind.HEX_HIER:
        if not isinstance(r, int) or not 0 <= r <= 5:
            raise ResolutionError(f"hex resolution {r!r} outside 0..5")
        return 2 + 120 * 7 ** r
    if scheme.kind is GridKind.QUAD_CUBE:
        if not isinstance(r, int) or not 0 <= r <= 30:
            raise ResolutionError(f"quad-cube level {r!r} outside 0..30")
        return 6 * 4 ** r
    if scheme.kind is GridKind.BASE32_HASH:
        if not isinstance(r, int) or not 1 <= r <= 12:
            raise ResolutionError(f"base32 length {r!r} outside 1..12")
        return 32 ** r
    if scheme.kind is GridKind.LAT_LON_DEG:
        step = scheme.step_deg
        return round(180.0 / step) * round(360.0 / step)
    raise SchemeError(f"unknown scheme {scheme}")  # pragma: no cover


def bits_per_cell(scheme: GridScheme, r: int | None = None) -> int:
    """Header bits needed to name one cell: ceil(log2(cell count))."""
    return max(1, (cell_count(scheme, r) - 1).bit_length())


def effective_diameter_km(r: int) -> float:
    """Diameter of the circle matching the average hex-cell area at `r`."""
    if not isinstance(r, int) or not 0 <= r <= 5:
        raise ResolutionError(f"hex resolution {r!r} outside 0..5")
    area = 4.0 * math.pi * EARTH_RADIUS_KM ** 2 / cell_count(HEX_HIER, r)
    return 2.0 * math.sqrt(area / math.pi)
