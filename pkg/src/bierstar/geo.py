"""Geographic points and spherical geometry helpers.

All identity-free geometry (distances, bearings, coverage) works on 3-D unit
vectors; latitude/longitude only appear at the API boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import EARTH_RADIUS_KM
from .errors import InvalidGeoPoint


def normalize_lon(lon: float) -> float:
    """Map a longitude into the half-open range [-180, 180)."""
    lon = math.fmod(lon + 180.0, 360.0)
    if lon < 0.0:
        lon += 360.0
    return lon - 180.0


@dataclass(frozen=True, order=True)
class GeoPoint:
    """A point on the Earth's surface in degrees.

    Longitude is normalized to [-180, 180); an out-of-range latitude is an
    error, never clamped.
    """

    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise InvalidGeoPoint(f"non-finite coordinates ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise InvalidGeoPoint(f"latitude {self.lat} outside [-90, 90]")
        object.__setattr__(self, "lon", normalize_lon(self.lon))

    def unit(self) -> tuple[float, float, float]:
        """Unit vector in an Earth-fixed frame (x toward lon=0, z toward N)."""
        lat = math.radians(self.lat)
        lon = math.radians(self.lon)
        c = math.cos(lat)
        return (c * math.cos(lon), c * math.sin(lon), math.sin(lat))


def geopoint_from_unit(v: tuple[float, float, float]) -> GeoPoint:
    x, y, z = v
    r = math.sqrt(x * x + y * y + z * z)
    lat = math.degrees(math.asin(max(-1.0, min(1.0, z / r))))
    lon = math.degrees(math.atan2(y, x))
    return GeoPoint(lat, lon)


def central_angle(u: tuple[float, float, float], v: tuple[float, float, float]) -> float:
    """Angle in radians between two unit vectors."""
    d = u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
    return math.acos(max(-1.0, min(1.0, d)))


def great_circle_km(a: GeoPoint, b: GeoPoint) -> float:
    return EARTH_RADIUS_KM * central_angle(a.unit(), b.unit())


def dot3(u, v) -> float:
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def sub3(u, v):
    return (u[0] - v[0], u[1] - v[1], u[2] - v[2])


def add3(u, v):
    return (u[0] + v[0], u[1] + v[1], u[2] + v[2])


def scale3(u, s: float):
    return (u[0] * s, u[1] * s, u[2] * s)


def cross3(u, v):
    return (
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    )


def norm3(u) -> float:
    return math.sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2])


def unit3(u):
    n = norm3(u)
    return (u[0] / n, u[1] / n, u[2] / n)
