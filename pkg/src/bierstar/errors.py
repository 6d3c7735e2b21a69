"""Exception types shared across the package."""


class BierStarError(Exception):
    """Base class for all package errors."""


class InvalidGeoPoint(BierStarError):
    """Latitude/longitude outside the legal range."""


class ResolutionError(BierStarError):
    """Grid resolution outside the range supported by the scheme."""


class SchemeError(BierStarError):
    """Operation not supported by the requested grid scheme."""


class NoCoverage(BierStarError):
    """No satellite clears the elevation mask for a terminal."""


class Unreachable(BierStarError):
    """Requested destination(s) cannot be reached from the source."""

    def __init__(self, message, satellites=()):
        super().__init__(message)
        self.satellites = tuple(satellites)


class HeaderFormatError(BierStarError):
    """Malformed header bits or an unserializable header structure."""


class ScenarioError(BierStarError):
    """Scenario specification failed validation."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
