"""Physical constants used across the simulator.

A single definition site keeps orbit, grid, and metric modules from drifting
apart on Earth geometry.
"""

EARTH_RADIUS_KM = 6371.0

# Standard gravitational parameter of Earth, km^3/s^2.
MU_EARTH = 398600.4418

# Sidereal rotation period, seconds (one full Earth rotation wrt stars).
SIDEREAL_DAY_S = 86164.0

# Nominal LEO orbital speed used by the analytic dwell model, km/s.
LEO_ORBITAL_SPEED_KMS = 7.66
