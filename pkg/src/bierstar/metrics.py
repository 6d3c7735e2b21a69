"""Evaluation metrics: bitstring overhead lives in `baselines`, this module
covers dwell time (analytic and empirical), reach rate, and link/node removal
resilience.

The analytic dwell model uses the constant-speed ground-track approximation
(fixed nominal orbital speed, inclination-scaled), exactly as stated; the
empirical estimator runs the Earth-rotating propagator and reports the
distribution of same-cell residence times. Both are reported side by side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .constants import EARTH_RADIUS_KM, LEO_ORBITAL_SPEED_KMS, SIDEREAL_DAY_S
from .errors import BierStarError
from .geogrid import CellId, cell_key_from_unit, effective_diameter_km
from .orbit import Constellation, SatId, ShellSpec, Snapshot, _shell_units_at
from .protocol.forward import DeliveryReport

UNBOUNDED = math.inf


@dataclass(frozen=True)
class DwellParams:
    inclination_rad: float
    altitude_km: float
    resolution: int

    def __post_init__(self):
        if not 0.0 <= self.inclination_rad < math.pi:
            raise BierStarError(f"inclination {self.inclination_rad} outside [0, pi)")
        if self.altitude_km <= 0:
            raise BierStarError(f"altitude {self.altitude_km} must be positive")
        if not 0 <= self.resolution <= 5:
            raise BierStarError(f"resolution {self.resolution} outside 0..5")


def ground_track_speed(inclination_rad: float, altitude_km: float) -> float:
    """Inclination-scaled ground-track speed model, km/s."""
    scale = (EARTH_RADIUS_KM + altitude_km) / EARTH_RADIUS_KM
    return scale * LEO_ORBITAL_SPEED_KMS * math.cos(inclination_rad)


def dwelling_time_analytic(params: DwellParams) -> float:
    """Cell residence time under the analytic model; inf when the model's
    ground speed vanishes (polar inclination)."""
    v = ground_track_speed(params.inclination_rad, params.altitude_km)
    if v <= 1e-12:  # cos(pi/2) in floats is ~6e-17, not exactly zero
        return UNBOUNDED
    return effective_diameter_km(params.resolution) / v


@dataclass(frozen=True)
class DwellSummary:
    mean_s: float
    median_s: float
    p10_s: float
    p90_s: float
    count: int


def _sat_track_units(shell: ShellSpec, plane: int, slot: int, times: np.ndarray) -> np.ndarray:
    """Earth-fixed unit vectors of one satellite over an array of times."""
    node_spread = 180.0 if shell.pattern.value == "star" else 360.0
    raan = math.radians(node_spread * plane / shell.planes)
    phase0 = math.radians(360.0 * slot / shell.sats_per_plane
                          + 360.0 * shell.phasing_f * plane / (shell.planes * shell.sats_per_plane))
    nu = phase0 + 2.0 * math.pi * times / shell.period_s
    inc = math.radians(shell.inclination_deg)
    cos_nu, sin_nu = np.cos(nu), np.sin(nu)
    ci, si = math.cos(inc), math.sin(inc)
    x_eci = cos_nu * math.cos(raan) - sin_nu * ci * math.sin(raan)
    y_eci = cos_nu * math.sin(raan) + sin_nu * ci * math.cos(raan)
    z = sin_nu * si
    theta = 2.0 * math.pi * times / SIDEREAL_DAY_S
    ct, st = np.cos(theta), np.sin(theta)
    return np.column_stack([x_eci * ct + y_eci * st, -x_eci * st + y_eci * ct, z])


def dwelling_time_empirical(constellation: Constellation, r: int, duration_s: float,
                            step_s: float = 1.0,
                            sample_sats: list[SatId] | None = None) -> DwellSummary:
    """Track each satellite's cell over time and summarize completed dwells.

    Truncated first/last dwells are excluded, except for the degenerate track
    that never changes cell, which counts as one full-duration dwell.
    """
    if step_s > 1.0 + 1e-9:
        raise BierStarError(f"step {step_s}s too coarse for cell-crossing fidelity (max 1s)")
    if sample_sats is None:
        sample_sats = constellation.sat_ids()
    times = np.arange(0.0, duration_s + step_s / 2, step_s)
    if len(times) < 2:
        raise BierStarError("duration too short to observe any dwell")
    dwells: list[float] = []
    for sat in sample_sats:
        shell = constellation.shell(sat.shell_id)
        units = _sat_track_units(shell, sat.plane, sat.slot, times)
        runs: list[int] = []
        prev = None
        for u in units:
            k = cell_key_from_unit((u[0], u[1], u[2]), r)
            if k == prev:
                runs[-1] += 1
            else:
                runs.append(1)
                prev = k
        if len(runs) == 1:
            dwells.append(duration_s)  # degenerate: never left the cell
        else:
            dwells.extend(n * step_s for n in runs[1:-1])
    if not dwells:
        raise BierStarError("duration too short to complete any dwell")
    arr = np.sort(np.asarray(dwells))
    return DwellSummary(
        mean_s=float(arr.mean()),
        median_s=float(np.median(arr)),
        p10_s=float(np.percentile(arr, 10)),
        p90_s=float(np.percentile(arr, 90)),
        count=len(arr),
    )


def default_dwell_sample(constellation: Constellation, max_sats: int = 36) -> list[SatId]:
    """Deterministic satellite subset spread over planes and slots."""
    sats = constellation.sat_ids()
    if len(sats) <= max_sats:
        return sats
    stride = len(sats) / max_sats
    return [sats[int(i * stride)] for i in range(max_sats)]


def reach_rate(report: DeliveryReport, destination_sats: set[SatId]) -> float:
    """Delivered destinations over total destinations, in [0, 1]."""
    if not destination_sats:
        raise BierStarError("reach rate needs a non-empty destination set")
    return len(report.delivered_sats & set(destination_sats)) / len(destination_sats)


# ---------------------------------------------------------------------------
# Link/node removal resilience.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResilienceReport:
    max_removable_links: int
    max_removable_nodes: int
    per_destination_cuts: dict[SatId, tuple[int, int | None]]
    subgraph_nodes: int
    subgraph_edges: int


def induced_subgraph(snapshot: Snapshot, cell_keys: set, r: int) -> nx.Graph:
    """Subgraph of satellites whose sub-satellite points lie in the cell set."""
    g = nx.Graph()
    keep = []
    for i, sat in enumerate(snapshot.sats):
        u = snapshot.units[i]
        if cell_key_from_unit((u[0], u[1], u[2]), r) in cell_keys:
            keep.append(sat)
    g.add_nodes_from(keep)
    inside = set(keep)
    for a, b, w in snapshot.edges:
        if a in inside and b in inside:
            g.add_edge(a, b, weight=w)
    return g


def _min_edge_cut(g: nx.Graph, s, t) -> int:
    d = nx.DiGraph()
    for a, b in g.edges():
        d.add_edge(a, b, capacity=1)
        d.add_edge(b, a, capacity=1)
    if s not in d or t not in d:
        return 0
    value, _ = nx.maximum_flow(d, s, t)
    return int(value)


def _min_vertex_cut(g: nx.Graph, s, t, protected=()) -> int | None:
    """Minimum vertex cut over removable (non-protected) satellites, via node
    splitting with unit capacities; None when no such cut exists (e.g. s and
    t adjacent, or every separator passes through protected endpoints)."""
    protected = set(protected) | {s, t}
    if g.has_edge(s, t):
        return None
    d = nx.DiGraph()
    big = g.number_of_nodes() + 1
    for v in g.nodes():
        if v in (s, t):
            continue
        d.add_edge((v, "in"), (v, "out"), capacity=big if v in protected else 1)
    def tail(v):
        return (v, "out") if v not in (s, t) else v
    def head(v):
        return (v, "in") if v not in (s, t) else v
    for a, b in g.edges():
        d.add_edge(tail(a), head(b), capacity=big)
        d.add_edge(tail(b), head(a), capacity=big)
    if s not in d or t not in d:
        return 0
    value, _ = nx.maximum_flow(d, s, t)
    return None if value >= big else int(value)


def resilience(snapshot: Snapshot, src: SatId, destination_sats: set[SatId],
               cell_keys: set, r: int) -> ResilienceReport:
    """Adversarial removable-element counts inside the selected cell set:
    the largest k such that ANY k links (nodes) can fail without cutting the
    source off from every listed destination."""
    g = induced_subgraph(snapshot, cell_keys, r)
    missing = [s for s in ({src} | set(destination_sats)) if s not in g]
    if missing:
        raise BierStarError(
            f"{len(missing)} endpoint(s) outside the induced subgraph: "
            + ", ".join(str(m) for m in sorted(missing)[:4])
        )
    protected = {src} | set(destination_sats)
    cuts: dict[SatId, tuple[int, int | None]] = {}
    for dest in sorted(destination_sats):
        if dest == src:
            continue
        cuts[dest] = (_min_edge_cut(g, src, dest),
                      _min_vertex_cut(g, src, dest, protected))
    if not cuts:
        raise BierStarError("resilience needs at least one destination != source")
    max_links = max(0, min(ec for ec, _ in cuts.values()) - 1)
    # Removable pool: everything except the protected endpoints.
    pool = g.number_of_nodes() - len(protected & set(g.nodes()))
    node_bounds = []
    for _, vc in cuts.values():
        node_bounds.append(pool if vc is None else max(0, vc - 1))
    max_nodes = max(0, min(node_bounds))
    return ResilienceReport(max_links, max_nodes, cuts,
                            g.number_of_nodes(), g.number_of_edges())
