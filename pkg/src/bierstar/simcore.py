"""Epoch-driven scenario runner binding constellation, membership, protocol,
baselines and metrics.

A scenario is fully described by a ScenarioSpec (parsed from TOML); `run` is a
pure function of it, including all randomness: every random draw comes from a
stream keyed by (seed, purpose, epoch, ...), so adding a method or group never
perturbs another's randomness.
"""
from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines
from .errors import BierStarError, NoCoverage, ScenarioError
from .geo import GeoPoint
from .geogrid import MAX_RESOLUTION
from .membership import (
    DEFAULT_REFRESH_INTERVAL_S,
    DEFAULT_TIMEOUT_S,
    EventKind,
    IngressRegistry,
    MembershipEvent,
    Terminal,
    bulk_assign,
    generate_clustered,
    generate_corridor,
    generate_uniform_sphere,
    load_terminals_csv,
)
from .metrics import reach_rate
from .orbit import Constellation, Pattern, SatId, ShellSpec, Snapshot, propagate
from .protocol import TableCache, encode, header_bit_length, run_multicast, serialize

ROUTING_METHODS = ("bierstar", "greedy", "greedy_switch", "greedy_perimeter")
BITSTRING_METHODS = ("bierstar", "traditional", "geo_r0", "geo_r1", "satfoot")
ALL_METHODS = tuple(dict.fromkeys(BITSTRING_METHODS + ROUTING_METHODS))

_GREEDY_VARIANTS = {
    "greedy": baselines.GreedyVariant(baselines.GreedyKind.PURE),
    "greedy_switch": baselines.GreedyVariant(baselines.GreedyKind.SWITCH),
    "greedy_perimeter": baselines.GreedyVariant(baselines.GreedyKind.PERIMETER),
}


def stream(seed: int, *labels) -> random.Random:
    """Independent deterministic RNG stream for (seed, labels)."""
    digest = hashlib.sha256(repr((seed,) + labels).encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


@dataclass(frozen=True)
class TerminalsSpec:
    generator: str                    # uniform-sphere | clustered | corridor | csv
    count: int = 0
    csv_path: str | None = None
    centers: tuple[GeoPoint, ...] = ()
    sigma_km: float = 300.0
    start: GeoPoint | None = None
    end: GeoPoint | None = None
    width_km: float = 200.0


@dataclass(frozen=True)
class GroupSpec:
    group_id: int
    members: str = "all"              # all | every_nth:<k> | ids:<comma list>
    source_gateway: GeoPoint | None = None
    source_sat: SatId | None = None


@dataclass(frozen=True)
class FailureSpec:
    model: str = "none"               # none | links | nodes
    rate: float = 0.0


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    seed: int
    resolution: int
    constellation: tuple[ShellSpec, ...]
    terminals: TerminalsSpec
    groups: tuple[GroupSpec, ...]
    epoch_s: float = 15.0
    duration_s: float = 15.0
    ttl: int = 64
    elevation_mask_deg: float = 25.0
    failures: FailureSpec = FailureSpec()
    methods: tuple[str, ...] = ("bierstar", "traditional", "geo_r0", "geo_r1", "satfoot", "greedy")
    refresh_interval_s: float = DEFAULT_REFRESH_INTERVAL_S
    timeout_s: float = DEFAULT_TIMEOUT_S


def validate(spec: ScenarioSpec) -> list[str]:
    """All violations at once; empty list means the spec is runnable."""
    problems: list[str] = []
    if not spec.constellation:
        problems.append("constellation: needs at least one shell")
    if not isinstance(spec.resolution, int) or not 0 <= spec.resolution <= MAX_RESOLUTION:
        problems.append(f"resolution: {spec.resolution} outside 0..{MAX_RESOLUTION}")
    if spec.epoch_s <= 0:
        problems.append(f"epoch_s: {spec.epoch_s} must be positive")
    if spec.duration_s <= 0:
        problems.append(f"duration_s: {spec.duration_s} must be positive")
    elif spec.epoch_s > 0 and abs(spec.duration_s / spec.epoch_s - round(spec.duration_s / spec.epoch_s)) > 1e-9:
        problems.append(f"duration_s: {spec.duration_s} not divisible by epoch_s {spec.epoch_s}")
    if spec.ttl < 1:
        problems.append(f"ttl: {spec.ttl} must be >= 1")
    if not isinstance(spec.seed, int):
        problems.append("seed: mandatory integer (no wall-clock entropy)")
    t = spec.terminals
    if t.generator == "csv":
        if not t.csv_path:
            problems.append("terminals: csv generator needs csv_path")
    elif t.generator in ("uniform-sphere", "clustered", "corridor"):
        if t.count < 1:
            problems.append(f"terminals: count {t.count} must be >= 1")
        if t.generator == "clustered" and not t.centers:
            problems.append("terminals: clustered generator needs centers")
        if t.generator == "corridor" and (t.start is None or t.end is None):
            problems.append("terminals: corridor generator needs start and end")
    else:
        problems.append(f"terminals: unknown generator {t.generator!r}")
    if not spec.groups:
        problems.append("groups: needs at least one group")
    for g in spec.groups:
        if (g.source_gateway is None) == (g.source_sat is None):
            problems.append(f"group {g.group_id}: exactly one of gateway or sat source")
        if not _parse_members(g.members, check_only=True):
            problems.append(f"group {g.group_id}: bad member filter {g.members!r}")
    if spec.failures.model not in ("none", "links", "nodes"):
        problems.append(f"failures: unknown model {spec.failures.model!r}")
    if not 0.0 <= spec.failures.rate <= 1.0:
        problems.append(f"failures: rate {spec.failures.rate} outside [0, 1]")
    for m in spec.methods:
        if m not in ALL_METHODS:
            problems.append(f"methods: unknown method {m!r} (known: {', '.join(ALL_METHODS)})")
    if not 0.0 <= spec.elevation_mask_deg < 90.0:
        problems.append(f"elevation_mask_deg: {spec.elevation_mask_deg} outside [0, 90)")
    return problems


def _parse_members(expr: str, check_only: bool = False):
    if expr == "all":
        return (lambda tid, i: True) if not check_only else True
    if expr.startswith("every_nth:"):
        try:
            k = int(expr.split(":", 1)[1])
        except ValueError:
            return False if check_only else None
        if k < 1:
            return False if check_only else None
        return (lambda tid, i: i % k == 0) if not check_only else True
    if expr.startswith("ids:"):
        ids = set(x.strip() for x in expr.split(":", 1)[1].split(",") if x.strip())
        if not ids:
            return False if check_only else None
        return (lambda tid, i: tid in ids) if not check_only else True
    return False if check_only else None


def build_terminals(spec: ScenarioSpec) -> list[Terminal]:
    t = spec.terminals
    rng = stream(spec.seed, "terminals")
    if t.generator == "uniform-sphere":
        return generate_uniform_sphere(t.count, rng)
    if t.generator == "clustered":
        return generate_clustered(t.count, list(t.centers), t.sigma_km, rng)
    if t.generator == "corridor":
        return generate_corridor(t.count, t.start, t.end, t.width_km, rng)
    if t.generator == "csv":
        return load_terminals_csv(t.csv_path)
    raise ScenarioError([f"unknown terminal generator {t.generator!r}"])


@dataclass
class EpochTrace:
    epoch: int
    time_s: float
    sat_count: int
    isl_count: int
    failed_links: int
    failed_sats: int
    headers: dict[int, dict]
    reports: dict[tuple[int, str], object]
    rows: dict[str, list[dict]]
    skipped_groups: list[tuple[int, str]]


@dataclass
class RunResult:
    spec: ScenarioSpec
    traces: list[EpochTrace]

    def rows(self, kind: str) -> list[dict]:
        out = []
        for tr in self.traces:
            out.extend(tr.rows.get(kind, ()))
        return out


def _sample_failures(spec: ScenarioSpec, snapshot: Snapshot, epoch: int):
    failed_links: set = set()
    failed_sats: set = set()
    if spec.failures.model == "links" and spec.failures.rate > 0:
        rng = stream(spec.seed, "failures", epoch)
        for a, b, _w in snapshot.edges:
            if rng.random() < spec.failures.rate:
                failed_links.add((a, b) if a < b else (b, a))
    elif spec.failures.model == "nodes" and spec.failures.rate > 0:
        rng = stream(spec.seed, "failures", epoch)
        for s in snapshot.sats:
            if rng.random() < spec.failures.rate:
                failed_sats.add(s)
    return frozenset(failed_links), frozenset(failed_sats)


def run(spec: ScenarioSpec) -> RunResult:
    problems = validate(spec)
    if problems:
        raise ScenarioError(problems)
    constellation = Constellation(spec.constellation)
    terminals = build_terminals(spec)
    registry = IngressRegistry(spec.refresh_interval_s, spec.timeout_s)
    group_members: dict[int, list[tuple[int, Terminal]]] = {}
    for g in spec.groups:
        pred = _parse_members(g.members)
        group_members[g.group_id] = [
            (i, term) for i, term in enumerate(terminals) if pred(term.terminal_id, i)
        ]
        if not group_members[g.group_id]:
            raise ScenarioError([f"group {g.group_id}: member filter selects no terminals"])
    epochs = round(spec.duration_s / spec.epoch_s)
    traces: list[EpochTrace] = []
    for epoch in range(epochs):
        now = epoch * spec.epoch_s
        snapshot = propagate(constellation, now)
        failed_links, failed_sats = _sample_failures(spec, snapshot, epoch)

        # Membership maintenance: assign, emit join/handover/refresh, prune.
        for g in spec.groups:
            members = group_members[g.group_id]
            units = np.asarray([term.position_at(now).unit() for _, term in members])
            assigned = bulk_assign(units, snapshot, spec.elevation_mask_deg)
            records = registry.records(g.group_id)
            for (_, term), sat in zip(members, assigned):
                rec = records.get(term.terminal_id)
                if sat is None:
                    continue  # uncovered: record ages out via the timeout
                if rec is None:
                    registry.process_event(MembershipEvent(
                        EventKind.JOIN, g.group_id, term.terminal_id, sat), now)
                elif rec.serving_sat != sat:
                    registry.process_event(MembershipEvent(
                        EventKind.HANDOVER, g.group_id, term.terminal_id, sat), now)
                else:
                    registry.process_event(MembershipEvent(
                        EventKind.REFRESH, g.group_id, term.terminal_id), now)
        registry.prune(now)

        trace = EpochTrace(epoch, now, len(snapshot.sats), len(snapshot.edges),
                           len(failed_links), len(failed_sats), {}, {}, {}, [])
        bit_rows: list[dict] = []
        reach_rows: list[dict] = []
        for g in spec.groups:
            dests = registry.active_destination_sats(g.group_id, now)
            if not dests:
                trace.skipped_groups.append((g.group_id, "no active members"))
                continue
            if g.source_sat is not None:
                src = g.source_sat
            else:
                try:
                    src = bulk_assign(np.asarray([g.source_gateway.unit()]),
                                      snapshot, spec.elevation_mask_deg)[0]
                except NoCoverage:
                    src = None
                if src is None:
                    trace.skipped_groups.append((g.group_id, "gateway has no coverage"))
                    continue
            header = encode(snapshot, src, dests, spec.resolution, g.group_id)
            trace.headers[g.group_id] = {
                "bits": header_bit_length(header),
                "bytes": len(serialize(header)),
                "trees": len(header.shells),
                "cells": len(header.cells()),
                "destinations": len(dests),
            }
            live_positions = [term.position_at(now) for _, term in group_members[g.group_id]]
            n_live = registry.terminal_count(g.group_id, now)
            for method in spec.methods:
                if method in BITSTRING_METHODS:
                    bit_rows.append({
                        "method": method,
                        "terminals": n_live,
                        "resolution": spec.resolution,
                        "bits": _bitstring_bits(method, header, n_live, live_positions,
                                                snapshot, spec),
                    })
            flagged = set()
            for sh in header.shells:
                flagged.update(sh.tree.dest_flags)
            tables = TableCache(snapshot, spec.resolution, header.cells(), flagged)
            for method in spec.methods:
                if method not in ROUTING_METHODS:
                    continue
                if method == "bierstar":
                    report = run_multicast(snapshot, header, src, dests,
                                           failed_links=failed_links,
                                           failed_sats=failed_sats,
                                           ttl=spec.ttl, tables=tables)
                else:
                    report = baselines.greedy_multicast(
                        _GREEDY_VARIANTS[method], src, dests, snapshot,
                        max_hops=max(spec.ttl, 64),
                        failed_links=failed_links, failed_sats=failed_sats)
                trace.reports[(g.group_id, method)] = report
                reach_rows.append({
                    "method": method,
                    "constellation": spec.name,
                    "seed": spec.seed,
                    "destinations": len(dests),
                    "reached": len(report.delivered_sats & dests),
                    "rate": round(reach_rate(report, dests), 6),
                })
        trace.rows["bitstring"] = bit_rows
        trace.rows["reach"] = reach_rows
        traces.append(trace)
    return RunResult(spec, traces)


def _bitstring_bits(method: str, header, n_live: int, positions: list[GeoPoint],
                    snapshot: Snapshot, spec: ScenarioSpec) -> int:
    if method == "bierstar":
        return header_bit_length(header)
    if method == "traditional":
        return baselines.traditional_bitstring_bits(n_live)
    if method == "geo_r0":
        return baselines.segmented_bitstring_bits(positions, baselines.GEO_R0).bits
    if method == "geo_r1":
        return baselines.segmented_bitstring_bits(positions, baselines.GEO_R1).bits
    if method == "satfoot":
        return baselines.segmented_bitstring_bits(
            positions, baselines.SAT_FOOT, snapshot, spec.elevation_mask_deg).bits
    raise BierStarError(f"not a bitstring method: {method}")


# ---------------------------------------------------------------------------
# TOML scenario parsing.
# ---------------------------------------------------------------------------


def _geopoint_from(v, where: str) -> GeoPoint:
    if isinstance(v, dict) and "lat" in v and "lon" in v:
        return GeoPoint(float(v["lat"]), float(v["lon"]))
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return GeoPoint(float(v[0]), float(v[1]))
    raise ScenarioError([f"{where}: expected {{lat=..., lon=...}} or [lat, lon], got {v!r}"])


def scenario_from_dict(data: dict, name_hint: str = "scenario") -> ScenarioSpec:
    problems: list[str] = []
    shells = []
    for i, sh in enumerate(data.get("constellation", ())):
        try:
            shells.append(ShellSpec(
                shell_id=int(sh.get("shell_id", i)),
                altitude_km=float(sh["altitude_km"]),
                inclination_deg=float(sh["inclination_deg"]),
                planes=int(sh["planes"]),
                sats_per_plane=int(sh["sats_per_plane"]),
                phasing_f=int(sh.get("phasing_f", 0)),
                pattern=Pattern(str(sh.get("pattern", "delta")).lower()),
            ))
        except (KeyError, ValueError, BierStarError) as exc:
            problems.append(f"constellation[{i}]: {exc}")
    tdata = data.get("terminals", {})
    params = tdata.get("params", {})
    try:
        terminals = TerminalsSpec(
            generator=str(tdata.get("generator", "uniform-sphere")),
            count=int(tdata.get("count", 0)),
            csv_path=tdata.get("csv_path"),
            centers=tuple(_geopoint_from(c, "terminals.centers") for c in params.get("centers", ())),
            sigma_km=float(params.get("sigma_km", 300.0)),
            start=_geopoint_from(params["start"], "terminals.start") if "start" in params else None,
            end=_geopoint_from(params["end"], "terminals.end") if "end" in params else None,
            width_km=float(params.get("width_km", 200.0)),
        )
    except ScenarioError as exc:
        problems.extend(exc.problems)
        terminals = TerminalsSpec("uniform-sphere", 0)
    groups = []
    for i, g in enumerate(data.get("groups", ())):
        src = g.get("source", {})
        gateway = None
        sat = None
        if isinstance(src, dict) and "sat" in src:
            v = src["sat"]
            sat = SatId(int(v[0]), int(v[1]), int(v[2])) if isinstance(v, (list, tuple)) \
                else SatId.parse(str(v))
        else:
            try:
                gateway = _geopoint_from(src, f"groups[{i}].source")
            except ScenarioError as exc:
                problems.extend(exc.problems)
        groups.append(GroupSpec(
            group_id=int(g.get("group_id", i + 1)),
            members=str(g.get("members", "all")),
            source_gateway=gateway,
            source_sat=sat,
        ))
    fdata = data.get("failures", {})
    spec = ScenarioSpec(
        name=str(data.get("name", name_hint)),
        seed=int(data["seed"]) if "seed" in data else None,
        resolution=data.get("resolution"),
        constellation=tuple(shells),
        terminals=terminals,
        groups=tuple(groups),
        epoch_s=float(data.get("epoch_s", 15.0)),
        duration_s=float(data.get("duration_s", data.get("epoch_s", 15.0))),
        ttl=int(data.get("ttl", 64)),
        elevation_mask_deg=float(data.get("elevation_mask_deg", 25.0)),
        failures=FailureSpec(str(fdata.get("model", "none")), float(fdata.get("rate", 0.0))),
        methods=tuple(str(m).lower() for m in data.get(
            "methods", ("bierstar", "traditional", "geo_r0", "geo_r1", "satfoot", "greedy"))),
        refresh_interval_s=float(data.get("refresh_interval_s", DEFAULT_REFRESH_INTERVAL_S)),
        timeout_s=float(data.get("timeout_s", DEFAULT_TIMEOUT_S)),
    )
    if problems:
        raise ScenarioError(problems)
    return spec


def load_scenario(path: str | Path) -> ScenarioSpec:
    import tomli

    p = Path(path)
    try:
        with open(p, "rb") as fh:
            data = tomli.load(fh)
    except FileNotFoundError:
        raise ScenarioError([f"scenario file not found: {p}"])
    except tomli.TOMLDecodeError as exc:
        raise ScenarioError([f"scenario file {p} is not valid TOML: {exc}"])
    return scenario_from_dict(data, p.stem)


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply `--set dotted.key=value` overrides onto the raw scenario dict."""
    import json

    out = data
    for ov in overrides:
        if "=" not in ov:
            raise ScenarioError([f"override {ov!r} is not key=value"])
        key, raw = ov.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            if part.isdigit():
                node = node[int(part)]
            else:
                node = node.setdefault(part, {})
        last = parts[-1]
        if last.isdigit() and isinstance(node, list):
            node[int(last)] = value
        else:
            node[last] = value
    return out
