"""Command-line entry point.

Subcommands map to the evaluation experiments and utilities; every experiment
reads a scenario file (TOML) plus optional `--set key=value` overrides and
writes stable-schema CSV files. Exit codes: 0 success, 1 validation error,
2 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import baselines, metrics, simcore
from .errors import BierStarError, ScenarioError
from .geogrid import (
    BASE32_HASH,
    HEX_HIER,
    QUAD_CUBE,
    bits_per_cell,
    cell_count,
    cell_index,
    key_of_cell,
    lat_lon_deg,
    neighbors,
)
from .geo import GeoPoint
from .membership import bulk_assign
from .orbit import Constellation, propagate, snapshot_to_rows
from .protocol import TableCache, encode, run_multicast

log = logging.getLogger("bierstar")

CSV_SCHEMAS = {
    "bitstring": ["method", "terminals", "resolution", "bits"],
    "reach": ["method", "constellation", "seed", "destinations", "reached", "rate"],
    "dwell": ["constellation", "inclination_deg", "resolution",
              "analytic_s", "empirical_mean_s", "empirical_p90_s"],
    "resilience": ["constellation", "resolution", "max_removable_links", "max_removable_nodes"],
    "snapshot": ["sat_id", "time_s", "lat", "lon", "alt_km"],
}


def write_csv(path: Path, kind: str, rows: list[dict], force: bool) -> None:
    if path.exists() and not force:
        raise BierStarError(f"{path} exists; pass --force to overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = CSV_SCHEMAS[kind]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for row in rows:
            w.writerow({c: row[c] for c in cols})
    log.info("wrote %s (%d rows)", path, len(rows))


def _load_spec(args) -> simcore.ScenarioSpec:
    import tomli

    with open(args.scenario, "rb") as fh:
        data = tomli.load(fh)
    if args.set:
        data = simcore.apply_overrides(data, args.set)
    spec = simcore.scenario_from_dict(data, Path(args.scenario).stem)
    problems = simcore.validate(spec)
    if problems:
        raise ScenarioError(problems)
    return spec


def cmd_constellation(args) -> int:
    spec = _load_spec(args)
    snap = propagate(Constellation(spec.constellation), args.time)
    write_csv(Path(args.out_dir) / "snapshot.csv", "snapshot",
              snapshot_to_rows(snap), args.force)
    return 0


def cmd_run(args) -> int:
    spec = _load_spec(args)
    result = simcore.run(spec)
    out = Path(args.out_dir)
    write_csv(out / "bitstring.csv", "bitstring", result.rows("bitstring"), args.force)
    write_csv(out / "reach.csv", "reach", result.rows("reach"), args.force)
    for tr in result.traces:
        log.info("epoch %d t=%.0fs: %d sats, %d ISLs, %d failed links, headers: %s",
                 tr.epoch, tr.time_s, tr.sat_count, tr.isl_count, tr.failed_links,
                 {g: h["bits"] for g, h in tr.headers.items()})
        for gid, reason in tr.skipped_groups:
            log.warning("epoch %d: group %d skipped (%s)", tr.epoch, gid, reason)
    return 0


def cmd_bitstring(args) -> int:
    spec = _load_spec(args)
    counts = [int(c) for c in args.counts.split(",")]
    rows: list[dict] = []
    for n in counts:
        terminals = dataclasses.replace(spec.terminals, count=n)
        sub = dataclasses.replace(spec, terminals=terminals,
                                  duration_s=spec.epoch_s)
        rows.extend(simcore.run(sub).rows("bitstring"))
    write_csv(Path(args.out_dir) / "bitstring.csv", "bitstring", rows, args.force)
    return 0


def cmd_reach(args) -> int:
    spec = _load_spec(args)
    rows: list[dict] = []
    for i in range(args.seeds):
        sub = dataclasses.replace(spec, seed=spec.seed + i, duration_s=spec.epoch_s)
        rows.extend(simcore.run(sub).rows("reach"))
    write_csv(Path(args.out_dir) / "reach.csv", "reach", rows, args.force)
    return 0


def cmd_dwell(args) -> int:
    spec = _load_spec(args)
    shell = spec.constellation[0]
    inclinations = ([float(x) for x in args.inclinations.split(",")]
                    if args.inclinations else [shell.inclination_deg])
    resolutions = [int(x) for x in args.resolutions.split(",")]
    rows: list[dict] = []
    for incl in inclinations:
        shell_i = dataclasses.replace(shell, inclination_deg=incl)
        con = Constellation((shell_i,) + spec.constellation[1:])
        duration = args.duration if args.duration else 2.0 * shell_i.period_s
        sample = metrics.default_dwell_sample(con, args.max_sats)
        for r in resolutions:
            analytic = metrics.dwelling_time_analytic(
                metrics.DwellParams(math.radians(incl), shell_i.altitude_km, r))
            emp = metrics.dwelling_time_empirical(con, r, duration, args.step, sample)
            rows.append({
                "constellation": spec.name,
                "inclination_deg": incl,
                "resolution": r,
                "analytic_s": "inf" if math.isinf(analytic) else round(analytic, 3),
                "empirical_mean_s": round(emp.mean_s, 3),
                "empirical_p90_s": round(emp.p90_s, 3),
            })
    write_csv(Path(args.out_dir) / "dwell.csv", "dwell", rows, args.force)
    return 0


def cmd_resilience(args) -> int:
    spec = _load_spec(args)
    snap = propagate(Constellation(spec.constellation), 0.0)
    terminals = simcore.build_terminals(spec)
    group = spec.groups[0]
    units = np.asarray([t.position_at(0.0).unit() for t in terminals])
    dests = {s for s in bulk_assign(units, snap, spec.elevation_mask_deg) if s is not None}
    if group.source_sat is not None:
        src = group.source_sat
    else:
        src = bulk_assign(np.asarray([group.source_gateway.unit()]), snap,
                          spec.elevation_mask_deg)[0]
    if src is None or not dests:
        raise BierStarError("resilience experiment needs a covered source and destinations")
    header = encode(snap, src, dests, spec.resolution, group.group_id)
    # Route corridor: every header cell plus its ring-1 neighborhood.
    cell_keys = set()
    for cell in header.cells():
        cell_keys.add(key_of_cell(cell))
        for nbr in neighbors(cell):
            cell_keys.add(key_of_cell(nbr))
    report = metrics.resilience(snap, src, dests, cell_keys, spec.resolution)
    rows = [{
        "constellation": spec.name,
        "resolution": spec.resolution,
        "max_removable_links": report.max_removable_links,
        "max_removable_nodes": report.max_removable_nodes,
    }]
    write_csv(Path(args.out_dir) / "resilience.csv", "resilience", rows, args.force)
    log.info("corridor subgraph: %d sats, %d ISLs; per-destination cuts: %s",
             report.subgraph_nodes, report.subgraph_edges,
             {str(k): v for k, v in sorted(report.per_destination_cuts.items())[:8]})
    return 0


def cmd_conformance(args) -> int:
    mismatches = 0
    total = 0
    with open(args.fixtures, newline="") as fh:
        reader = csv.DictReader(fh)
        needed = {"lat", "lon", "resolution", "expected_cell_index"}
        if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
            raise BierStarError(f"fixture file needs columns {sorted(needed)}")
        for row in reader:
            total += 1
            got = cell_index(GeoPoint(float(row["lat"]), float(row["lon"])),
                             int(row["resolution"])).index
            if got != int(row["expected_cell_index"]):
                mismatches += 1
                if mismatches <= 10:
                    log.error("mismatch at (%s, %s) r%s: expected %s got %d",
                              row["lat"], row["lon"], row["resolution"],
                              row["expected_cell_index"], got)
    # Closed-form counting cross-checks at the published comparison settings.
    checks = [
        (cell_count(HEX_HIER, 0), 122), (bits_per_cell(HEX_HIER, 0), 7),
        (cell_count(QUAD_CUBE, 3), 384), (bits_per_cell(QUAD_CUBE, 3), 9),
        (bits_per_cell(BASE32_HASH, 2), 10),
        (cell_count(lat_lon_deg(30.0)), 72), (bits_per_cell(lat_lon_deg(30.0)), 7),
    ]
    arith_bad = sum(1 for got, want in checks if got != want)
    print(f"conformance: {total - mismatches}/{total} vectors match, "
          f"{len(checks) - arith_bad}/{len(checks)} closed forms match")
    return 0 if mismatches == 0 and arith_bad == 0 else 1


def _default_fixtures() -> str:
    here = Path(__file__).resolve()
    for base in (here.parent.parent.parent.parent, Path.cwd()):
        cand = base / "tests" / "fixtures" / "grid_vectors.csv"
        if cand.exists():
            return str(cand)
    return "tests/fixtures/grid_vectors.csv"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bierstar",
        description="Deterministic LEO multicast simulator: cell-encoded "
                    "stateless forwarding versus bitstring and greedy baselines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True, help="scenario TOML file")
            p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                           help="override a scenario field (dotted path, repeatable)")
        p.add_argument("--out-dir", default="out", help="output directory (default: out)")
        p.add_argument("--force", action="store_true", help="overwrite existing output files")
        p.add_argument("--threads", type=int, default=1,
                       help="worker cap (current implementation is single-threaded)")

    p = sub.add_parser("constellation", help="dump a propagated snapshot CSV")
    common(p)
    p.add_argument("--time", type=float, default=0.0, help="epoch time in seconds")
    p.set_defaults(func=cmd_constellation)

    p = sub.add_parser("run", help="run a full scenario and write its metric CSVs")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bitstring", help="header-size experiment over terminal counts")
    common(p)
    p.add_argument("--counts", default="100,1000,10000",
                   help="comma-separated terminal counts")
    p.set_defaults(func=cmd_bitstring)

    p = sub.add_parser("reach", help="reach-rate experiment over seeded scenarios")
    common(p)
    p.add_argument("--seeds", type=int, default=20, help="number of seeded runs")
    p.set_defaults(func=cmd_reach)

    p = sub.add_parser("dwell", help="analytic and empirical cell dwell times")
    common(p)
    p.add_argument("--resolutions", default="0,1,2,3,4,5")
    p.add_argument("--inclinations", default=None,
                   help="comma-separated degrees (default: the shell's inclination)")
    p.add_argument("--duration", type=float, default=None,
                   help="tracking window seconds (default: two orbital periods)")
    p.add_argument("--step", type=float, default=1.0, help="sampling step seconds (<= 1)")
    p.add_argument("--max-sats", type=int, default=36,
                   help="satellite sample size for the empirical estimate")
    p.set_defaults(func=cmd_dwell)

    p = sub.add_parser("resilience", help="link/node removal tolerance on the route corridor")
    common(p)
    p.set_defaults(func=cmd_resilience)

    p = sub.add_parser("conformance", help="check grid fixtures and closed-form counts")
    common(p, scenario=False)
    p.add_argument("--fixtures", default=_default_fixtures(),
                   help="fixture CSV: lat,lon,resolution,expected_cell_index")
    p.set_defaults(func=cmd_conformance)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("BIERSTAR_LOG", "INFO").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        for problem in exc.problems:
            log.error("scenario: %s", problem)
        return 1
    except BierStarError as exc:
        log.error("%s", exc)
        return 1
    except Exception:  # pragma: no cover - unexpected runtime failure
        log.exception("unexpected failure")
        return 2


if __name__ == "__main__":
    sys.exit(main())
