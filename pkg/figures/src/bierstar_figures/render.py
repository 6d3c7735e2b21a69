"""Figure rendering from the simulator's CSV outputs.

The renderer draws CSV columns as-is: no aggregation, no derived metrics.
Output is deterministic for identical input (fixed committed style, no
timestamps in the image metadata), so CI can hash-compare the files.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE_FILE = Path(__file__).parent / "bierstar.mplstyle"

FIGURE_KINDS = ("bitstring", "dwell", "reach", "resilience")

REQUIRED_COLUMNS = {
    "bitstring": ["method", "terminals", "resolution", "bits"],
    "reach": ["method", "constellation", "seed", "destinations", "reached", "rate"],
    "dwell": ["constellation", "inclination_deg", "resolution",
              "analytic_s", "empirical_mean_s", "empirical_p90_s"],
    "resilience": ["constellation", "resolution",
                   "max_removable_links", "max_removable_nodes"],
}


class RenderError(Exception):
    """Missing input, missing columns, or an empty CSV."""


@dataclass(frozen=True)
class FigureSpec:
    figure: str               # one of FIGURE_KINDS
    csv_path: Path
    out_path: Path
    label: str = ""           # constellation/run label for the title


def read_rows(path: Path, kind: str) -> list[dict]:
    if not path.exists():
        raise RenderError(f"input CSV not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS[kind] if c not in cols]
        if missing:
            raise RenderError(f"{path} lacks columns {missing} (found {cols})")
        rows = list(reader)
    if not rows:
        raise RenderError(f"{path} has a header but no data rows")
    return rows


def _series(rows, key):
    """Row groups by a column, preserving first-seen order."""
    order = []
    groups: dict[str, list[dict]] = {}
    for row in rows:
        k = row[key]
        if k not in groups:
            groups[k] = []
            order.append(k)
        groups[k].append(row)
    return [(k, groups[k]) for k in order]


def build_bitstring(rows, label=""):
    fig, ax = plt.subplots()
    for method, group in _series(rows, "method"):
        pts = sorted((int(r["terminals"]), int(r["bits"])) for r in group)
        ax.plot([p[0] for p in pts], [max(p[1], 1) for p in pts],
                marker="o", label=method)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("terminals")
    ax.set_ylabel("header bits (worst-case segment)")
    ax.set_title(f"Bitstring size vs group size {label}".strip())
    ax.legend()
    return fig


def build_dwell(rows, label=""):
    fig, ax = plt.subplots()
    for incl, group in _series(rows, "inclination_deg"):
        pts = sorted((int(r["resolution"]), float(r["empirical_mean_s"]),
                      float(r["analytic_s"])) for r in group)
        xs = [p[0] for p in pts]
        ax.plot(xs, [p[1] for p in pts], marker="o", label=f"i={incl} measured")
        finite = [(x, a) for x, _, a in pts if math.isfinite(a)]
        if finite:
            ax.plot([f[0] for f in finite], [f[1] for f in finite],
                    linestyle="--", marker="x", label=f"i={incl} model")
    ax.set_yscale("log")
    ax.set_xlabel("cell resolution")
    ax.set_ylabel("dwell time (s)")
    ax.set_xticks(sorted({int(r["resolution"]) for r in rows}))
    ax.set_title(f"Cell dwell time vs resolution {label}".strip())
    ax.legend()
    return fig


def build_reach(rows, label=""):
    fig, ax = plt.subplots()
    methods = [m for m, _ in _series(rows, "method")]
    constellations = [c for c, _ in _series(rows, "constellation")]
    width = 0.8 / max(1, len(constellations))
    for ci, constellation in enumerate(constellations):
        xs, ys = [], []
        for mi, method in enumerate(methods):
            for row in rows:
                if row["method"] == method and row["constellation"] == constellation:
                    xs.append(mi + (ci - (len(constellations) - 1) / 2) * width)
                    ys.append(float(row["rate"]))
        ax.plot(xs, ys, linestyle="none", marker="o", alpha=0.7,
                label=constellation)
    ax.set_xticks(range(len(methods)))
    ax.set_xticklabels(methods, rotation=20, ha="right")
    ax.set_ylabel("reach rate")
    ax.set_ylim(-0.05, 1.1)
    ax.set_title(f"Reach rate per routing method {label}".strip())
    ax.legend()
    return fig


def build_resilience(rows, label=""):
    fig, ax = plt.subplots()
    constellations = [c for c, _ in _series(rows, "constellation")]
    links = []
    nodes = []
    for constellation in constellations:
        row = next(r for r in rows if r["constellation"] == constellation)
        links.append(int(row["max_removable_links"]))
        nodes.append(int(row["max_removable_nodes"]))
    xs = range(len(constellations))
    ax.bar([x - 0.18 for x in xs], links, width=0.36, label="removable ISLs")
    ax.bar([x + 0.18 for x in xs], nodes, width=0.36, label="removable satellites")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(constellations)
    ax.set_ylabel("max removable without disconnect")
    ax.set_title(f"Route-corridor resilience {label}".strip())
    ax.legend()
    return fig


BUILDERS = {
    "bitstring": build_bitstring,
    "dwell": build_dwell,
    "reach": build_reach,
    "resilience": build_resilience,
}


def render(spec: FigureSpec) -> Path:
    if spec.figure not in BUILDERS:
        raise RenderError(f"unknown figure kind {spec.figure!r} (known: {FIGURE_KINDS})")
    rows = read_rows(spec.csv_path, spec.figure)
    with plt.style.context(str(STYLE_FILE)):
        fig = BUILDERS[spec.figure](rows, spec.label)
        spec.out_path.parent.mkdir(parents=True, exist_ok=True)
        # Strip the Software tag so identical inputs give identical bytes.
        fig.savefig(spec.out_path, format="png", metadata={"Software": None})
        plt.close(fig)
    return spec.out_path
