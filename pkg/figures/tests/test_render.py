"""Renderer behavior: fidelity to CSV columns, determinism, failure modes."""
import csv
import hashlib
from pathlib import Path

import pytest

from bierstar_figures import FIGURE_KINDS, FigureSpec, RenderError, render
from bierstar_figures.render import BUILDERS, read_rows

FIXTURES = Path(__file__).parent.parent / "fixtures"


def spec(kind, tmp_path, csv_path=None):
    return FigureSpec(kind, csv_path or FIXTURES / f"{kind}.csv",
                      tmp_path / f"{kind}.png")


def test_all_four_kinds_render(tmp_path):
    for kind in FIGURE_KINDS:
        out = render(spec(kind, tmp_path))
        assert out.exists() and out.stat().st_size > 1000


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(RenderError):
        render(FigureSpec("pie", FIXTURES / "reach.csv", tmp_path / "x.png"))


def test_missing_file_rejected(tmp_path):
    with pytest.raises(RenderError):
        render(spec("reach", tmp_path, csv_path=tmp_path / "nope.csv"))


def test_missing_column_rejected(tmp_path):
    bad = tmp_path / "reach.csv"
    bad.write_text("method,constellation\nbierstar,tiny\n")
    with pytest.raises(RenderError) as err:
        render(spec("reach", tmp_path, csv_path=bad))
    assert "rate" in str(err.value)


def test_empty_csv_rejected(tmp_path):
    bad = tmp_path / "dwell.csv"
    bad.write_text("constellation,inclination_deg,resolution,analytic_s,"
                   "empirical_mean_s,empirical_p90_s\n")
    with pytest.raises(RenderError):
        render(spec("dwell", tmp_path, csv_path=bad))


def test_renderer_plots_exact_csv_values():
    # The bitstring builder must draw the CSV points untransformed.
    rows = read_rows(FIXTURES / "bitstring.csv", "bitstring")
    fig = BUILDERS["bitstring"](rows)
    by_method = {}
    for row in rows:
        by_method.setdefault(row["method"], []).append(
            (int(row["terminals"]), max(int(row["bits"]), 1)))
    drawn = {line.get_label(): sorted(zip(*line.get_data()))
             for ax in fig.axes for line in ax.lines}
    for method, pts in by_method.items():
        assert drawn[method] == sorted(pts)


def test_dwell_has_one_tick_per_resolution():
    rows = read_rows(FIXTURES / "dwell.csv", "dwell")
    fig = BUILDERS["dwell"](rows)
    ticks = list(fig.axes[0].get_xticks())
    assert ticks == sorted({int(r["resolution"]) for r in rows})


def test_reach_rates_drawn_verbatim():
    rows = read_rows(FIXTURES / "reach.csv", "reach")
    fig = BUILDERS["reach"](rows)
    drawn = sorted(y for ax in fig.axes for line in ax.lines
                   for y in line.get_data()[1])
    assert drawn == sorted(float(r["rate"]) for r in rows)


def test_deterministic_bytes(tmp_path):
    h = {}
    for attempt in ("a", "b"):
        d = tmp_path / attempt
        for kind in FIGURE_KINDS:
            out = render(FigureSpec(kind, FIXTURES / f"{kind}.csv",
                                    d / f"{kind}.png"))
            h.setdefault(kind, []).append(
                hashlib.sha256(out.read_bytes()).hexdigest())
    for kind, hashes in h.items():
        assert hashes[0] == hashes[1], kind


def test_cli_only_filter(tmp_path):
    from bierstar_figures.cli import main

    assert main([str(FIXTURES), str(tmp_path), "--only", "reach"]) == 0
    assert (tmp_path / "reach.png").exists()
    assert not (tmp_path / "bitstring.png").exists()


def test_cli_reports_missing_input(tmp_path):
    from bierstar_figures.cli import main

    assert main([str(tmp_path), str(tmp_path)]) == 1
