"""Rendering from golden CSVs: every kind renders, data layer is reproducible."""

from pathlib import Path

import pytest

from optplot import EXPECTED_HEADERS, FigureSpec, SchemaError, build_figure, data_layer, render
from optplot.cli import main as cli_main
from optplot.figures import (
    convergence_data,
    margins_data,
    ratio_envelope_data,
    _read_table,
)

GOLDEN = Path(__file__).parent / "golden"

KIND_TO_GOLDEN = {
    "margins": GOLDEN / "conditions.csv",
    "ratio-envelope": GOLDEN / "ratio.csv",
    "histogram-grid": GOLDEN / "histograms.csv",
    "convergence": GOLDEN / "trace.csv",
}


@pytest.mark.parametrize("kind", sorted(KIND_TO_GOLDEN))
def test_each_kind_renders_from_golden(kind, tmp_path):
    out = tmp_path / f"{kind}.png"
    spec = FigureSpec(inputs=[KIND_TO_GOLDEN[kind]], kind=kind, output=out)
    path = render(spec)
    assert path.exists()
    assert path.stat().st_size > 1000


@pytest.mark.parametrize("kind", sorted(KIND_TO_GOLDEN))
def test_data_layer_is_pure_function_of_csv(kind, tmp_path):
    spec_a = FigureSpec(inputs=[KIND_TO_GOLDEN[kind]], kind=kind, output=tmp_path / "a.png")
    spec_b = FigureSpec(inputs=[KIND_TO_GOLDEN[kind]], kind=kind, output=tmp_path / "b.png")
    fig_a, fig_b = build_figure(spec_a), build_figure(spec_b)
    layer_a, layer_b = data_layer(fig_a), data_layer(fig_b)
    assert layer_a, "figure has an empty data layer"
    assert layer_a == layer_b
    # the written images agree byte for byte as well
    render(spec_a)
    render(spec_b)
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()


def test_schema_mismatch_names_missing_column(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("trial,n,delta,ratio\n0,1,1.0,1.0\n", encoding="utf-8")
    with pytest.raises(SchemaError, match="expected_delta"):
        render(FigureSpec(inputs=[bad], kind="ratio-envelope", output=tmp_path / "x.png"))


def test_schema_rejects_wrong_order(tmp_path):
    header = list(EXPECTED_HEADERS["ratio-envelope"])
    header[0], header[1] = header[1], header[0]
    bad = tmp_path / "bad.csv"
    bad.write_text(",".join(header) + "\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        render(FigureSpec(inputs=[bad], kind="ratio-envelope", output=tmp_path / "x.png"))


def test_empty_csv_rejected(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(SchemaError):
        render(FigureSpec(inputs=[empty], kind="margins", output=tmp_path / "x.png"))


def test_unknown_kind_rejected(tmp_path):
    with pytest.raises(ValueError):
        FigureSpec(inputs=[KIND_TO_GOLDEN["margins"]], kind="pie", output=tmp_path / "x.png")


def test_ratio_envelope_flat_at_one_for_degenerate_input(tmp_path):
    rows = ["trial,n,delta,expected_delta,ratio"]
    for t in range(3):
        rows.append(f"{t},1,0.25,0.25,1.0")
    flat = tmp_path / "flat.csv"
    flat.write_text("\n".join(rows) + "\n", encoding="utf-8")
    data = ratio_envelope_data(_read_table(flat, "ratio-envelope"))
    assert list(data["min"]) == list(data["mean"]) == list(data["max"]) == [1.0]


def test_histogram_bar_count_matches_csv_rows(tmp_path):
    columns = _read_table(KIND_TO_GOLDEN["histogram-grid"], "histogram-grid")
    n_rows = len(columns["count"])
    fig = build_figure(
        FigureSpec(inputs=[KIND_TO_GOLDEN["histogram-grid"]], kind="histogram-grid", output=tmp_path / "h.png")
    )
    bars = [entry for entry in data_layer(fig) if entry[0] == "bar"]
    assert len(bars) == n_rows


def test_margins_are_max_over_trials():
    columns = _read_table(KIND_TO_GOLDEN["margins"], "margins")
    data = margins_data(columns)
    # every per-trial margin is dominated by the reported max at its index
    import numpy as np

    idx = np.array([int(v) for v in columns["i"]])
    h1 = np.array([float(v) for v in columns["H1"]])
    b1 = np.array([float(v) for v in columns["bound1"]])
    for pos, i in enumerate(data["i"]):
        assert np.all(h1[idx == i] - b1[idx == i] <= data["H1"][pos] + 1e-15)
        assert np.any(h1[idx == i] - b1[idx == i] == data["H1"][pos])


def test_convergence_curves_labeled_per_algo(tmp_path):
    columns = _read_table(KIND_TO_GOLDEN["convergence"], "convergence")
    curves = convergence_data(columns)
    assert set(curves) == {"gd", "cna"}
    fig = build_figure(
        FigureSpec(inputs=[KIND_TO_GOLDEN["convergence"]], kind="convergence", output=tmp_path / "c.png")
    )
    ax = fig.axes[0]
    assert {t.get_text() for t in ax.get_legend().get_texts()} == {"gd", "cna"}
    assert ax.get_yscale() == "log"


def test_cli_renders_and_reports_path(tmp_path, capsys):
    out = tmp_path / "fig.png"
    code = cli_main(["convergence", "--in", str(KIND_TO_GOLDEN["convergence"]), "--out", str(out)])
    assert code == 0
    assert out.exists()
    assert capsys.readouterr().out.strip().endswith("fig.png")


def test_cli_schema_error_exit_code(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n", encoding="utf-8")
    assert cli_main(["margins", "--in", str(bad), "--out", str(tmp_path / "x.png")]) == 2
    assert cli_main(["margins", "--in", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "x.png")]) == 2


def test_acceptance_render_suite(tmp_path):
    # acceptance: each figure kind renders from its golden CSV without
    # error and the plot data layer is a pure function of the CSV
    ok = True
    for kind, golden in sorted(KIND_TO_GOLDEN.items()):
        out = tmp_path / f"{kind}.png"
        render(FigureSpec(inputs=[golden], kind=kind, output=out))
        ok = ok and out.exists()
        layer_a = data_layer(build_figure(FigureSpec(inputs=[golden], kind=kind, output=out)))
        layer_b = data_layer(build_figure(FigureSpec(inputs=[golden], kind=kind, output=out)))
        ok = ok and layer_a == layer_b
    print(f"ACCEPTANCE 12 figure kinds render purely from CSVs: {'PASS' if ok else 'FAIL'}")
    assert ok
