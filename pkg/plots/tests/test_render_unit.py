import json

import matplotlib.pyplot as plt
import pytest

from fpplots import PlotSpec, SchemaError, build_figure, render_trajectories

HEADER = "k,s,v1,v2,vbar,e1,e2,qbar_max,qbar_min,qtilde1_max,qtilde2_max,gamma_min,gamma_max,V"


def write_csv(path, rows, header=HEADER):
    lines = [header]
    for k, s, v1, v2, vbar in rows:
        lines.append(",".join([str(k), str(s), repr(v1), repr(v2), repr(vbar)] + ["0.0"] * 9))
    path.write_text("\n".join(lines) + "\n")


def write_equilibrium(path, values):
    path.write_text(
        json.dumps(
            {
                "gamma": 0.8,
                "residual": 1e-12,
                "iterations": 30,
                "q_star": [[], []],
                "values": [values, [-v for v in values]],
                "strategies": [[], []],
            }
        )
    )


@pytest.fixture
def demo(tmp_path):
    csv_path = tmp_path / "run_0.csv"
    rows = []
    for j in range(1, 5):
        for s in (0, 1):
            rows.append((1000 * j, s, 0.5 / j, -0.4 / j, 0.1 / j))
    write_csv(csv_path, rows)
    eq_path = tmp_path / "equilibrium.json"
    write_equilibrium(eq_path, [0.25, -0.1])
    return csv_path, eq_path, tmp_path


def spec_for(demo, **kw):
    csv_path, eq_path, tmp_path = demo
    kw.setdefault("csv_paths", csv_path)
    kw.setdefault("equilibrium_path", eq_path)
    kw.setdefault("out_path", tmp_path / "fig.png")
    return PlotSpec(**kw)


def test_one_panel_per_state(demo):
    fig = build_figure(spec_for(demo))
    try:
        assert len(fig.axes) == 2
    finally:
        plt.close(fig)


def test_series_colors_and_reference_lines(demo):
    fig = build_figure(spec_for(demo))
    try:
        for ax in fig.axes:
            assert len(ax.lines) == 5
            dotted, series = ax.lines[:2], ax.lines[2:]
            assert all(line.get_linestyle() == ":" for line in dotted)
            assert [line.get_color() for line in series] == ["red", "blue", "green"]
    finally:
        plt.close(fig)


def test_reference_levels_match_the_equilibrium(demo):
    fig = build_figure(spec_for(demo))
    try:
        for ax, val in zip(fig.axes, (0.25, -0.1)):
            levels = sorted(line.get_ydata()[0] for line in ax.lines[:2])
            assert levels == sorted((val, -val))
    finally:
        plt.close(fig)


def test_states_filter_single_panel(demo):
    fig = build_figure(spec_for(demo, states=(0,)))
    try:
        assert len(fig.axes) == 1
        assert fig.axes[0].get_title() == "state 0"
    finally:
        plt.close(fig)


def test_unknown_state_rejected(demo):
    with pytest.raises(ValueError, match="state 7"):
        build_figure(spec_for(demo, states=(7,)))


def test_missing_column_is_named(demo):
    csv_path, eq_path, tmp_path = demo
    broken = tmp_path / "broken.csv"
    write_csv(broken, [], header=HEADER.replace("vbar,", ""))
    with pytest.raises(SchemaError, match="vbar"):
        build_figure(spec_for(demo, csv_paths=broken))


def test_missing_values_field_is_named(demo):
    csv_path, _, tmp_path = demo
    bad = tmp_path / "bad_eq.json"
    bad.write_text(json.dumps({"gamma": 0.8}))
    with pytest.raises(SchemaError, match="values"):
        build_figure(spec_for(demo, equilibrium_path=bad))


def test_header_only_csv_gives_empty_axes(demo):
    _, eq_path, tmp_path = demo
    empty = tmp_path / "empty.csv"
    write_csv(empty, [])
    fig = build_figure(spec_for(demo, csv_paths=empty))
    try:
        assert len(fig.axes) == 1
        assert len(fig.axes[0].lines) == 0
    finally:
        plt.close(fig)


def test_y_limits_applied(demo):
    fig = build_figure(spec_for(demo, y_limits=(-2.0, 2.0)))
    try:
        assert fig.axes[0].get_ylim() == (-2.0, 2.0)
    finally:
        plt.close(fig)


def test_several_csvs_overlay(demo):
    csv_path, eq_path, tmp_path = demo
    second = tmp_path / "run_1.csv"
    write_csv(second, [(1000, 0, 0.3, -0.3, 0.0), (1000, 1, 0.2, -0.2, 0.0)])
    fig = build_figure(spec_for(demo, csv_paths=(csv_path, second)))
    try:
        for ax in fig.axes:
            assert len(ax.lines) == 2 + 2 * 3
        legend = fig.axes[0].get_legend()
        assert len(legend.get_texts()) == 3
    finally:
        plt.close(fig)


def test_rendering_is_deterministic_and_read_only(demo):
    csv_path, eq_path, tmp_path = demo
    before = csv_path.read_bytes()
    out1 = render_trajectories(spec_for(demo, out_path=tmp_path / "a.png"))
    out2 = render_trajectories(spec_for(demo, out_path=tmp_path / "b.png"))
    assert out1.read_bytes() == out2.read_bytes()
    assert len(out1.read_bytes()) > 1000
    assert csv_path.read_bytes() == before
