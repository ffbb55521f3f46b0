import csv
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from socialrl.config import config_from_dict
from socialrl.harness import BatchResult, run_batch
from socialrl.output import combination_dirname, fmt_real, write_csv, write_traces
from socialrl.svg import ChartError, render_chart

SVG = "{http://www.w3.org/2000/svg}"


def small_cfg(**kw):
    doc = {"n_replications": 7, "horizon": 40}
    doc.update(kw)
    return config_from_dict(doc)


def read_rows(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.reader(fh))


def test_agents_csv_two_iterations_one_replication(tmp_path):
    res = BatchResult(np.array([1, 0]), None, 1, {})
    (path,) = write_csv(res, tmp_path)
    rows = read_rows(path)
    assert rows[0] == ["iteration", "non_addicted", "addicted", "fraction_non_addicted"]
    assert rows[1:] == [["0", "1", "0", "1"], ["1", "0", "1", "0"]]


def test_recommender_csv_has_one_row_per_iteration_and_arm(tmp_path):
    res = run_batch(small_cfg(), threads=1)
    agents, rec = write_csv(res, tmp_path)
    rows = read_rows(rec)
    assert rows[0] == ["iteration", "arm", "mean_q"]
    assert len(rows) - 1 == 4 * 40
    assert [(int(r[0]), int(r[1])) for r in rows[1:9]] == [(0, 0), (0, 1), (0, 2), (0, 3), (1, 0), (1, 1), (1, 2), (1, 3)]
    for r in rows[1:]:
        assert float(r[2]) == res.mean_q_arms[int(r[0]), int(r[1])]


def test_fraction_column_is_exact_ratio(tmp_path):
    res = run_batch(small_cfg(), threads=1)
    (agents, _) = write_csv(res, tmp_path)
    for it, na, ad, frac in read_rows(agents)[1:]:
        assert int(na) + int(ad) == 7
        assert float(frac) == int(na) / 7


def test_seventeen_digit_round_trip():
    for x in (0.1, 1 / 3, 2.0**-30, 123456.789, 0.0):
        assert float(fmt_real(x)) == x


def test_bytes_identical_on_rerun_with_lf_endings(tmp_path):
    cfg = small_cfg()
    write_csv(run_batch(cfg, threads=1), tmp_path / "a")
    write_csv(run_batch(cfg, threads=3), tmp_path / "b")
    for name in ("agents_evolution.csv", "recommender_q.csv"):
        data = (tmp_path / "a" / name).read_bytes()
        assert data == (tmp_path / "b" / name).read_bytes()
        assert b"\r" not in data


def test_traces_csv(tmp_path):
    res = run_batch(small_cfg(), threads=1, record_traces=True)
    rows = read_rows(write_traces(res, tmp_path))
    assert rows[0][:3] == ["replication", "t", "state"]
    assert len(rows) - 1 == 7 * 40
    with pytest.raises(ValueError):
        write_traces(run_batch(small_cfg(), threads=1), tmp_path)


def test_combination_dirname_sorted():
    assert combination_dirname((("mbus", 50), ("beta", 0.5))) == "beta=0.5_mbus=50"


# -- svg ---------------------------------------------------------------------------


def polylines(path):
    root = ET.parse(path).getroot()
    return root.findall(f".//{SVG}polyline")


def test_agents_chart_single_polyline(tmp_path):
    res = run_batch(small_cfg(), threads=1)
    agents, rec = write_csv(res, tmp_path)
    assert len(polylines(render_chart(agents, "agents_evolution", tmp_path / "a.svg"))) == 1
    assert len(polylines(render_chart(rec, "recommender_q", tmp_path / "q.svg"))) == 4


def test_constant_series_is_horizontal(tmp_path):
    (path,) = write_csv(BatchResult(np.array([3, 3, 3, 3]), None, 5, {}), tmp_path)
    (line,) = polylines(render_chart(path, "agents_evolution", tmp_path / "c.svg"))
    ys = {p.split(",")[1] for p in line.get("points").split()}
    assert len(ys) == 1


def test_padding_keeps_points_inside_plot(tmp_path):
    (path,) = write_csv(BatchResult(np.array([0, 5, 2]), None, 5, {}), tmp_path)
    (line,) = polylines(render_chart(path, "agents_evolution", tmp_path / "p.svg"))
    xs = [float(p.split(",")[0]) for p in line.get("points").split()]
    ys = [float(p.split(",")[1]) for p in line.get("points").split()]
    # plot box is x in [70, 590], y in [40, 365]; 5% of each span is padding
    # (coordinates are written with two decimals)
    assert xs[0] == pytest.approx(70 + 520 * 0.05 / 1.1, abs=0.01)
    assert min(ys) == pytest.approx(40 + 325 * 0.05 / 1.1, abs=0.01)


def test_schema_mismatch_and_empty(tmp_path):
    res = run_batch(small_cfg(), threads=1)
    agents, rec = write_csv(res, tmp_path)
    with pytest.raises(ChartError):
        render_chart(agents, "recommender_q", tmp_path / "x.svg")
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(ChartError):
        render_chart(empty, "agents_evolution", tmp_path / "y.svg")
    header_only = tmp_path / "header.csv"
    header_only.write_text("iteration,non_addicted,addicted,fraction_non_addicted\n")
    with pytest.raises(ChartError):
        render_chart(header_only, "agents_evolution", tmp_path / "z.svg")
