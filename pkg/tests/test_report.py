import xml.etree.ElementTree as ET

import jsonschema
import numpy as np
import pytest

from windcm.policies import CostDistribution, summarize
from windcm.costs import CostRules
from windcm.report import (
    ReferenceLines,
    build_report,
    emit_histogram,
    euros_to_cents,
    maximal_row,
    reactive_row,
    render_report,
    report_schema,
    row_from_distribution,
)

RULES = CostRules()


def make_dist():
    samples = np.array([10.0, 30.0])
    return CostDistribution(
        turbine="T01", seed=1, samples=samples,
        n_tp=np.array([1.0, 0.0]), n_fp=np.array([0.0, 2.0]),
        n_fn=np.array([0.0, 1.0]), mean_dt=np.array([5.0, np.nan]),
        stats=summarize(samples))


def test_euros_to_cents():
    assert euros_to_cents(123.45) == 12345
    assert euros_to_cents(-7900.0) == -790000
    assert euros_to_cents(316.666666) == 31667
    assert isinstance(euros_to_cents(0.0), int)


def test_row_from_distribution():
    row = row_from_distribution("random", "test2", make_dist())
    assert row.mean == 20.0
    assert row.std == 10.0
    assert row.min == 10.0
    assert row.mean_dt == 5.0          # NaN draws carry no lead time
    assert row.n_fp == 1.0
    assert row.n_fn == 0.5


def test_row_from_distribution_no_detections():
    dist = make_dist()
    dist = CostDistribution(
        turbine=dist.turbine, seed=dist.seed, samples=dist.samples,
        n_tp=dist.n_tp, n_fp=dist.n_fp, n_fn=dist.n_fn,
        mean_dt=np.array([np.nan, np.nan]), stats=dist.stats)
    assert row_from_distribution("random", "t", dist).mean_dt is None


def test_deterministic_rows():
    row = reactive_row("train", 40000.0, 2)
    assert (row.mean, row.std, row.min) == (40000.0, 0.0, 40000.0)
    assert row.mean_dt is None
    assert row.n_fn == 2.0
    row = maximal_row("train", -34000.0, 2, RULES)
    assert row.mean == -34000.0
    assert row.mean_dt == 60.0
    assert row.n_fp == 0.0 and row.n_fn == 0.0
    assert maximal_row("train", 0.0, 0, RULES).mean_dt is None


def test_build_report_matches_schema():
    rows = [
        reactive_row("test2", 60000.0, 3),
        maximal_row("test2", -51000.0, 3, RULES),
        row_from_distribution("random", "test2", make_dist()),
    ]
    doc = build_report("test2", rows, seed=42, n_samples=2)
    jsonschema.validate(instance=doc, schema=report_schema())
    assert doc["rows"][0]["mean_cents"] == 6000000
    assert doc["rows"][1]["min_cents"] == -5100000
    assert doc["rows"][2]["std_cents"] == 1000
    assert all(isinstance(r["mean_cents"], int) for r in doc["rows"])


def test_schema_rejects_malformed_documents():
    schema = report_schema()
    good = build_report("t", [reactive_row("t", 1.0, 0)])
    bad = dict(good, currency="EUR")
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(instance=bad, schema=schema)
    bad = dict(good, rows=[dict(good["rows"][0], mean_cents=1.5)])
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(instance=bad, schema=schema)
    row = dict(good["rows"][0])
    del row["n_fn"]
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(instance=dict(good, rows=[row]), schema=schema)


def test_render_report_stable():
    doc = build_report("t", [reactive_row("t", 12.34, 1)])
    text = render_report(doc)
    assert text == render_report(doc)
    assert text.endswith("\n")
    assert '"mean_cents": 1234' in text


# --- SVG histogram -------------------------------------------------------

def svg_elements(svg, tag):
    root = ET.fromstring(svg)
    ns = "{http://www.w3.org/2000/svg}"
    return [el for el in root.iter(ns + tag)]


def bar_rects(svg):
    return [el for el in svg_elements(svg, "rect")
            if el.get("fill") == "#7da7d9"]


def test_single_value_one_bar():
    svg = emit_histogram([250.0])
    bars = bar_rects(svg)
    assert len(bars) == 1
    assert float(bars[0].get("width")) > 0


def test_reference_lines_inside_axes():
    samples = np.linspace(0.0, 100.0, 50)
    svg = emit_histogram(
        samples, ReferenceLines(reactive=180.0, maximal=-90.0))
    lines = {el.get("stroke-dasharray"): el for el in svg_elements(svg, "line")
             if el.get("stroke-dasharray")}
    assert len(lines) == 2
    axis_x = sorted(float(el.get("x1")) for el in svg_elements(svg, "line")
                    if el.get("stroke-dasharray") is None
                    and el.get("x1") == el.get("x2"))
    left = axis_x[0]
    for el in lines.values():
        x = float(el.get("x1"))
        assert left <= x <= 640.0
    dashed = lines["7 4"]
    assert dashed.find("{http://www.w3.org/2000/svg}title").text == "reactive"


def test_default_bin_count():
    rng = np.random.default_rng(0)
    svg = emit_histogram(rng.normal(size=100))
    assert len(bar_rects(svg)) <= 10     # ceil(sqrt(100)) bins
    svg = emit_histogram(rng.normal(size=101))
    assert len(bar_rects(svg)) <= 11


def test_bimodal_shows_two_modes():
    rng = np.random.default_rng(3)
    samples = np.concatenate([
        rng.normal(-50.0, 5.0, 5000), rng.normal(50.0, 5.0, 5000)])
    svg = emit_histogram(samples)
    bars = sorted(bar_rects(svg), key=lambda el: float(el.get("x")))
    xs = np.array([float(el.get("x")) for el in bars])
    hs = np.array([float(el.get("height")) for el in bars])
    mid = (xs[0] + xs[-1]) / 2
    span = xs[-1] - xs[0]
    left_peak = hs[xs < mid - span / 6].max()
    right_peak = hs[xs > mid + span / 6].max()
    valley = hs[np.abs(xs - mid) < span / 8].max(initial=0.0)
    assert valley < 0.2 * min(left_peak, right_peak)


def test_histogram_deterministic():
    samples = np.arange(20.0)
    ref = ReferenceLines(reactive=25.0, maximal=-5.0)
    assert emit_histogram(samples, ref) == emit_histogram(samples, ref)


def test_mean_marker_present():
    svg = emit_histogram([0.0, 10.0])
    polys = svg_elements(svg, "polygon")
    assert len(polys) == 1
    title = polys[0].find("{http://www.w3.org/2000/svg}title").text
    assert title.startswith("mean ")


def test_histogram_rejects_bad_input():
    with pytest.raises(ValueError):
        emit_histogram([])
    with pytest.raises(ValueError):
        emit_histogram([1.0, np.nan])
    with pytest.raises(ValueError):
        emit_histogram([1.0], bins=0)
