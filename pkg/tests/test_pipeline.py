from datetime import datetime, timedelta, timezone

import jsonschema
import numpy as np
import pytest

import synthdata
from windcm.config import load_config
from windcm.errors import ConfigError, UnknownIdError
from windcm.pipeline import Workspace, residuals_to_csv, scan_to_csv
from windcm.nbm import ScanRow
from windcm.report import render_report, report_schema

UTC = timezone.utc


@pytest.fixture(scope="module")
def config(tmp_path_factory):
    root = tmp_path_factory.mktemp("fleet")
    return load_config(synthdata.write_dataset(root))


@pytest.fixture(scope="module")
def ws(config):
    return Workspace(config)


def test_panel_and_failures(ws):
    panel = ws.panel()
    assert panel.turbines == ("A01", "A02", "A03")
    assert panel.sensors == ("temp", "speed")
    assert panel.grid.count == synthdata.N_STEPS
    failures = ws.failures()
    assert [f.turbine for f in failures] == ["A02", "A03"]
    assert failures[0].at == synthdata.A02_FAIL


def test_missing_input_is_config_error(config):
    broken = config.model_copy(update={
        "paths": config.paths.model_copy(update={"scada": "/nope/scada.csv"})})
    with pytest.raises(ConfigError, match="not found"):
        Workspace(broken).panel()


def test_periods_come_from_config(ws):
    train = ws.period("train")
    assert train.begin == datetime(2020, 1, 1, tzinfo=UTC)
    assert train.end == datetime(2020, 2, 1, tzinfo=UTC)
    both = ws.period("test1+2")
    assert both.begin == datetime(2020, 2, 1, tzinfo=UTC)
    assert both.end == datetime(2020, 3, 1, tzinfo=UTC)
    span = ws.full_span()
    assert span.begin == datetime(2020, 1, 1, tzinfo=UTC)
    assert span.end == datetime(2020, 3, 1, tzinfo=UTC)


def test_health_mask_windows(ws):
    mask = ws.mask()
    grid = ws.panel().grid

    def healthy(turbine, ts):
        ti = mask.turbines.index(turbine)
        return bool(mask.healthy[ti, grid.index_of(ts)])

    assert healthy("A01", datetime(2020, 1, 17, tzinfo=UTC))
    assert not healthy("A02", datetime(2020, 1, 17, tzinfo=UTC))
    assert healthy("A02", datetime(2020, 1, 25, tzinfo=UTC))
    assert not healthy("A03", datetime(2020, 2, 25, tzinfo=UTC))


def test_median_tracks_clean_signal(ws):
    median = ws.median()
    speed, temp = synthdata.signal_arrays()
    k = 3000    # inside the A02 drift, before its mask cuts in
    assert median.values[median.sensors.index("temp"), k] == pytest.approx(
        temp[0, k], abs=0.1)


def test_residuals_show_injected_drift(ws):
    res = ws.residual_series("A03")
    grid = ws.panel().grid
    lo = grid.index_of(synthdata.A03_DRIFT_START)
    hi = grid.index_of(synthdata.A03_FAIL)
    drift = res.values[lo:hi]
    drift = drift[~np.isnan(drift)]
    assert drift.mean() == pytest.approx(synthdata.A03_DRIFT, abs=0.1)
    clean = res.values[:lo - 144]
    clean = clean[~np.isnan(clean)]
    assert abs(clean.mean()) < 0.05
    with pytest.raises(UnknownIdError):
        ws.residual_series("A99")


def test_stability_flags_drift_only(ws):
    assert ws.stability("A01").passed
    report = ws.stability("A03")
    assert not report.mean_ok
    first = min(report.mean_violations)
    assert synthdata.A03_DRIFT_START <= first
    assert first < synthdata.A03_DRIFT_START + timedelta(hours=12)


def test_scan_rows(ws):
    rows = ws.scan(max_order=1)
    assert len(rows) == 4 * 3
    assert {r.period for r in rows} == {"train", "test1", "test2"}
    best = [r for r in rows if (r.n_daily, r.n_yearly) == (1, 0)
            and r.period == "train"]
    assert best[0].std < 0.5
    assert not best[0].error


def test_cusum_alarm_time_matches_drift_arithmetic(ws):
    trace, alarms = ws.cusum("A03", 500.0, "test2")
    assert len(alarms) == 1
    expected = synthdata.A03_DRIFT_START + timedelta(days=500 / 216.0)
    assert abs(alarms[0].at - expected) < timedelta(hours=6)
    assert alarms[0].sign == 1
    assert trace.segments[0].end_cause == "alarm"


def test_train_profiles(ws):
    profiles = {p.turbine: p for p in ws.profiles("train")}
    assert set(profiles) == {"A01", "A02", "A03"}
    assert np.all(profiles["A01"].cost == 0.0)
    assert np.all(profiles["A03"].cost == 0.0)
    a02 = profiles["A02"]
    assert a02.h_grid[0] == 200.0 and a02.h_grid.size == 10
    # step drift of 0.8 from Jan 10, failure Jan 20 08:00.  At h=200 the
    # first alarm lands on Jan 11 (eight whole days ahead); the restart
    # underestimates the shift, so a second climb fires again closer to
    # the failure and books a false alarm on top of the reward.
    assert a02.cost[0] == pytest.approx(-17000 * 8 / 60 + 2000)
    assert a02.cost[2] == pytest.approx(-17000 * 5 / 60)
    assert a02.cost[4] == pytest.approx(22000.0)    # alarm under 2 days out
    assert a02.cost[-1] == pytest.approx(20000.0)   # never fires: missed


def test_threshold_distribution(ws):
    dist = ws.distribution()
    assert dist.turbines == ("A01", "A02", "A03")
    assert dist.mass.sum() == pytest.approx(1.0, abs=1e-12)
    assert dist.mass[0] > dist.mass[-1]
    mean_h, std_h = ws.moments()
    assert 200 <= mean_h <= 2000
    assert std_h > 0


def test_baselines(ws):
    reactive = ws.baseline("reactive", "test2")
    assert reactive.total == 20000.0
    assert reactive.per_turbine == {"A01": 0.0, "A02": 0.0, "A03": 20000.0}
    maximal = ws.baseline("maximal", "test2")
    assert maximal.total == -17000.0
    assert maximal.truncated_total == pytest.approx(-17000 * 12 / 60)
    assert ws.baseline("reactive", "test1").total == 0.0
    assert ws.baseline("maximal", "train").total == -17000.0
    with pytest.raises(ConfigError):
        ws.baseline("optimal", "test2")


def test_random_policy_mean(ws):
    per, fleet = ws.random_policy("test2", n_samples=200)
    # healthy turbine: six inspection dates over sixty days, fifteen of
    # which fall in test2, each one a 2000 EUR false alarm
    assert per["A01"].stats.mean == pytest.approx(2000 * 6 * 15 / 60, abs=500)
    assert fleet.samples.shape == (200,)
    assert fleet.stats.mean == pytest.approx(
        sum(per[t].stats.mean for t in per), rel=1e-9)


def test_simulate_costs_follow_threshold_draws(ws):
    per, fleet = ws.simulate("test2", n_samples=50)
    assert np.all(per["A01"].samples == 0.0)
    a03 = per["A03"].samples
    # low draws detect the drift days ahead (reward), h=1800/2000 miss it
    assert a03.min() < 0.0
    assert set(np.round(a03[a03 > 0], 0)) <= {300.0, 20000.0, 22000.0}
    assert not np.isnan(per["A03"].mean_dt).all()


def test_simulate_processes_are_reproducible(config):
    a = Workspace(config).simulate("test2", n_samples=30)
    b = Workspace(config).simulate("test2", n_samples=30)
    assert np.array_equal(a[1].samples, b[1].samples)
    assert a[0]["A03"].draws == b[0]["A03"].draws


def test_report_bundle(ws):
    bundle = ws.report("test2", n_samples=60)
    jsonschema.validate(instance=bundle.document, schema=report_schema())
    policies = [r["policy"] for r in bundle.document["rows"]]
    assert policies == ["reactive", "random", "model", "maximal"]
    rows = {r["policy"]: r for r in bundle.document["rows"]}
    assert rows["reactive"]["mean_cents"] == 2000000
    assert rows["maximal"]["mean_cents"] == -1700000
    assert rows["reactive"]["n_fn"] == 1.0
    assert rows["model"]["n_fp"] >= 0.0
    assert set(bundle.histograms) == {"random", "model"}
    assert all(svg.startswith("<svg") for svg in bundle.histograms.values())
    assert bundle.distributions["model"][1].samples.shape == (60,)


def test_report_is_deterministic(config):
    first = Workspace(config).report("test1", n_samples=25)
    second = Workspace(config).report("test1", n_samples=25)
    assert render_report(first.document) == render_report(second.document)
    assert first.histograms == second.histograms


def test_scan_to_csv_format():
    rows = [
        ScanRow(n_daily=0, n_yearly=1, period="train", mean=0.5, std=1.25),
        ScanRow(n_daily=2, n_yearly=0, period="test1", mean=float("nan"),
                std=float("nan"), error="SingularityError: a, b"),
    ]
    text = scan_to_csv(rows)
    lines = text.splitlines()
    assert lines[0] == "n_daily,n_yearly,period,mean,std,error"
    assert lines[1] == "0,1,train,0.5,1.25,"
    assert lines[2] == "2,0,test1,,,SingularityError: a; b"


def test_residuals_to_csv(ws):
    text = residuals_to_csv(ws.residual_series("A01"))
    lines = text.splitlines()
    assert lines[0] == "timestamp,residual"
    assert len(lines) == synthdata.N_STEPS + 1
    assert lines[1].startswith("2020-01-01T00:00:00Z,")
    assert any(line.endswith(",") for line in lines[1:])    # gaps stay empty
