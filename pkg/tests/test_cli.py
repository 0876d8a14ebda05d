import json

import jsonschema
import pytest

import synthdata
from windcm.cli import main
from windcm.nbm import parse_model
from windcm.report import report_schema


@pytest.fixture(scope="module")
def setup(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    config = synthdata.write_dataset(root)
    return root, config


def run(config, *argv):
    return main(["--config", str(config), *argv])


def test_frankenstein(setup):
    root, config = setup
    assert run(config, "frankenstein") == 0
    text = (root / "out" / "frankenstein.csv").read_text()
    assert text.splitlines()[0] == "timestamp,coverage,temp,speed"
    assert len(text.splitlines()) == synthdata.N_STEPS + 1


def test_fit_roundtrip(setup):
    root, config = setup
    assert run(config, "fit") == 0
    model = parse_model((root / "out" / "model.nbm").read_text())
    assert model.target == "temp"
    assert model.n_daily == 2


def test_scan(setup):
    root, config = setup
    assert run(config, "scan", "--max-order", "1") == 0
    lines = (root / "out" / "scan.csv").read_text().splitlines()
    assert lines[0] == "n_daily,n_yearly,period,mean,std,error"
    assert len(lines) == 13


def test_residuals_and_cusum(setup, capsys):
    root, config = setup
    assert run(config, "residuals", "--turbine", "A02") == 0
    assert (root / "out" / "residuals_A02.csv").exists()
    assert run(config, "cusum", "--turbine", "A03", "--h", "500",
               "--period", "test2") == 0
    out = capsys.readouterr().out
    assert "1 alarm(s)" in out
    assert "2020-02-22" in out
    assert (root / "out" / "cusum_A03.csv").exists()


def test_profile_and_dist(setup, capsys):
    root, config = setup
    assert run(config, "profile", "--period", "train") == 0
    for turbine in synthdata.TURBINES:
        assert (root / "out" / f"profile_{turbine}.csv").exists()
    assert run(config, "dist") == 0
    assert (root / "out" / "dist.csv").read_text().startswith("h,p\n")
    assert "mean h:" in capsys.readouterr().out


def test_simulate_reruns_byte_identical(setup):
    root, config = setup
    sample_file = root / "out" / "samples_model_test2.csv"
    assert run(config, "simulate", "--period", "test2",
               "--n-samples", "25") == 0
    first = sample_file.read_bytes()
    assert run(config, "simulate", "--period", "test2",
               "--n-samples", "25") == 0
    assert sample_file.read_bytes() == first
    header = first.decode().splitlines()[0]
    assert header == "sample,turbine,draw,cost,n_tp,n_fp,n_fn,mean_dt"


def test_baseline_output(setup, capsys):
    root, config = setup
    assert run(config, "baseline", "reactive", "--period", "test2") == 0
    out = capsys.readouterr().out
    assert "A03: 20,000 EUR" in out
    assert "total: 20,000 EUR" in out
    assert run(config, "baseline", "maximal", "--period", "test2") == 0
    out = capsys.readouterr().out
    assert "total: -17,000 EUR" in out
    assert "truncated bound: -3,400 EUR" in out
    assert run(config, "baseline", "random", "--period", "test2",
               "--n-samples", "20") == 0
    assert (root / "out" / "samples_random_test2.csv").exists()


def test_report_artifacts(setup, capsys):
    root, config = setup
    assert run(config, "report", "--period", "test2",
               "--n-samples", "20") == 0
    out_dir = root / "out"
    document = json.loads((out_dir / "report_test2.json").read_text())
    jsonschema.validate(instance=document, schema=report_schema())
    assert [r["policy"] for r in document["rows"]] == [
        "reactive", "random", "model", "maximal"]
    for name in ("hist_random_test2.svg", "hist_model_test2.svg",
                 "samples_random_test2.csv", "samples_model_test2.csv"):
        assert (out_dir / name).exists()
    lines = capsys.readouterr().out.splitlines()
    assert sum("reactive" in line and "mean" in line for line in lines) == 1
    assert not list(out_dir.glob("*.tmp"))


def test_out_override(setup, tmp_path):
    _, config = setup
    assert main(["--config", str(config), "--out", str(tmp_path / "alt"),
                 "frankenstein"]) == 0
    assert (tmp_path / "alt" / "frankenstein.csv").exists()


def test_exit_codes(setup, tmp_path, capsys):
    root, config = setup
    assert main(["--config", str(tmp_path / "none.yaml"),
                 "frankenstein"]) == 2
    assert "cannot read" in capsys.readouterr().err
    bad = tmp_path / "bad.yaml"
    bad.write_text("paths: [not, a, mapping]\n")
    assert main(["--config", str(bad), "frankenstein"]) == 2
    assert run(config, "residuals", "--turbine", "A99") == 3
    assert "A99" in capsys.readouterr().err
    assert run(config, "simulate", "--period", "holidays",
               "--n-samples", "5") == 3
    assert main(["frankenstein"]) == 2
    assert "--config is required" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["--config", str(config)])     # missing subcommand
