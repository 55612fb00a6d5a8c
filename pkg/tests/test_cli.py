import json

import pytest

from qrwsearch import cli
from qrwsearch.cli import build_parser, main
from qrwsearch.errors import FitFailure


def read(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_simulate_writes_summary(tmp_path, capsys):
    code = main(["simulate", "--m", "6", "--marked", "2", "--phi", "pi", "--output-dir", str(tmp_path)])
    assert code == 0
    summary = read(tmp_path / "summary_m6.json")
    assert summary["k"] == 9
    assert summary["oracle_calls"] == 18
    assert summary["p_w"] == pytest.approx(0.411765, abs=1e-4)
    assert summary["kind"] == "summary"
    assert (tmp_path / "distribution_m6.csv").exists()
    assert (tmp_path / "trace_m6.csv").exists()
    assert "P_W=0.41" in capsys.readouterr().out


def test_simulate_alternating_halves_oracle_calls(tmp_path):
    assert main(["simulate", "--m", "6", "--mode", "alternating", "--output-dir", str(tmp_path)]) == 0
    summary = read(tmp_path / "summary_m6.json")
    assert summary["oracle_calls"] == 8
    assert summary["p_w"] == pytest.approx(0.411765, abs=1e-4)


def test_invalid_size_exits_with_validation_code(tmp_path, capsys):
    assert main(["simulate", "--m", "1", "--output-dir", str(tmp_path)]) == 1
    assert "Error:" in capsys.readouterr().err


def test_usage_error_exits_with_validation_code():
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--law", "quadratic"])
    assert exc.value.code == 1


def test_missing_sweep_exits_with_artifact_code(tmp_path, capsys):
    assert main(["robustness", "--m", "7", "--law", "const", "--output-dir", str(tmp_path)]) == 3
    assert "run 'sweep --m 7 --law const' first" in capsys.readouterr().err


def test_level_aliases():
    args = build_parser().parse_args(["fit", "--m", "6", "--level", "none", "second"])
    assert args.levels == ["W", "S"]


def test_sweep_robustness_fit_lambda_pipeline(tmp_path):
    out = ["--m", "6", "--law", "linear", "--output-dir", str(tmp_path), "--jobs", "1", "--quiet"]
    assert main(["sweep", "--grid-step", "0.02", *out]) == 0
    assert (tmp_path / "sweep_m6_linear.csv").exists()

    assert main(["robustness", "--level", "W", *out]) == 0
    robustness = read(tmp_path / "robustness_m6_linear_W.json")
    assert robustness["p_max"] >= 0.4117
    assert robustness["epsilon"] > 0

    assert main(["fit", "--level", "W", *out]) == 0
    fit = read(tmp_path / "fit_m6_linear_W.json")
    assert fit["sigma"] < 0.05
    assert 0 < fit["b"] <= 1.05

    assert main(["lambda", "--grid-step", "0.02", *out]) == 0
    lam = read(tmp_path / "lambda_m6_linear.json")
    assert lam["interval"][0] == pytest.approx(3.141592653589793)
    assert (tmp_path / "lambda_m6_linear.csv").exists()


def test_extrapolate_published(tmp_path):
    args = ["extrapolate", "--m", "12", "--law", "nl-fixed", "--level", "W", "F", "--published",
            "--grid-step", "0.1", "--output-dir", str(tmp_path)]
    assert main(args) == 0
    data = read(tmp_path / "extrapolation_nl-fixed_F.json")
    assert data["source"] == "published"
    assert [row["m"] for row in data["series"]] == list(range(4, 13))
    assert data["series"][0]["ratio_simplified"] is not None
    assert (tmp_path / "prognosis_m12_nl-fixed_F.csv").exists()


def test_report_lists_missing_artifacts(tmp_path):
    assert main(["report", "--m", "4", "--output-dir", str(tmp_path), "--quiet"]) == 0
    report = read(tmp_path / "report.json")
    assert report["counts"]["pass"] > 0
    assert report["missing"]
    assert (tmp_path / "report.md").read_text(encoding="utf-8").startswith("# QRWS reproduction report")
    names = {(c["group"], c["name"]): c["status"] for c in report["checks"]}
    assert names[("neighbor-table", "p_marked")] == "pass"
    assert names[("robustness-order", "nl-ml >= nl-fixed, m=6")] == "skipped"


def test_failed_fit_does_not_stop_remaining_jobs(tmp_path, monkeypatch, capsys):
    out = ["--m-range", "4", "5", "--law", "const", "--output-dir", str(tmp_path), "--quiet"]
    assert main(["sweep", "--grid-step", "0.02", *out]) == 0
    real_fit = cli.hill_fit

    def flaky_fit(curve, window=None):
        if curve.m == 4 and curve.level == "S":
            raise FitFailure("did not converge", {"status": 0})
        return real_fit(curve, window)

    monkeypatch.setattr(cli, "hill_fit", flaky_fit)
    assert main(["fit", *out]) == 2
    assert not (tmp_path / "fit_m4_const_S.json").exists()
    for name in ("fit_m4_const_W.json", "fit_m4_const_F.json", "fit_m5_const_W.json", "fit_m5_const_S.json"):
        assert (tmp_path / name).exists()
    err = capsys.readouterr().err
    assert "fit: 1 job(s) failed" in err
    assert "m=4 const S: did not converge" in err


def test_extrapolate_reports_budget_and_simulated_points(tmp_path, monkeypatch):
    out = ["--m", "6", "--law", "const", "--level", "W", "--output-dir", str(tmp_path), "--quiet"]
    assert main(["sweep", "--grid-step", "0.05", *out]) == 0
    assert main(["robustness", *out]) == 0
    epsilon = read(tmp_path / "robustness_m6_const_W.json")["epsilon"]

    drawn = {}

    def spy(series, path, simulated=None):
        drawn.update(simulated or {})
        return path

    monkeypatch.setattr(cli.plots, "plot_robustness_series", spy)
    args = ["extrapolate", "--m", "8", "--law", "const", "--level", "W", "--published", "--plot",
            "--grid-step", "0.1", "--output-dir", str(tmp_path)]
    assert main(args) == 0
    assert drawn == {"const W": {6: epsilon}}
    rows = {row["m"]: row for row in read(tmp_path / "extrapolation_const_W.json")["series"]}
    assert rows[6]["measurements"] == 1
    assert rows[6]["total_cost"] == 9


def test_artifacts_are_byte_identical_across_runs(tmp_path):
    for run, jobs in (("a", "1"), ("b", "2"), ("c", "2")):
        out = ["--m", "4", "--law", "linear", "--output-dir", str(tmp_path / run), "--jobs", jobs, "--quiet"]
        assert main(["sweep", "--grid-step", "0.05", *out]) == 0
        assert main(["robustness", *out]) == 0
    for name in ("sweep_m4_linear.csv", "robustness_m4_linear_W.json", "robustness_m4_linear_S.json"):
        first = (tmp_path / "a" / name).read_bytes()
        assert (tmp_path / "b" / name).read_bytes() == first
        assert (tmp_path / "c" / name).read_bytes() == first
