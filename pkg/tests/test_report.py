import math

import numpy as np
import pytest

from qrwsearch import artifacts
from qrwsearch.hill import hill_eval
from qrwsearch.reference import FAIL, FINDING, PASS, SKIPPED, Check, published_lambda
from qrwsearch.report import (
    Report,
    check_alternating,
    check_extrapolation,
    check_fit_quality,
    check_heatmap,
    check_iteration_counts,
    check_neighbor_table,
    render_markdown,
)
from qrwsearch.robustness import SweepResult, phi_grid, sweep_heatmap


def test_check_compare():
    assert Check.compare("g", "x", 1.0, 1.0005, 1e-3).status == PASS
    assert Check.compare("g", "x", 1.0, 1.01, 1e-3).status == FAIL
    assert Check.skipped("g", "x", "alpha_ml not provided").status == SKIPPED


def test_published_lambda_lookup():
    assert published_lambda(6, "linear") == (0.003793, 0.005145)
    assert published_lambda(3, "linear") is None
    assert published_lambda(6, "const") is None


def test_reproduced_values_pass():
    report = Report()
    check_neighbor_table(report)
    check_iteration_counts(report)
    assert report.counts()[PASS] == len(report.checks)


def test_alternating_full_distribution_is_a_finding():
    report = Report()
    check_alternating(report, sizes=(4,))
    statuses = {c.name: c.status for c in report.checks}
    assert statuses["p(marked), m=4"] == PASS
    assert statuses["marked-parity distribution, m=4"] == PASS
    assert statuses["oracle calls, m=4"] == PASS
    assert statuses["full distribution, m=4"] == FINDING


def test_markdown_lists_missing():
    report = Report()
    report.add(Check.skipped("lambda", "Lambda1(m=4, nl-ml)", "alpha_ml not provided", 0.01755))
    report.missing.append("fit_m6_linear_W.json not found; run 'fit --m 6' first")
    text = render_markdown(report)
    assert "| lambda | Lambda1(m=4, nl-ml) | 0.01755 |" in text
    assert "## Missing artifacts" in text
    assert "skipped: 1" in text


def _const_sweep(peak):
    phi = phi_grid(0.01)
    p = hill_eval(phi, peak, 0.3, 4.0)
    return SweepResult(6, "const", 2, phi, np.full(phi.size, math.pi), p, p, p)


def test_peak_gap_is_a_finding(tmp_path):
    sweeps = {(6, "const"): _const_sweep(0.45)}
    window = [2 * math.pi / 3, 4 * math.pi / 3]
    artifacts.write_json(
        tmp_path / artifacts.fit_name(6, "const", "W"), "fit",
        {"b": 0.42, "kappa": 0.3, "eta": 4.0, "sigma": 0.01, "window": window},
    )
    report = Report()
    check_fit_quality(report, tmp_path, sweeps, ["const"])
    statuses = {c.name: c for c in report.checks}
    assert statuses["sigma, m=6 const W"].status == PASS
    gap = statuses["|b - max P|, m=6 const W"]
    assert gap.status == FINDING
    assert gap.measured == pytest.approx(0.03)
    assert "least-squares optimum" in gap.note


def test_extrapolation_miss_is_a_finding(tmp_path):
    artifacts.write_json(
        tmp_path / artifacts.extrapolation_name("const", "F"), "extrapolation",
        {"fitted_sizes": list(range(4, 11)), "series": [{"m": 11, "level": "F", "epsilon_tilde": 0.0225}]},
    )
    artifacts.write_json(tmp_path / artifacts.robustness_name(11, "const", "F"), "robustness", {"epsilon": 0.015})
    report = Report()
    check_extrapolation(report, tmp_path, ["const"], ["F"], 0.005)
    (check,) = report.checks
    assert check.status == FINDING
    assert "relative error 0.500" in check.note
    assert "3 grid step(s), 33% per step" in check.note
    assert "outside the fitted sizes 4..10" in check.note


def test_extrapolation_within_tolerance_passes(tmp_path):
    artifacts.write_json(
        tmp_path / artifacts.extrapolation_name("const", "W"), "extrapolation",
        {"fitted_sizes": list(range(4, 11)), "series": [{"m": 11, "level": "W", "epsilon_tilde": 0.021}]},
    )
    artifacts.write_json(tmp_path / artifacts.robustness_name(11, "const", "W"), "robustness", {"epsilon": 0.02})
    report = Report()
    check_extrapolation(report, tmp_path, ["const"], ["W"], 0.005)
    assert [c.status for c in report.checks] == [PASS]


def test_heatmap_phase_only_row(tmp_path):
    artifacts.write_heatmap(tmp_path, sweep_heatmap(4, [0.0, math.pi], [0.0, 1.0, 2.0]), "")
    report = Report()
    check_heatmap(report, tmp_path, [4, 5])
    assert [(c.name, c.status) for c in report.checks] == [("P_W at phi = 0, m=4", PASS)]

    broken = artifacts.read_heatmap(tmp_path, 4)
    broken.p_w[0, 1] += 0.01
    artifacts.write_heatmap(tmp_path, broken, "")
    report = Report()
    check_heatmap(report, tmp_path, [4])
    assert report.checks[0].status == FAIL
