import json
import math

import numpy as np
import pytest

from qrwsearch.artifacts import (
    SWEEP_HEADER,
    finite_or_none,
    read_csv,
    read_heatmap,
    read_json,
    read_sweep,
    sweep_name,
    write_csv,
    write_heatmap,
    write_json,
    write_sweep,
)
from qrwsearch.errors import MissingArtifactError, SchemaError
from qrwsearch.robustness import HeatmapResult, SweepResult, phi_grid


@pytest.fixture
def sweep():
    phi = phi_grid(0.5)
    p_w = 0.3 / (1.0 + (phi - math.pi) ** 2)
    return SweepResult(
        m=6, law="linear", marked=2, phi=phi, zeta=3 * math.pi - 2 * phi,
        p_w=p_w, p_f=2 * p_w, p_s=2.5 * p_w,
    )


def test_sweep_reads_back_exactly(tmp_path, sweep):
    path = write_sweep(tmp_path, sweep, "abc123", 0.5)
    assert path.name == sweep_name(6, "linear")
    loaded = read_sweep(tmp_path, 6, "linear")
    assert loaded.marked == 2
    np.testing.assert_array_equal(loaded.phi, sweep.phi)
    np.testing.assert_array_equal(loaded.p_s, sweep.p_s)

    meta, _ = read_csv(path, "sweep", SWEEP_HEADER, "sweep")
    assert meta["config_hash"] == "abc123"
    assert meta["grid_step"] == "0.5"


def test_corrupted_row_is_named(tmp_path, sweep):
    path = write_sweep(tmp_path, sweep, "", 0.5)
    lines = path.read_text(encoding="utf-8").splitlines()
    header_at = next(i for i, line in enumerate(lines) if not line.startswith("#"))
    lines[header_at + 3] = "1.0,2.0,oops,0.1,0.1"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(SchemaError, match="data row 3"):
        read_sweep(tmp_path, 6, "linear")


def test_short_row_is_rejected(tmp_path):
    path = write_csv(tmp_path / "t.csv", "trace", ["iteration", "p_marked"], [(0, 0.1), (1,)])
    with pytest.raises(SchemaError, match="data row 2"):
        read_csv(path, "trace", ["iteration", "p_marked"], "simulate")


def test_missing_artifact_names_producer(tmp_path):
    with pytest.raises(MissingArtifactError, match="run 'sweep --m 7 --law const' first"):
        read_sweep(tmp_path, 7, "const")
    with pytest.raises(MissingArtifactError):
        read_json(tmp_path / "fit.json", "hill_fit", "fit")


def test_kind_and_header_are_checked(tmp_path):
    path = write_csv(tmp_path / "x.csv", "trace", ["iteration", "p_marked"], [(0, 0.5)])
    with pytest.raises(SchemaError, match="expected a 'sweep' artifact"):
        read_csv(path, "sweep", SWEEP_HEADER, "sweep")
    with pytest.raises(SchemaError, match="header"):
        read_csv(path, "trace", ["step", "p"], "simulate")


def test_sweep_for_another_size_is_rejected(tmp_path, sweep):
    write_sweep(tmp_path, sweep, "", 0.5)
    (tmp_path / sweep_name(6, "linear")).rename(tmp_path / sweep_name(7, "linear"))
    with pytest.raises(SchemaError, match="m=6"):
        read_sweep(tmp_path, 7, "linear")


def test_json_is_deterministic(tmp_path):
    payload = {"z": 1, "a": np.float64(0.25), "n": np.arange(3)}
    first = write_json(tmp_path / "a.json", "summary", payload, "h").read_text(encoding="utf-8")
    second = write_json(tmp_path / "b.json", "summary", dict(reversed(list(payload.items()))), "h").read_text(
        encoding="utf-8"
    )
    assert first == second
    data = read_json(tmp_path / "a.json", "summary", "simulate")
    assert data["n"] == [0, 1, 2]
    assert data["schema_version"] == 1


def test_json_schema_version(tmp_path):
    path = tmp_path / "old.json"
    path.write_text(json.dumps({"kind": "summary", "schema_version": 0}), encoding="utf-8")
    with pytest.raises(SchemaError, match="schema_version"):
        read_json(path, "summary", "simulate")


def test_heatmap_layout(tmp_path):
    heatmap = HeatmapResult(
        m=4, marked=2, phi=np.array([1.0, 2.0]), zeta=np.array([0.0, 0.5, 1.0]),
        p_w=np.arange(6, dtype=float).reshape(2, 3) / 10,
    )
    write_heatmap(tmp_path, heatmap, "")
    loaded = read_heatmap(tmp_path, 4)
    np.testing.assert_array_equal(loaded.phi, heatmap.phi)
    np.testing.assert_array_equal(loaded.zeta, heatmap.zeta)
    np.testing.assert_array_equal(loaded.p_w, heatmap.p_w)


def test_finite_or_none():
    assert finite_or_none(float("nan")) is None
    assert finite_or_none(None) is None
    assert finite_or_none(0.5) == 0.5
