import json
import math

import numpy as np
import pytest

from qrwsearch.coins import (
    NL_FIXED_ALPHA,
    CoinSpec,
    DependenceLaw,
    LawKind,
    apply_householder_block,
    coin_matrix,
    load_alpha_table,
    zeta_of_phi,
)
from qrwsearch.errors import ConfigurationError, InvalidDimensionError


def test_grover_coin_matrix():
    # phi = zeta = pi gives 2|chi><chi| - I
    m = 4
    expected = 2.0 * np.full((m, m), 1.0 / m) - np.eye(m)
    np.testing.assert_allclose(coin_matrix(math.pi, math.pi, m), expected, atol=1e-15)


def test_coin_is_unitary_for_random_phases():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        phi, zeta = rng.uniform(0, 2 * math.pi, size=2)
        m = int(rng.integers(2, 13))
        c = coin_matrix(phi, zeta, m)
        assert np.max(np.abs(c @ c.conj().T - np.eye(m))) < 1e-13


def test_phi_zero_is_global_phase():
    m = 5
    np.testing.assert_allclose(coin_matrix(0.0, 0.7, m), np.exp(0.7j) * np.eye(m), atol=1e-15)


def test_conjugate_symmetry():
    c = coin_matrix(1.1, 2.3, 4)
    mirrored = coin_matrix(-1.1, -2.3, 4)
    np.testing.assert_allclose(mirrored, c.conj(), rtol=0, atol=1e-15)


def test_block_application_matches_matrix():
    rng = np.random.default_rng(3)
    m = 6
    block = rng.normal(size=(m, 10)) + 1j * rng.normal(size=(m, 10))
    fast = apply_householder_block(block, 0.9, -1.4)
    np.testing.assert_allclose(fast, coin_matrix(0.9, -1.4, m) @ block, atol=1e-13)
    np.testing.assert_allclose(
        apply_householder_block(block[:, 0], 0.9, -1.4), fast[:, 0], atol=1e-15
    )


def test_coin_spec_rejects_small_m():
    with pytest.raises(InvalidDimensionError):
        CoinSpec(m=1, phi=math.pi, zeta=math.pi)


def test_zeta_laws_at_pi():
    for name in ("const", "linear", "nl-fixed"):
        assert zeta_of_phi(DependenceLaw.from_name(name), math.pi) == pytest.approx(math.pi, abs=1e-12)


def test_zeta_linear_values():
    law = DependenceLaw.from_name("linear")
    assert zeta_of_phi(law, 0.0) == pytest.approx(3 * math.pi)
    assert zeta_of_phi(law, 2 * math.pi) == pytest.approx(-math.pi)


def test_zeta_nonlinear_at_quarter_pi():
    law = DependenceLaw.from_name("nl-fixed")
    expected = -math.pi / 2 + 3 * math.pi + NL_FIXED_ALPHA
    assert zeta_of_phi(law, math.pi / 4) == pytest.approx(expected)
    assert zeta_of_phi(law, math.pi / 4) == pytest.approx(2.5 * math.pi - 1 / (2 * math.pi))


def test_zeta_array_input():
    phi = np.array([0.5, 1.0, 2.0])
    out = zeta_of_phi(DependenceLaw.from_name("const"), phi)
    assert out.shape == phi.shape
    np.testing.assert_allclose(out, math.pi)


def test_nl_ml_requires_alpha():
    with pytest.raises(ConfigurationError):
        DependenceLaw.from_name("nl-ml")
    law = DependenceLaw.from_name("nl-ml", {6: -0.2})
    assert law.kind is LawKind.NL_ML
    assert zeta_of_phi(law, math.pi / 4, 6) == pytest.approx(2.5 * math.pi - 0.2)
    with pytest.raises(ConfigurationError, match="m=7"):
        zeta_of_phi(law, 1.0, 7)


def test_unknown_law_name():
    with pytest.raises(ConfigurationError, match="Unknown dependence law"):
        DependenceLaw.from_name("quadratic")


def test_load_alpha_table(tmp_path):
    path = tmp_path / "alpha.json"
    path.write_text(json.dumps({"4": -0.1, "5": -0.2}), encoding="utf-8")
    assert load_alpha_table(str(path)) == {4: -0.1, 5: -0.2}
    assert load_alpha_table(None) is None
    with pytest.raises(ConfigurationError):
        load_alpha_table(str(tmp_path / "missing.json"))
    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_alpha_table(str(path))


def test_small_and_trivial_coins():
    np.testing.assert_allclose(coin_matrix(math.pi, math.pi, 2), [[0, 1], [1, 0]], atol=1e-15)
    np.testing.assert_allclose(coin_matrix(0.0, 0.0, 3), np.eye(3), atol=1e-15)
