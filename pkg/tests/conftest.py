"""Shared fixtures: dense reference operators and small sweeps."""

import math

import numpy as np
import pytest

from qrwsearch.coins import DependenceLaw, coin_matrix
from qrwsearch.robustness import ProbabilityCurve, phi_grid


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: multi-size sweeps (deselect with -m 'not slow')")


def dense_shift(m: int) -> np.ndarray:
    """Shift as an explicit permutation on the flat index d * 2^m + j."""
    n = 2 ** m
    size = m * n
    out = np.zeros((size, size))
    for d in range(m):
        for j in range(n):
            out[d * n + (j ^ (1 << d)), d * n + j] = 1.0
    return out


def dense_iteration(m: int, phi: float, zeta: float, marked) -> np.ndarray:
    """
    One search iteration built from full matrices: oracle, controlled coins,
    oracle, shift, on coin x node x control qubit, then restricted to control 0.
    """
    n = 2 ** m
    size = m * n
    c0 = coin_matrix(phi, zeta, m)
    c1 = -np.eye(m)
    # basis index: (d * n + j) * 2 + control
    oracle = np.eye(2 * size, dtype=complex)
    coins = np.zeros((2 * size, 2 * size), dtype=complex)
    for j in range(n):
        for d in range(m):
            for e in range(m):
                for c, coin in ((0, c0), (1, c1)):
                    coins[(d * n + j) * 2 + c, (e * n + j) * 2 + c] = coin[d, e]
        if j in marked:
            for d in range(m):
                a, b = (d * n + j) * 2, (d * n + j) * 2 + 1
                oracle[[a, b]] = oracle[[b, a]]
    shift = np.kron(dense_shift(m), np.eye(2))
    full = shift @ oracle @ coins @ oracle
    keep = np.arange(0, 2 * size, 2)
    return full[np.ix_(keep, keep)]


@pytest.fixture
def linear_law():
    return DependenceLaw.from_name("linear")


@pytest.fixture
def hill_curve():
    """Exact Hill curve b=0.45, kappa=0.8, eta=3 on the default grid."""
    phi = phi_grid(0.005)
    p = 0.45 / (1.0 + (np.abs(phi - math.pi) / 0.8) ** 3)
    return ProbabilityCurve(m=6, law="linear", level="W", phi=phi, p=p)


@pytest.fixture
def alpha_table(tmp_path):
    path = tmp_path / "alpha.json"
    path.write_text('{"4": -0.15, "5": -0.16, "6": -0.17}', encoding="utf-8")
    return str(path)
