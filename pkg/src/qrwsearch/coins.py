"""
Generalized Householder traversing coin and the phase-dependence laws.

The coin is e^{i zeta} (I - (1 - e^{i phi}) |chi><chi|) with |chi> the uniform
unit vector. It is never materialized on the fast path: with <chi|b> chi equal
to mean(b) in every component, one block costs O(m).
"""

from __future__ import annotations
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Optional

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError, InvalidDimensionError

TWO_PI = 2.0 * math.pi
NL_FIXED_ALPHA = -1.0 / (2.0 * math.pi)


class LawKind(str, Enum):
    """Functional dependence zeta(phi); values are the CLI names."""
    CONST = "const"
    LINEAR = "linear"
    NL_FIXED = "nl-fixed"
    NL_ML = "nl-ml"


@dataclass(frozen=True)
class CoinSpec:
    """Coin size and the two coin phases (radians)."""

    m: int
    phi: float
    zeta: float

    def __post_init__(self):
        if self.m < 2:
            raise InvalidDimensionError(f"Coin size m must be >= 2 (got {self.m})")

    @classmethod
    def grover(cls, m: int) -> "CoinSpec":
        """The phi = zeta = pi specialization."""
        return cls(m=m, phi=math.pi, zeta=math.pi)

    @classmethod
    def from_law(cls, m: int, law: "DependenceLaw", phi: float) -> "CoinSpec":
        return cls(m=m, phi=phi, zeta=zeta_of_phi(law, phi, m))

    def matrix(self) -> NDArray[np.complex128]:
        return coin_matrix(self.phi, self.zeta, self.m)

    def apply(self, block: NDArray[np.complex128]) -> NDArray[np.complex128]:
        return apply_householder_block(block, self.phi, self.zeta)


@dataclass(frozen=True)
class DependenceLaw:
    """
    A zeta(phi) law. ``alpha_ml`` maps coin size to the nonlinear coefficient
    and is required for the nl-ml kind only.
    """

    kind: LawKind
    alpha_ml: Optional[Mapping[int, float]] = None

    @classmethod
    def from_name(
        cls,
        name: str,
        alpha_ml: Optional[Mapping[int, float]] = None,
    ) -> "DependenceLaw":
        """
        Build a law from its CLI name.

        Args:
            name: One of const, linear, nl-fixed, nl-ml
            alpha_ml: Coin size -> alpha table (nl-ml only)

        Returns:
            DependenceLaw
        """
        try:
            kind = LawKind(name)
        except ValueError:
            allowed = ", ".join(k.value for k in LawKind)
            raise ConfigurationError(f"Unknown dependence law '{name}'. Use one of {allowed}")
        if kind is LawKind.NL_ML and not alpha_ml:
            raise ConfigurationError("Law 'nl-ml' requires an alpha_ml table")
        return cls(kind=kind, alpha_ml=dict(alpha_ml) if alpha_ml else None)

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def is_nonlinear(self) -> bool:
        return self.kind in (LawKind.NL_FIXED, LawKind.NL_ML)

    def alpha_for(self, m: Optional[int]) -> float:
        """
        Nonlinear coefficient for coin size m.

        Args:
            m: Coin size (needed for nl-ml only)

        Returns:
            alpha in zeta = -2 phi + 3 pi + alpha sin(2 phi)
        """
        if self.kind is LawKind.NL_FIXED:
            return NL_FIXED_ALPHA
        if self.kind is LawKind.NL_ML:
            if m is None or not self.alpha_ml or m not in self.alpha_ml:
                raise ConfigurationError(
                    f"alpha_ml not provided for coin size m={m}; "
                    "add it to the alpha table"
                )
            return float(self.alpha_ml[m])
        return 0.0


def zeta_of_phi(law: DependenceLaw, phi, m: Optional[int] = None):
    """
    Multiplier phase zeta for a Householder phase phi under a dependence law.

    Args:
        law: Dependence law
        phi: Householder phase (scalar or array), radians
        m: Coin size (required for nl-ml)

    Returns:
        zeta, not reduced modulo 2 pi
    """
    if law.kind is LawKind.CONST:
        return np.full_like(phi, math.pi, dtype=float) if np.ndim(phi) else math.pi
    linear = -2.0 * np.asarray(phi, dtype=float) + 3.0 * math.pi
    if law.kind is not LawKind.LINEAR:
        linear = linear + law.alpha_for(m) * np.sin(2.0 * np.asarray(phi, dtype=float))
    return float(linear) if np.ndim(phi) == 0 else linear


def apply_householder_block(block, phi: float, zeta: float) -> NDArray[np.complex128]:
    """
    Apply the generalized Householder coin to coin blocks.

    A 1-D input is one block of m amplitudes; a 2-D input of shape (m, N)
    holds N blocks as columns.

    Args:
        block: Coin amplitudes
        phi: Householder phase
        zeta: Multiplier phase (reduced into [-pi, pi] here)

    Returns:
        e^{i zeta} (block - (1 - e^{i phi}) <chi|block> chi)
    """
    block = np.asarray(block, dtype=np.complex128)
    multiplier = np.exp(1j * math.remainder(zeta, TWO_PI))
    reflection = 1.0 - np.exp(1j * phi)
    return multiplier * (block - reflection * block.mean(axis=0))


def coin_matrix(phi: float, zeta: float, m: int) -> NDArray[np.complex128]:
    """
    Dense m x m coin; used by the dense-operator cross-checks.

    Args:
        phi: Householder phase
        zeta: Multiplier phase
        m: Coin size

    Returns:
        Unitary matrix
    """
    if m < 2:
        raise InvalidDimensionError(f"Coin size m must be >= 2 (got {m})")
    chi = np.full(m, 1.0 / math.sqrt(m), dtype=np.complex128)
    projector = np.outer(chi, chi.conj())
    multiplier = np.exp(1j * math.remainder(zeta, TWO_PI))
    return multiplier * (np.eye(m, dtype=np.complex128) - (1.0 - np.exp(1j * phi)) * projector)


def load_alpha_table(path: Optional[str]) -> Optional[dict]:
    """
    Load an alpha_ml table stored as a JSON map {m: alpha}.

    Args:
        path: JSON file path, or None

    Returns:
        Dictionary mapping coin size to alpha, or None when no path is given
    """
    if not path:
        return None
    p = Path(path)
    if not p.exists():
        raise ConfigurationError(f"alpha table not found: {path}")
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
        return {int(k): float(v) for k, v in raw.items()}
    except (json.JSONDecodeError, AttributeError, TypeError, ValueError) as e:
        raise ConfigurationError(
            f"alpha table {path} must be a JSON object mapping coin size to alpha: {e}"
        ) from e
