"""Hamming neighborhoods of the marked node and neighbor-measurement aggregates."""

from __future__ import annotations
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import List

import numpy as np
from numpy.typing import NDArray

from .config import DISTRIBUTION_TOLERANCE
from .errors import DomainError, InvalidDimensionError, InvariantError

STRATEGIES = ("none", "first", "second")


@dataclass(frozen=True)
class NeighborAggregate:
    """Probability on the marked node, its first and second neighbors, and the rest."""

    p_marked: float
    p_first_sum: float
    p_second_sum: float
    residue: float
    counts: tuple

    @property
    def p_w(self) -> float:
        return self.p_marked

    @property
    def p_f(self) -> float:
        return self.p_marked + self.p_first_sum

    @property
    def p_s(self) -> float:
        return self.p_f + self.p_second_sum

    def as_dict(self) -> dict:
        return {
            "p_w": self.p_w,
            "p_f": self.p_f,
            "p_s": self.p_s,
            "p_marked": self.p_marked,
            "p_first_sum": self.p_first_sum,
            "p_second_sum": self.p_second_sum,
            "residue": self.residue,
            "counts": list(self.counts),
        }


@dataclass(frozen=True)
class MeasurementBudget:
    """Classical measurements and oracle calls for one run of a strategy."""

    strategy: str
    classical_measurements: int
    oracle_calls_per_run: int
    iterations: int

    @property
    def total_cost(self) -> int:
        """Iterations plus the extra measurements (k + m for the "first" strategy)."""
        return self.iterations + self.classical_measurements - 1


def _check_order(m: int, o: int) -> None:
    if m < 0 or not 0 <= o <= m:
        raise DomainError(f"Neighbor order must satisfy 0 <= o <= m (got m={m}, o={o})")


def neighbor_count(m: int, o: int) -> int:
    """
    Number of nodes at Hamming distance o, m! / ((m - o)! o!).

    Args:
        m: Coin size
        o: Neighbor order

    Returns:
        Binomial coefficient
    """
    _check_order(m, o)
    return math.comb(m, o)


def hamming_neighbors(j: int, m: int, o: int) -> List[int]:
    """
    All nodes at Hamming distance exactly o from node j.

    Args:
        j: Node index
        m: Coin size
        o: Neighbor order

    Returns:
        Sorted node list of length neighbor_count(m, o)
    """
    _check_order(m, o)
    if not 0 <= j < 2 ** m:
        raise DomainError(f"Node {j} outside [0, {2 ** m})")
    masks = (sum(1 << b for b in bits) for bits in combinations(range(m), o))
    return sorted(j ^ mask for mask in masks)


@lru_cache(maxsize=None)
def popcounts(m: int) -> NDArray[np.intp]:
    """Hamming weight of every node 0 .. 2^m - 1."""
    weights = np.zeros(2 ** m, dtype=np.intp)
    for bit in range(m):
        weights += (np.arange(2 ** m) >> bit) & 1
    weights.setflags(write=False)
    return weights


def aggregate(distribution, marked: int, m: int) -> NeighborAggregate:
    """
    Split a node distribution by Hamming distance to the marked node.

    Args:
        distribution: Node probabilities, length 2^m
        marked: Marked node
        m: Coin size

    Returns:
        NeighborAggregate
    """
    dist = np.asarray(distribution, dtype=np.float64)
    if dist.shape != (2 ** m,):
        raise InvariantError(f"Distribution for m={m} must have {2 ** m} entries, got {dist.shape}")
    if not 0 <= marked < 2 ** m:
        raise DomainError(f"Marked node {marked} outside [0, {2 ** m})")
    total = float(dist.sum())
    if abs(total - 1.0) > DISTRIBUTION_TOLERANCE:
        raise InvariantError(f"Distribution sums to {total!r}, expected 1")

    distance = popcounts(m)[np.arange(2 ** m) ^ marked]
    by_order = np.bincount(distance, weights=dist, minlength=m + 1)
    counts = tuple(neighbor_count(m, o) for o in range(min(m, 2) + 1))
    return NeighborAggregate(
        p_marked=float(by_order[0]),
        p_first_sum=float(by_order[1]),
        p_second_sum=float(by_order[2]) if m >= 2 else 0.0,
        residue=float(by_order[3:].sum()),
        counts=counts + (2 ** m - sum(counts),),
    )


def measurement_budget(m: int, strategy: str) -> MeasurementBudget:
    """
    Measurement count and oracle calls for a neighbor-measurement strategy.

    Args:
        m: Coin size
        strategy: "none", "first" or "second"

    Returns:
        MeasurementBudget
    """
    # local import: walk depends on this module
    from .walk import ORACLE_CALLS_PER_ITERATION, iteration_count

    if m < 2:
        raise InvalidDimensionError(f"Coin size m must be >= 2 (got {m})")
    if strategy not in STRATEGIES:
        raise DomainError(f"Unknown strategy '{strategy}'. Use one of {', '.join(STRATEGIES)}")
    measurements = 1
    if strategy in ("first", "second"):
        measurements += m
    if strategy == "second":
        measurements += m * (m - 1) // 2
    k = iteration_count(m)
    return MeasurementBudget(
        strategy=strategy,
        classical_measurements=measurements,
        oracle_calls_per_run=ORACLE_CALLS_PER_ITERATION * k,
        iterations=k,
    )
