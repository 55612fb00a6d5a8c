"""
Quantum random walk search on the hypercube: state, iteration operators, runners.

The control qubit of the oracle is not stored. The sandwich oracle - coins -
oracle acts as a per-node conditional coin (traversing coin on unmarked nodes,
minus identity on marked nodes), so the simulator only keeps the coin x node
amplitudes, indexed (d, j) with d the coin direction and j the node.
"""

from __future__ import annotations
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import FrozenSet, Iterable, Optional, Union

import numpy as np
from numpy.typing import NDArray

from .coins import CoinSpec, DependenceLaw, apply_householder_block
from .config import NORM_TOLERANCE
from .errors import ConfigurationError, InvalidDimensionError, InvariantError
from .neighbors import popcounts

ORACLE_CALLS_PER_ITERATION = 2
STANDARD = "standard"
ALTERNATING = "alternating"
WITH_SHIFT = "with_shift"
LITERAL = "literal"


def _check_dimension(m: int) -> None:
    if m < 2:
        raise InvalidDimensionError(f"Coin size m must be >= 2 (got {m})")


@dataclass
class WalkState:
    """Amplitudes psi(d, j) stored as an (m, 2^m) complex array, d-major."""

    m: int
    amplitudes: NDArray[np.complex128]

    def __post_init__(self):
        _check_dimension(self.m)
        expected = (self.m, 2 ** self.m)
        if self.amplitudes.shape != expected:
            raise InvariantError(
                f"State for m={self.m} must have shape {expected}, got {self.amplitudes.shape}"
            )

    @property
    def n_nodes(self) -> int:
        return 2 ** self.m

    @property
    def vector(self) -> NDArray[np.complex128]:
        """Flat view of length m * 2^m, index d * 2^m + j."""
        return self.amplitudes.reshape(-1)

    def norm_squared(self) -> float:
        return float(np.vdot(self.vector, self.vector).real)

    def node_probabilities(self) -> NDArray[np.float64]:
        """p(j) = sum_d |psi(d, j)|^2."""
        return (np.abs(self.amplitudes) ** 2).sum(axis=0)


@dataclass(frozen=True)
class RunConfig:
    """
    One simulation run.

    ``iterations`` is a non-negative integer or "auto" (the optimal count for
    the standard runner, its even part for the alternating runner).
    """

    m: int
    marked: FrozenSet[int]
    coin: CoinSpec
    iterations: Union[int, str] = "auto"
    mode: str = STANDARD
    alternating_variant: str = WITH_SHIFT

    def __post_init__(self):
        _check_dimension(self.m)
        object.__setattr__(self, "marked", frozenset(int(h) for h in self.marked))
        bad = sorted(h for h in self.marked if not 0 <= h < 2 ** self.m)
        if bad:
            raise ConfigurationError(f"Marked node(s) {bad} outside [0, {2 ** self.m})")
        if self.coin.m != self.m:
            raise ConfigurationError(f"Coin size {self.coin.m} does not match m={self.m}")
        if self.mode not in (STANDARD, ALTERNATING):
            raise ConfigurationError(f"Unknown mode '{self.mode}'")
        if self.alternating_variant not in (WITH_SHIFT, LITERAL):
            raise ConfigurationError(f"Unknown alternating variant '{self.alternating_variant}'")
        if self.iterations != "auto" and (
            not isinstance(self.iterations, (int, np.integer)) or self.iterations < 0
        ):
            raise ConfigurationError(
                f"iterations must be a non-negative integer or 'auto' (got {self.iterations!r})"
            )

    @classmethod
    def from_law(
        cls,
        m: int,
        marked: Iterable[int],
        law: DependenceLaw,
        phi: float,
        **kwargs,
    ) -> "RunConfig":
        return cls(m=m, marked=frozenset(marked), coin=CoinSpec.from_law(m, law, phi), **kwargs)

    @property
    def marked_index(self) -> NDArray[np.intp]:
        return np.array(sorted(self.marked), dtype=np.intp)

    def resolved_iterations(self) -> int:
        if self.iterations != "auto":
            return int(self.iterations)
        k = iteration_count(self.m)
        if self.mode == ALTERNATING:
            return 2 * (k // 2)
        return k


@dataclass
class SimulationResult:
    """Outcome of a run: final node distribution and marked-probability trace."""

    m: int
    marked: FrozenSet[int]
    distribution: NDArray[np.float64]
    trace: NDArray[np.float64]
    oracle_calls: int
    iterations_run: int
    state: Optional[WalkState] = field(default=None, repr=False)

    @property
    def p_marked(self) -> float:
        return float(self.trace[-1])


def iteration_count(m: int) -> int:
    """
    Optimal number of standard iterations, ceil((pi / 2) sqrt(2^(m-1))).

    Args:
        m: Coin size

    Returns:
        Iteration count k
    """
    _check_dimension(m)
    return math.ceil((math.pi / 2.0) * math.sqrt(2 ** (m - 1)))


def uniform_initial_state(m: int) -> WalkState:
    """
    Equal-weight superposition over all (direction, node) pairs.

    Args:
        m: Coin size

    Returns:
        WalkState with every amplitude 1/sqrt(m 2^m)
    """
    _check_dimension(m)
    size = m * 2 ** m
    return WalkState(m, np.full((m, 2 ** m), 1.0 / math.sqrt(size), dtype=np.complex128))


@lru_cache(maxsize=None)
def _shift_targets(m: int) -> NDArray[np.intp]:
    # row d holds j XOR 2^d for every node j
    nodes = np.arange(2 ** m, dtype=np.intp)
    bits = (1 << np.arange(m, dtype=np.intp))[:, None]
    targets = nodes[None, :] ^ bits
    targets.setflags(write=False)
    return targets


def apply_conditional_coin(
    state: WalkState,
    coin: CoinSpec,
    marked: Union[Iterable[int], NDArray[np.intp]],
) -> WalkState:
    """
    Traversing coin on the coin block of every unmarked node, minus identity on
    marked nodes.

    Args:
        state: Current state
        coin: Traversing coin phases
        marked: Marked node indices

    Returns:
        New state
    """
    out = apply_householder_block(state.amplitudes, coin.phi, coin.zeta)
    if isinstance(marked, np.ndarray):
        index = marked.astype(np.intp, copy=False)
    else:
        index = np.array(sorted(marked), dtype=np.intp)
    if index.size:
        out[:, index] = -state.amplitudes[:, index]
    return WalkState(state.m, out)


def apply_shift(state: WalkState) -> WalkState:
    """
    Move the amplitude at (d, j) to (d, j XOR 2^d).

    Args:
        state: Current state

    Returns:
        Permuted state
    """
    # the map is an involution, so gathering from the targets equals scattering to them
    return WalkState(state.m, np.take_along_axis(state.amplitudes, _shift_targets(state.m), axis=1))


def standard_iteration(state: WalkState, config: RunConfig) -> WalkState:
    """One search iteration: conditional coin then shift (two oracle calls)."""
    return apply_shift(apply_conditional_coin(state, config.coin, config.marked_index))


def walk_only_iteration(state: WalkState, config: RunConfig) -> WalkState:
    """
    Oracle-free iteration.

    The "literal" variant applies the traversing coin to every block and
    nothing else; "with_shift" follows it with the shift.
    """
    coined = WalkState(
        state.m, apply_householder_block(state.amplitudes, config.coin.phi, config.coin.zeta)
    )
    if config.alternating_variant == LITERAL:
        return coined
    return apply_shift(coined)


def _marked_probability(state: WalkState, index: NDArray[np.intp]) -> float:
    if not index.size:
        return 0.0
    return float((np.abs(state.amplitudes[:, index]) ** 2).sum())


def _finish(state: WalkState, config: RunConfig, trace, oracle_calls: int) -> SimulationResult:
    drift = abs(state.norm_squared() - 1.0)
    if drift > 1e3 * NORM_TOLERANCE:
        raise InvariantError(f"Norm drifted by {drift:.3e} during the run")
    return SimulationResult(
        m=config.m,
        marked=config.marked,
        distribution=state.node_probabilities(),
        trace=np.asarray(trace, dtype=np.float64),
        oracle_calls=oracle_calls,
        iterations_run=len(trace) - 1,
        state=state,
    )


def run_standard(config: RunConfig) -> SimulationResult:
    """
    Uniform start followed by k standard iterations.

    Args:
        config: Run configuration

    Returns:
        SimulationResult; trace[i] is p(marked) after i iterations
    """
    index = config.marked_index
    state = uniform_initial_state(config.m)
    trace = [_marked_probability(state, index)]
    oracle_calls = 0
    for _ in range(config.resolved_iterations()):
        state = standard_iteration(state, config)
        oracle_calls += ORACLE_CALLS_PER_ITERATION
        trace.append(_marked_probability(state, index))
    return _finish(state, config, trace, oracle_calls)


def run_alternating(config: RunConfig) -> SimulationResult:
    """
    Standard iterations on odd iteration numbers (1, 3, 5, ...), walk-only
    iterations on even ones.

    Args:
        config: Run configuration (its mode is ignored)

    Returns:
        SimulationResult
    """
    index = config.marked_index
    state = uniform_initial_state(config.m)
    trace = [_marked_probability(state, index)]
    oracle_calls = 0
    if config.iterations == "auto":
        total = 2 * (iteration_count(config.m) // 2)
    else:
        total = int(config.iterations)
    for i in range(1, total + 1):
        if i % 2 == 1:
            state = standard_iteration(state, config)
            oracle_calls += ORACLE_CALLS_PER_ITERATION
        else:
            state = walk_only_iteration(state, config)
        trace.append(_marked_probability(state, index))
    return _finish(state, config, trace, oracle_calls)


def run(config: RunConfig) -> SimulationResult:
    """Dispatch on ``config.mode``."""
    if config.mode == ALTERNATING:
        return run_alternating(config)
    return run_standard(config)


def even_odd_deviation(trace, first: int = 1, last: Optional[int] = None) -> float:
    """
    Largest relative difference |p(2i) - p(2i+1)| / p(2i+1) over iterations.

    Args:
        trace: Marked probability per iteration (index 0 = initial state)
        first: First iteration considered
        last: Last iteration considered (default: end of trace)

    Returns:
        Maximum relative deviation (0.0 when no pair is in range)
    """
    trace = np.asarray(trace, dtype=np.float64)
    last = len(trace) - 1 if last is None else last
    worst = 0.0
    start = first if first % 2 == 0 else first + 1
    for even in range(start, last, 2):
        ref = trace[even + 1]
        diff = abs(trace[even] - ref)
        worst = max(worst, diff / ref if ref > 0 else diff)
    return worst


def parity_class_deviation(dist_a, dist_b, marked: int, m: int) -> float:
    """
    Max abs difference of two node distributions over the nodes whose
    Hamming weight has the same parity as the marked node.

    Args:
        dist_a: First distribution
        dist_b: Second distribution
        marked: Marked node
        m: Coin size

    Returns:
        Maximum absolute deviation on that parity class
    """
    weights = popcounts(m)
    same = (weights % 2) == (weights[marked] % 2)
    return float(np.max(np.abs(np.asarray(dist_a)[same] - np.asarray(dist_b)[same])))
