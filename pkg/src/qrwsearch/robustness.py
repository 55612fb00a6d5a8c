"""Phase sweeps, robustness at a fraction of the peak, and fixed-interval lambda metrics."""

from __future__ import annotations
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import trapezoid
from tqdm import tqdm

from .coins import CoinSpec, DependenceLaw, zeta_of_phi
from .config import DEFAULT_GRID_STEP, DEFAULT_OMEGA, DEGENERATE_DENOMINATOR, LEVELS, TIE_TOLERANCE
from .errors import (
    ConfigurationError,
    DegenerateNormalizationError,
    EmptyCurveError,
    InsufficientResolutionError,
    InvariantError,
)
from .neighbors import aggregate
from .walk import RunConfig, run

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
DOMAIN = (0.0, TWO_PI)


@dataclass
class ProbabilityCurve:
    """Success probability sampled on a uniform, strictly increasing phi grid."""

    m: int
    law: str
    level: str
    phi: NDArray[np.float64]
    p: NDArray[np.float64]
    domain: Tuple[float, float] = DOMAIN

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=np.float64)
        self.p = np.asarray(self.p, dtype=np.float64)
        if self.phi.shape != self.p.shape or self.phi.ndim != 1:
            raise InvariantError("phi and p must be 1-D arrays of equal length")
        if self.level not in LEVELS:
            raise ConfigurationError(f"Unknown neighbor level '{self.level}'")
        if self.phi.size > 1:
            steps = np.diff(self.phi)
            if np.any(steps <= 0):
                raise InvariantError("phi grid must be strictly increasing")
            if np.ptp(steps) > 1e-12 * max(1.0, abs(steps[0])) + 1e-12:
                raise InvariantError("phi grid must be uniform")
        if self.p.size and (self.p.min() < -1e-12 or self.p.max() > 1.0 + 1e-9):
            raise InvariantError("probabilities must lie in [0, 1]")

    def __len__(self) -> int:
        return int(self.phi.size)

    @property
    def step(self) -> float:
        if self.phi.size < 2:
            raise InsufficientResolutionError("A single-point curve has no grid step")
        return float((self.phi[-1] - self.phi[0]) / (self.phi.size - 1))

    def window(self, lo: float, hi: float) -> "ProbabilityCurve":
        """Samples with lo < phi < hi."""
        keep = (self.phi > lo) & (self.phi < hi)
        return ProbabilityCurve(self.m, self.law, self.level, self.phi[keep], self.p[keep], self.domain)

    def value_at(self, phi: float, tol: float = 1e-9) -> float:
        i = int(np.argmin(np.abs(self.phi - phi)))
        if abs(self.phi[i] - phi) > tol:
            raise InsufficientResolutionError(f"phi={phi} is not a grid point")
        return float(self.p[i])


@dataclass
class SweepResult:
    """P_W, P_F and P_S along one dependence law for one coin size."""

    m: int
    law: str
    marked: int
    phi: NDArray[np.float64]
    zeta: NDArray[np.float64]
    p_w: NDArray[np.float64]
    p_f: NDArray[np.float64]
    p_s: NDArray[np.float64]

    def curve(self, level: str) -> ProbabilityCurve:
        values = {"W": self.p_w, "F": self.p_f, "S": self.p_s}
        if level not in values:
            raise ConfigurationError(f"Unknown neighbor level '{level}'")
        return ProbabilityCurve(self.m, self.law, level, self.phi, values[level])

    def curves(self, levels: Sequence[str] = LEVELS) -> Dict[str, ProbabilityCurve]:
        return {level: self.curve(level) for level in levels}


@dataclass
class HeatmapResult:
    """P_W on a phi x zeta grid, indexed [phi, zeta]."""

    m: int
    marked: int
    phi: NDArray[np.float64]
    zeta: NDArray[np.float64]
    p_w: NDArray[np.float64]


@dataclass(frozen=True)
class RobustnessReport:
    m: int
    law: str
    level: str
    omega: float
    phi_max: float
    p_max: float
    epsilon: float

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "law": self.law,
            "level": self.level,
            "omega": self.omega,
            "phi_max": self.phi_max,
            "p_max": self.p_max,
            "epsilon": self.epsilon,
        }


@dataclass
class LambdaReport:
    """Pointwise lambda curves (NaN where masked) and, once computed, their averages."""

    m: int
    law: str
    phi: NDArray[np.float64]
    lambda1: NDArray[np.float64]
    lambda2: NDArray[np.float64]
    capital_lambda1: Optional[float] = None
    capital_lambda2: Optional[float] = None
    interval: Optional[Tuple[float, float]] = None

    def restricted(self, lo: float, hi: float) -> "LambdaReport":
        """The curves on lo <= phi <= hi."""
        keep = (self.phi >= lo) & (self.phi <= hi)
        return LambdaReport(
            self.m, self.law, self.phi[keep], self.lambda1[keep], self.lambda2[keep],
            self.capital_lambda1, self.capital_lambda2, self.interval,
        )


def phi_grid(step: float = DEFAULT_GRID_STEP) -> NDArray[np.float64]:
    """
    Uniform grid pi + j * step inside the open interval (0, 2 pi).

    pi is always a grid point and every point has its mirror 2 pi - phi.

    Args:
        step: Grid step in radians

    Returns:
        Sorted phi values
    """
    if not 0 < step < math.pi:
        raise ConfigurationError(f"grid step must be in (0, pi) (got {step})")
    half = math.ceil(math.pi / step) - 1
    while half * step >= math.pi:
        half -= 1
    return math.pi + step * np.arange(-half, half + 1, dtype=np.float64)


def closed_grid(lo: float, hi: float, step: float) -> NDArray[np.float64]:
    """lo, lo + step, ... up to hi inclusive (within rounding)."""
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count, dtype=np.float64)


def _parallel_map(fn: Callable, items: List, jobs: int, desc: str, progress: bool) -> List:
    # order-preserving in both branches
    bar = tqdm(total=len(items), desc=desc, disable=not progress, leave=False)
    results = []
    try:
        if jobs > 1 and len(items) > 1:
            logger.debug("Fanning out %d jobs over %d workers", len(items), jobs)
            chunk = max(1, len(items) // (jobs * 8))
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for value in pool.map(fn, items, chunksize=chunk):
                    results.append(value)
                    bar.update(1)
        else:
            for item in items:
                results.append(fn(item))
                bar.update(1)
    finally:
        bar.close()
    return results


def _sweep_point(args) -> Tuple[float, float, float, float]:
    m, marked, law, phi, mode = args
    config = RunConfig.from_law(m, [marked], law, phi, mode=mode)
    agg = aggregate(run(config).distribution, marked, m)
    return config.coin.zeta, agg.p_w, agg.p_f, agg.p_s


def _heatmap_point(args) -> float:
    m, marked, phi, zeta = args
    config = RunConfig(m=m, marked=frozenset([marked]), coin=CoinSpec(m, phi, zeta))
    return float(run(config).distribution[marked])


def sweep_phi(
    m: int,
    law: DependenceLaw,
    marked: int = 2,
    grid_step: float = DEFAULT_GRID_STEP,
    levels: Sequence[str] = LEVELS,
    jobs: int = 1,
    progress: bool = False,
    mode: str = "standard",
    phis: Optional[Iterable[float]] = None,
) -> SweepResult:
    """
    Simulate the search at every grid phi with zeta = zeta(phi).

    Args:
        m: Coin size
        law: Dependence law
        marked: Marked node
        grid_step: Step of the symmetric phi grid
        levels: Levels the caller intends to use (all three are always computed)
        jobs: Worker processes
        progress: Show a progress bar
        mode: "standard" or "alternating"
        phis: Explicit grid instead of the symmetric default

    Returns:
        SweepResult in increasing phi order
    """
    for level in levels:
        if level not in LEVELS:
            raise ConfigurationError(f"Unknown neighbor level '{level}'")
    grid = phi_grid(grid_step) if phis is None else np.asarray(list(phis), dtype=np.float64)
    # resolve zeta once up front so a missing alpha_ml fails before any work
    zeta_of_phi(law, float(grid[0]), m)
    items = [(m, marked, law, float(phi), mode) for phi in grid]
    rows = _parallel_map(_sweep_point, items, jobs, f"sweep m={m} {law.name}", progress)
    zeta, p_w, p_f, p_s = (np.array(col, dtype=np.float64) for col in zip(*rows))
    return SweepResult(m, law.name, marked, grid, zeta, p_w, p_f, p_s)


def sweep_heatmap(
    m: int,
    phis: Iterable[float],
    zetas: Iterable[float],
    marked: int = 2,
    jobs: int = 1,
    progress: bool = False,
) -> HeatmapResult:
    """
    P_W over a phi x zeta grid.

    Args:
        m: Coin size
        phis: Householder phases
        zetas: Multiplier phases
        marked: Marked node
        jobs: Worker processes
        progress: Show a progress bar

    Returns:
        HeatmapResult with p_w[i, j] at (phis[i], zetas[j])
    """
    phis = np.asarray(list(phis), dtype=np.float64)
    zetas = np.asarray(list(zetas), dtype=np.float64)
    items = [(m, marked, float(phi), float(zeta)) for phi in phis for zeta in zetas]
    values = _parallel_map(_heatmap_point, items, jobs, f"heatmap m={m}", progress)
    grid = np.array(values, dtype=np.float64).reshape(phis.size, zetas.size)
    return HeatmapResult(m, marked, phis, zetas, grid)


def robustness_epsilon(curve: ProbabilityCurve, omega: float = DEFAULT_OMEGA) -> RobustnessReport:
    """
    Largest symmetric half-width around the peak where p >= omega * p_max.

    Ties for the peak are broken toward phi = pi. The width grows one grid
    step per side until a sample on either side drops below the bound
    (epsilon = distance to the last compliant sample) or the grid ends
    (epsilon = distance to the nearer domain edge).

    Args:
        curve: Probability curve
        omega: Fraction of the peak, in (0, 1)

    Returns:
        RobustnessReport
    """
    if len(curve) == 0:
        raise EmptyCurveError(f"Curve m={curve.m} {curve.law} {curve.level} has no samples")
    if not 0 < omega < 1:
        raise ConfigurationError(f"omega must be in (0, 1) (got {omega})")

    phi, p = curve.phi, curve.p
    ties = np.flatnonzero(p >= p.max() - TIE_TOLERANCE)
    i_max = int(ties[np.argmin(np.abs(phi[ties] - math.pi))])
    p_max = float(p[i_max])
    bound = omega * p_max

    k = 0
    while True:
        lo, hi = i_max - (k + 1), i_max + (k + 1)
        if lo < 0 or hi >= phi.size:
            epsilon = min(phi[i_max] - curve.domain[0], curve.domain[1] - phi[i_max])
            break
        if p[lo] < bound or p[hi] < bound:
            epsilon = phi[i_max + k] - phi[i_max]
            break
        k += 1

    return RobustnessReport(
        m=curve.m,
        law=curve.law,
        level=curve.level,
        omega=float(omega),
        phi_max=float(phi[i_max]),
        p_max=p_max,
        epsilon=float(epsilon),
    )


def _normalized(curve: ProbabilityCurve, i_pi: int) -> NDArray[np.float64]:
    reference = curve.p[i_pi]
    if reference < DEGENERATE_DENOMINATOR:
        raise DegenerateNormalizationError(
            f"P_{curve.level}(pi) = {reference:.3e} for m={curve.m} {curve.law}; cannot normalize"
        )
    return curve.p / reference


def _masked_ratio(num: NDArray[np.float64], den: NDArray[np.float64]) -> NDArray[np.float64]:
    out = np.full(num.shape, np.nan)
    ok = den >= DEGENERATE_DENOMINATOR
    np.divide(num, den, out=out, where=ok)
    return out


def lambda_curves(
    curve_w: ProbabilityCurve,
    curve_f: ProbabilityCurve,
    curve_s: ProbabilityCurve,
) -> LambdaReport:
    """
    lambda1 = (P_F / P_F(pi)) / (P_W / P_W(pi)) and
    lambda2 = (P_S / P_S(pi)) / (P_F / P_F(pi)).

    Points whose denominator is below 1e-12 are NaN.

    Args:
        curve_w: No-neighbor curve
        curve_f: First-neighbor curve
        curve_s: Second-neighbor curve

    Returns:
        LambdaReport (averages not yet computed)
    """
    curves = (curve_w, curve_f, curve_s)
    for c in curves[1:]:
        if c.m != curve_w.m or c.law != curve_w.law:
            raise InvariantError("lambda curves need the same m and law")
        if c.phi.shape != curve_w.phi.shape or not np.allclose(c.phi, curve_w.phi, rtol=0, atol=1e-12):
            raise InvariantError("lambda curves need a shared phi grid")
    if len(curve_w) == 0:
        raise EmptyCurveError("lambda curves need samples")

    i_pi = int(np.argmin(np.abs(curve_w.phi - math.pi)))
    if abs(curve_w.phi[i_pi] - math.pi) > 1e-9:
        raise InsufficientResolutionError("phi grid does not contain pi")

    w, f, s = (_normalized(c, i_pi) for c in curves)
    return LambdaReport(
        m=curve_w.m,
        law=curve_w.law,
        phi=curve_w.phi.copy(),
        lambda1=_masked_ratio(f, w),
        lambda2=_masked_ratio(s, f),
    )


def capital_lambda(phi, values, epsilon: float) -> float:
    """
    Average of a lambda curve over [pi, pi + epsilon], minus one.

    Trapezoid rule on the grid points inside the interval; the integral is
    divided by the integrated span, which is epsilon for grid-aligned epsilon.

    Args:
        phi: Grid
        values: lambda values on the grid
        epsilon: Half-width from the no-neighbor robustness

    Returns:
        Lambda average minus one
    """
    phi = np.asarray(phi, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    step = float((phi[-1] - phi[0]) / (phi.size - 1)) if phi.size > 1 else math.inf
    if epsilon < step * (1.0 - 1e-9):
        raise InsufficientResolutionError(
            f"epsilon={epsilon:.4g} is smaller than one grid step ({step:.4g})"
        )
    keep = (phi >= math.pi - 1e-9) & (phi <= math.pi + epsilon + 1e-9)
    x, y = phi[keep], values[keep]
    if x.size < 2:
        raise InsufficientResolutionError("fewer than two grid points in [pi, pi + epsilon]")
    if np.isnan(y).any():
        raise DegenerateNormalizationError("lambda is masked inside [pi, pi + epsilon]")
    return float(trapezoid(y, x) / (x[-1] - x[0]) - 1.0)


def lambda_report(sweep: SweepResult, epsilon_w: float) -> LambdaReport:
    """
    lambda curves of a sweep plus both averages over [pi, pi + epsilon_w].

    Args:
        sweep: Sweep with all three levels
        epsilon_w: No-neighbor robustness of the same sweep

    Returns:
        LambdaReport with capital_lambda1/2 filled in
    """
    report = lambda_curves(sweep.curve("W"), sweep.curve("F"), sweep.curve("S"))
    report.capital_lambda1 = capital_lambda(report.phi, report.lambda1, epsilon_w)
    report.capital_lambda2 = capital_lambda(report.phi, report.lambda2, epsilon_w)
    report.interval = (math.pi, math.pi + epsilon_w)
    return report
