"""
Modified Hill model of the success-probability curves.

W(phi) = b kappa^eta / (|phi - pi|^eta + kappa^eta): height b, plateau
half-width kappa, slope eta. Primary fits run per curve; secondary fits
describe b, kappa and eta as functions of the coin size m so robustness can
be extrapolated beyond simulable sizes.
"""

from __future__ import annotations
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import least_squares
from scipy.special import expit

from .coins import LawKind
from .config import DEFAULT_OMEGA, HILL_MAX_ITERATIONS, HILL_XTOL, MIN_FIT_POINTS, SECONDARY_MIN_SIZES
from .errors import (
    ConfigurationError,
    DomainError,
    ExtrapolationError,
    FitFailure,
    InsufficientResolutionError,
)
from .robustness import ProbabilityCurve

logger = logging.getLogger(__name__)

FULL_WINDOW = (0.0, 2.0 * math.pi)
CENTRAL_WINDOW = (2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)
MAX_PEAK = 1.05
PEAK_FLOOR = 1e-12
PARAMS = ("b", "kappa", "eta")
COEFFICIENTS = ("c1", "c2", "c3", "c4")
VALIDITY_RANGE = (4, 25)
KAPPA_C2_RANGE = (-2.0, 2.0)
KAPPA_C3_RANGE = (-6.0, 3.0)


@dataclass(frozen=True)
class HillParameters:
    b: float
    kappa: float
    eta: float

    def __post_init__(self):
        if not (self.kappa > 0 and self.eta > 0):
            raise DomainError(f"kappa and eta must be positive (got kappa={self.kappa}, eta={self.eta})")

    def evaluate(self, phi):
        return hill_eval(phi, self.b, self.kappa, self.eta)


@dataclass
class HillFit:
    """Least-squares Hill parameters for one curve."""

    m: int
    law: str
    level: str
    b: float
    kappa: float
    eta: float
    sigma: float
    window: Tuple[float, float]
    n_points: int = 0
    n_evaluations: int = 0
    bounded: bool = False

    @property
    def params(self) -> HillParameters:
        return HillParameters(self.b, self.kappa, self.eta)

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "law": self.law,
            "level": self.level,
            "b": self.b,
            "kappa": self.kappa,
            "eta": self.eta,
            "sigma": self.sigma,
            "window": list(self.window),
            "n_points": self.n_points,
            "n_evaluations": self.n_evaluations,
            "bounded": self.bounded,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "HillFit":
        return cls(
            m=int(data["m"]),
            law=str(data["law"]),
            level=str(data["level"]),
            b=float(data["b"]),
            kappa=float(data["kappa"]),
            eta=float(data["eta"]),
            sigma=float(data["sigma"]),
            window=(float(data["window"][0]), float(data["window"][1])),
            n_points=int(data.get("n_points", 0)),
            n_evaluations=int(data.get("n_evaluations", 0)),
            bounded=bool(data.get("bounded", False)),
        )


@dataclass(frozen=True)
class ParameterLaw:
    """
    One Hill parameter as a function of coin size x = m.

    b:     c1 / x + c2
    kappa: c1 e^(c2 x) x^c3 + c4
    eta:   c1 x^2 + c2 x + c3
    """

    param: str
    coefficients: Tuple[float, float, float, float]
    frozen: Tuple[str, ...] = ()
    sigma: float = 0.0

    def __post_init__(self):
        if self.param not in PARAMS:
            raise ConfigurationError(f"Unknown Hill parameter '{self.param}'")

    def evaluate(self, x):
        return _form_value(self.param, np.asarray(x, dtype=np.float64), self.coefficients)

    def as_dict(self) -> dict:
        data = dict(zip(COEFFICIENTS, self.coefficients))
        data.update({"param": self.param, "frozen": list(self.frozen), "sigma": self.sigma})
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> "ParameterLaw":
        return cls(
            param=str(data["param"]),
            coefficients=tuple(float(data.get(c, 0.0)) for c in COEFFICIENTS),
            frozen=tuple(data.get("frozen", ())),
            sigma=float(data.get("sigma", 0.0)),
        )


@dataclass
class SecondaryFit:
    """Secondary fits of all three Hill parameters for one law and level."""

    law: str
    level: str
    b: ParameterLaw
    kappa: ParameterLaw
    eta: ParameterLaw
    sizes: Tuple[int, ...] = ()
    source: str = "fitted"

    def laws(self) -> Dict[str, ParameterLaw]:
        return {"b": self.b, "kappa": self.kappa, "eta": self.eta}


def hill_eval(phi, b: float, kappa: float, eta: float):
    """
    Modified Hill function, symmetric about pi.

    Args:
        phi: Phase (scalar or array)
        b: Peak height
        kappa: Plateau half-width
        eta: Slope exponent

    Returns:
        b kappa^eta / (|phi - pi|^eta + kappa^eta), same shape as phi
    """
    if not (kappa > 0 and eta > 0):
        raise DomainError(f"kappa and eta must be positive (got kappa={kappa}, eta={eta})")
    ratio = np.abs(np.asarray(phi, dtype=np.float64) - math.pi) / kappa
    with np.errstate(over="ignore"):
        value = b / (1.0 + ratio ** eta)
    return float(value) if np.ndim(value) == 0 else value


def _hill_terms(x: NDArray, log_kappa: float, eta: float) -> Tuple[NDArray, NDArray]:
    # s = 1 / (1 + (|x|/kappa)^eta) and the log-ratio, with s = 1, lr = 0 at x = 0
    ax = np.abs(x)
    centre = ax == 0
    lr = np.zeros_like(ax)
    lr[~centre] = np.log(ax[~centre]) - log_kappa
    s = expit(-eta * lr)
    s[centre] = 1.0
    return s, lr


def _initial_guess(phi: NDArray, p: NDArray) -> Tuple[float, float, float]:
    i_max = int(np.argmax(p))
    b0 = float(p[i_max])
    half = b0 / 2.0
    lo = hi = i_max
    while lo > 0 and p[lo - 1] >= half:
        lo -= 1
    while hi < p.size - 1 and p[hi + 1] >= half:
        hi += 1
    step = float(phi[1] - phi[0])
    kappa0 = max((phi[hi] - phi[lo]) / 2.0, step)
    return b0, kappa0, 2.0


def window_for_law(law: str) -> Tuple[float, float]:
    """Central window for the constant law, the whole phase range otherwise."""
    return CENTRAL_WINDOW if law == LawKind.CONST.value else FULL_WINDOW


def hill_fit(curve: ProbabilityCurve, window: Optional[Tuple[float, float]] = None) -> HillFit:
    """
    Least-squares Hill fit of a probability curve.

    Levenberg-Marquardt over (b, ln kappa, ln eta) with an analytic Jacobian,
    starting from b = max P, kappa = half-width at half-maximum, eta = 2.
    When that optimum puts the peak outside (0, 1.05] (or does not
    converge), the fit is repeated with b bounded to that interval and the
    constrained optimum is returned with ``bounded=True``.

    Args:
        curve: Probability curve
        window: Open phi interval to fit (default: window_for_law)

    Returns:
        HillFit with sigma = sqrt(SSR / (N - 3))
    """
    window = window or window_for_law(curve.law)
    sub = curve.window(*window)
    if len(sub) < MIN_FIT_POINTS:
        raise InsufficientResolutionError(
            f"Only {len(sub)} samples in window ({window[0]:.4f}, {window[1]:.4f}); "
            f"need at least {MIN_FIT_POINTS}"
        )
    x = sub.phi - math.pi
    p = sub.p
    b0, kappa0, eta0 = _initial_guess(sub.phi, p)
    if b0 <= 0:
        raise FitFailure("Curve is zero everywhere in the window", {"m": curve.m, "law": curve.law})

    def residuals(theta):
        s, _ = _hill_terms(x, theta[1], math.exp(theta[2]))
        return theta[0] * s - p

    def jacobian(theta):
        b, eta = theta[0], math.exp(theta[2])
        s, lr = _hill_terms(x, theta[1], eta)
        slope = s * (1.0 - s)
        return np.column_stack([s, b * eta * slope, -b * eta * slope * lr])

    start = np.array([b0, math.log(kappa0), math.log(eta0)])
    tolerances = dict(xtol=HILL_XTOL, ftol=1e-15, gtol=1e-15, max_nfev=HILL_MAX_ITERATIONS)
    result = least_squares(residuals, start, jac=jacobian, method="lm", **tolerances)
    bounded = not _peak_ok(result)
    if bounded:
        # peak held inside (0, MAX_PEAK]; the returned fit is the constrained optimum
        logger.info(
            "Hill fit m=%d %s %s: unconstrained peak b=%.6g (status %d), refitting with b <= %g",
            curve.m, curve.law, curve.level, result.x[0], result.status, MAX_PEAK,
        )
        start[0] = min(max(b0, PEAK_FLOOR), MAX_PEAK)
        result = least_squares(
            residuals,
            start,
            jac=jacobian,
            method="trf",
            bounds=([PEAK_FLOOR, -np.inf, -np.inf], [MAX_PEAK, np.inf, np.inf]),
            **tolerances,
        )
    diagnostics = {
        "m": curve.m,
        "law": curve.law,
        "level": curve.level,
        "status": int(result.status),
        "nfev": int(result.nfev),
        "cost": float(result.cost),
        "start": [b0, kappa0, eta0],
        "bounded": bounded,
    }
    if result.status <= 0 or not _peak_ok(result):
        raise FitFailure(f"Hill fit did not converge: {result.message}", diagnostics)

    b, kappa, eta = float(result.x[0]), math.exp(result.x[1]), math.exp(result.x[2])
    ssr = float(np.sum(result.fun ** 2))
    sigma = math.sqrt(ssr / (p.size - 3))
    logger.debug(
        "Hill fit m=%d %s %s: b=%.6g kappa=%.6g eta=%.6g sigma=%.3g (%d evaluations)",
        curve.m, curve.law, curve.level, b, kappa, eta, sigma, result.nfev,
    )
    return HillFit(
        m=curve.m,
        law=curve.law,
        level=curve.level,
        b=b,
        kappa=kappa,
        eta=eta,
        sigma=sigma,
        window=(float(window[0]), float(window[1])),
        n_points=int(p.size),
        n_evaluations=int(result.nfev),
        bounded=bounded,
    )


def _peak_ok(result) -> bool:
    return (
        result.status > 0
        and bool(np.all(np.isfinite(result.x)))
        and 0 < result.x[0] <= MAX_PEAK
    )


def _form_value(param: str, x, c):
    c1, c2, c3, c4 = c
    if param == "b":
        return c1 / x + c2
    if param == "kappa":
        return c1 * np.exp(c2 * x) * x ** c3 + c4
    return c1 * x ** 2 + c2 * x + c3


def _linear_columns(param: str, x: NDArray) -> Dict[str, NDArray]:
    if param == "b":
        return {"c1": 1.0 / x, "c2": np.ones_like(x)}
    return {"c1": x ** 2, "c2": x, "c3": np.ones_like(x)}


def _sigma(residual: NDArray, n_free: int) -> float:
    dof = residual.size - n_free
    ssr = float(np.sum(residual ** 2))
    return math.sqrt(ssr / dof) if dof > 0 else 0.0


def fit_parameter_law(
    param: str,
    sizes: Sequence[float],
    values: Sequence[float],
    frozen: Optional[Mapping[str, float]] = None,
) -> ParameterLaw:
    """
    Fit one secondary form with optional frozen coefficients.

    b and eta are linear in their coefficients and solved directly; kappa
    uses Levenberg-Marquardt from c1 = mean(kappa) * mean(m), c2 = 0,
    c3 = -1, c4 = 0. If LM stops without converging, the fit is redone
    with bounds c1 >= 0, c2 in [-2, 2], c3 in [-6, 3] and
    |c4| <= max |kappa|; a bounded fit that exhausts its evaluation budget
    keeps its best point.

    Args:
        param: "b", "kappa" or "eta"
        sizes: Coin sizes
        values: Fitted parameter per coin size
        frozen: Coefficients held fixed, e.g. {"c2": 0.0}

    Returns:
        ParameterLaw
    """
    if param not in PARAMS:
        raise ConfigurationError(f"Unknown Hill parameter '{param}'")
    x = np.asarray(sizes, dtype=np.float64)
    y = np.asarray(values, dtype=np.float64)
    frozen = dict(frozen or {})
    unused = {"b": ("c3", "c4"), "eta": ("c4",), "kappa": ()}[param]
    for name in unused:
        frozen.setdefault(name, 0.0)
    free = [c for c in COEFFICIENTS if c not in frozen]
    if x.size < len(free):
        raise FitFailure(
            f"{x.size} coin sizes cannot determine {len(free)} coefficients of {param}(m)",
            {"param": param, "sizes": x.tolist()},
        )

    coefficients = {c: float(frozen.get(c, 0.0)) for c in COEFFICIENTS}
    if param in ("b", "eta"):
        columns = _linear_columns(param, x)
        target = y - sum(coefficients[c] * col for c, col in columns.items() if c in frozen)
        design = np.column_stack([columns[c] for c in free])
        solution, *_ = np.linalg.lstsq(design, target, rcond=None)
        coefficients.update(zip(free, (float(v) for v in solution)))
    else:
        start = {"c1": float(y.mean() * x.mean()), "c2": 0.0, "c3": -1.0, "c4": 0.0}

        def residuals(theta):
            trial = dict(coefficients)
            trial.update(zip(free, theta))
            return _form_value("kappa", x, tuple(trial[c] for c in COEFFICIENTS)) - y

        x0 = np.array([start[c] for c in free])
        budget = HILL_MAX_ITERATIONS * (len(free) + 1)
        with np.errstate(over="ignore", invalid="ignore"):
            result = least_squares(residuals, x0, method="lm", xtol=HILL_XTOL, max_nfev=budget)
            if result.status <= 0 or not np.all(np.isfinite(result.x)):
                # unbounded LM can slide toward c1 -> inf, c4 -> -inf with c2, c3 -> 0
                logger.info(
                    "kappa(m) LM fit stopped (status %d, %d evaluations); refitting with bounds",
                    result.status, result.nfev,
                )
                lower, upper = _kappa_bounds(free, y)
                result = least_squares(
                    residuals,
                    np.clip(x0, lower, upper),
                    method="trf",
                    bounds=(lower, upper),
                    xtol=HILL_XTOL,
                    max_nfev=budget,
                )
        diagnostics = {"frozen": sorted(frozen), "nfev": int(result.nfev), "status": int(result.status)}
        if result.status < 0 or not np.all(np.isfinite(result.x)) or not np.all(np.isfinite(result.fun)):
            raise FitFailure(f"kappa(m) fit did not converge: {result.message}", diagnostics)
        if result.status == 0:
            logger.warning(
                "kappa(m) fit hit its evaluation budget; keeping the best point (cost %.3g, frozen=%s)",
                result.cost, sorted(frozen) or "none",
            )
        coefficients.update(zip(free, (float(v) for v in result.x)))

    ordered = tuple(coefficients[c] for c in COEFFICIENTS)
    residual = _form_value(param, x, ordered) - y
    explicit = tuple(sorted(c for c in frozen if c not in unused))
    return ParameterLaw(param=param, coefficients=ordered, frozen=explicit, sigma=_sigma(residual, len(free)))


def _kappa_bounds(free: Sequence[str], values: NDArray) -> Tuple[NDArray, NDArray]:
    # c4 stays within the data scale so c1 e^(c2 m) m^c3 cannot cancel against it
    scale = float(np.max(np.abs(values)))
    limits = {
        "c1": (0.0, np.inf),
        "c2": KAPPA_C2_RANGE,
        "c3": KAPPA_C3_RANGE,
        "c4": (-scale, scale),
    }
    lower = np.array([limits[c][0] for c in free], dtype=np.float64)
    upper = np.array([limits[c][1] for c in free], dtype=np.float64)
    return lower, upper


def _kappa_valid(law: ParameterLaw) -> bool:
    grid = np.arange(VALIDITY_RANGE[0], VALIDITY_RANGE[1] + 1, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        values = law.evaluate(grid)
    return bool(np.all(np.isfinite(values)) and np.all(values > 0))


def _fit_kappa(sizes: NDArray, values: NDArray) -> ParameterLaw:
    candidates: List[ParameterLaw] = []
    failures = []
    for frozen in ({}, {"c2": 0.0}):
        try:
            candidates.append(fit_parameter_law("kappa", sizes, values, frozen))
        except FitFailure as e:
            failures.append(str(e))
    if not candidates:
        raise FitFailure("kappa(m) fit failed with c2 free and with c2 = 0", {"errors": failures})
    valid = [c for c in candidates if _kappa_valid(c)] or candidates
    best = min(valid, key=lambda c: c.sigma)
    logger.debug("kappa(m) model: frozen=%s sigma=%.3g", best.frozen or "none", best.sigma)
    return best


def secondary_fit(fits: Iterable[HillFit], law: Optional[str] = None, level: Optional[str] = None) -> SecondaryFit:
    """
    Fit b(m), kappa(m) and eta(m) across coin sizes.

    Args:
        fits: Primary fits of one law and level, one per coin size
        law: Expected law (default: taken from the fits)
        level: Expected level (default: taken from the fits)

    Returns:
        SecondaryFit
    """
    fits = sorted(fits, key=lambda f: f.m)
    if not fits:
        raise FitFailure("No primary fits to generalize", {})
    law = law or fits[0].law
    level = level or fits[0].level
    mixed = [f.m for f in fits if f.law != law or f.level != level]
    if mixed:
        raise ConfigurationError(f"Fits for m={mixed} do not belong to law {law}, level {level}")
    sizes = np.array([f.m for f in fits], dtype=np.float64)
    if len(set(sizes.tolist())) != sizes.size:
        raise ConfigurationError("Each coin size may appear only once in a secondary fit")
    if sizes.size < SECONDARY_MIN_SIZES:
        raise InsufficientResolutionError(
            f"Secondary fits need at least {SECONDARY_MIN_SIZES} coin sizes (got {sizes.size})"
        )
    return SecondaryFit(
        law=law,
        level=level,
        b=fit_parameter_law("b", sizes, [f.b for f in fits]),
        kappa=_fit_kappa(sizes, np.array([f.kappa for f in fits])),
        eta=fit_parameter_law("eta", sizes, [f.eta for f in fits]),
        sizes=tuple(int(s) for s in sizes),
    )


def extrapolate(secondary: SecondaryFit, m: int) -> HillParameters:
    """
    Hill parameters for coin size m from the secondary fits.

    Args:
        secondary: Secondary fits
        m: Coin size (>= 4)

    Returns:
        HillParameters; b may exceed 1 (see clamp_probability)
    """
    if m < VALIDITY_RANGE[0]:
        raise DomainError(f"Extrapolation needs m >= {VALIDITY_RANGE[0]} (got {m})")
    with np.errstate(over="ignore", invalid="ignore"):
        b, kappa, eta = (float(law.evaluate(float(m))) for law in (secondary.b, secondary.kappa, secondary.eta))
    if not (math.isfinite(kappa) and kappa > 0 and math.isfinite(eta) and eta > 0):
        raise ExtrapolationError(
            f"{secondary.law}/{secondary.level} secondary fit leaves its validity at m={m}: "
            f"kappa={kappa:.6g}, eta={eta:.6g}"
        )
    return HillParameters(b=b, kappa=kappa, eta=eta)


def clamp_probability(b: float, context: str = "") -> float:
    """Cap an extrapolated peak height at 1 when it is read as a probability."""
    if b > 1.0:
        logger.info("Clamping extrapolated peak b=%.6g to 1 %s", b, context)
        return 1.0
    return b


def prognosis(params: HillParameters, phis, context: str = "") -> NDArray[np.float64]:
    """Hill curve for extrapolated parameters with the peak clamped to 1."""
    return np.asarray(hill_eval(phis, clamp_probability(params.b, context), params.kappa, params.eta))


def epsilon_tilde(kappa: float, eta: float, omega: float = DEFAULT_OMEGA) -> float:
    """
    Robustness of a Hill curve, kappa ((1 - omega) / omega)^(1 / eta).

    Args:
        kappa: Plateau half-width
        eta: Slope exponent
        omega: Fraction of the peak

    Returns:
        Half-width in radians
    """
    if not (kappa > 0 and eta > 0):
        raise DomainError(f"kappa and eta must be positive (got kappa={kappa}, eta={eta})")
    if not 0 < omega < 1:
        raise DomainError(f"omega must be in (0, 1) (got {omega})")
    return kappa * ((1.0 - omega) / omega) ** (1.0 / eta)


def robustness_ratio(
    fit_a: HillParameters,
    fit_b: HillParameters,
    omega: float = DEFAULT_OMEGA,
    simplified: bool = False,
    law: Optional[str] = None,
) -> float:
    """
    epsilon_tilde(a) / epsilon_tilde(b).

    The simplified form kappa_a / kappa_b assumes near-square plateaus and is
    only offered for the nonlinear laws.

    Args:
        fit_a: Numerator parameters
        fit_b: Denominator parameters
        omega: Fraction of the peak
        simplified: Use the plateau-width ratio
        law: Dependence law of both fits (checked when simplified)

    Returns:
        Ratio of robustness values
    """
    if simplified:
        if law not in (LawKind.NL_FIXED.value, LawKind.NL_ML.value):
            raise ConfigurationError(
                f"The simplified robustness ratio is only valid for nonlinear laws (got {law}); "
                "use the full form"
            )
        return fit_a.kappa / fit_b.kappa
    if not 0 < omega < 1:
        raise DomainError(f"omega must be in (0, 1) (got {omega})")
    exponent = (fit_b.eta - fit_a.eta) / (fit_a.eta * fit_b.eta)
    return ((1.0 - omega) / omega) ** exponent * fit_a.kappa / fit_b.kappa


PREVIOUS_LEVEL = {"F": "W", "S": "F"}


def robustness_series(
    secondaries: Mapping[str, SecondaryFit],
    sizes: Iterable[int],
    omega: float = DEFAULT_OMEGA,
) -> List[dict]:
    """
    Extrapolated robustness per coin size and level, with ratios against the
    previous neighbor level where both are available.

    Args:
        secondaries: Secondary fits of one law keyed by level
        sizes: Coin sizes
        omega: Fraction of the peak

    Returns:
        Rows with m, level, b, kappa, eta, epsilon_tilde, ratio_full, ratio_simplified
    """
    rows = []
    for m in sizes:
        params = {level: extrapolate(sec, m) for level, sec in secondaries.items()}
        for level, sec in secondaries.items():
            p = params[level]
            row = {
                "m": int(m),
                "level": level,
                "b": p.b,
                "kappa": p.kappa,
                "eta": p.eta,
                "epsilon_tilde": epsilon_tilde(p.kappa, p.eta, omega),
                "ratio_full": None,
                "ratio_simplified": None,
            }
            previous = PREVIOUS_LEVEL.get(level)
            if previous in params:
                row["ratio_full"] = robustness_ratio(p, params[previous], omega)
                if sec.law in (LawKind.NL_FIXED.value, LawKind.NL_ML.value):
                    row["ratio_simplified"] = robustness_ratio(
                        p, params[previous], omega, simplified=True, law=sec.law
                    )
            rows.append(row)
    return rows
