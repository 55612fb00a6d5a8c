"""Configuration settings for the QRWS toolkit."""

from __future__ import annotations
import ast
import hashlib
import json
import math
import operator
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, ClassVar, Dict, List, Mapping, Optional, Tuple

from dotenv import load_dotenv

from .errors import ConfigurationError, InvalidDimensionError

# Load environment variables from .env file
load_dotenv()

# Directory paths
PROJECT_ROOT = Path(__file__).parent.parent.parent
DATA_DIR = PROJECT_ROOT / "data"
REFERENCE_VALUES_PATH = Path(__file__).parent / "data" / "reference_values.json"

# Artifact settings
SCHEMA_VERSION = 1
OUTPUT_DIR = os.getenv("QRWS_OUTPUT_DIR", "results")

# Experiment defaults
DEFAULT_GRID_STEP = float(os.getenv("QRWS_GRID_STEP", "0.005"))
DEFAULT_OMEGA = float(os.getenv("QRWS_OMEGA", "0.9"))
DEFAULT_MARKED = int(os.getenv("QRWS_MARKED", "2"))
DEFAULT_JOBS = int(os.getenv("QRWS_JOBS", str(os.cpu_count() or 1)))
DEFAULT_ALPHA_TABLE = os.getenv("QRWS_ALPHA_TABLE") or None
DEFAULT_HEATMAP_STEP = 0.05

# Numerical tolerances
NORM_TOLERANCE = 1e-12
DISTRIBUTION_TOLERANCE = 1e-9
DEGENERATE_DENOMINATOR = 1e-12
TIE_TOLERANCE = 1e-12

# Hill fitting
HILL_XTOL = 1e-10
HILL_MAX_ITERATIONS = 500
MIN_FIT_POINTS = 10
SECONDARY_MIN_SIZES = 5

# Names accepted on the command line / in JSON
LAW_NAMES = ("const", "linear", "nl-fixed", "nl-ml")
LEVELS = ("W", "F", "S")
MODES = ("standard", "alternating")
VARIANTS = ("with_shift", "literal")


# Phase expressions ("pi", "2*pi/3", "-pi", "1.2")
_BINARY_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
}
_UNARY_OPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def parse_phase(text: Any) -> float:
    """
    Parse a phase given as a number or a simple expression in ``pi``.

    Only numbers, the name ``pi``, ``+ - * /`` and parentheses are allowed.

    Args:
        text: Number or expression string

    Returns:
        Phase in radians
    """
    if isinstance(text, (int, float)):
        return float(text)

    def _eval(node: ast.AST) -> float:
        if isinstance(node, ast.Expression):
            return _eval(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINARY_OPS:
            return _BINARY_OPS[type(node.op)](_eval(node.left), _eval(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY_OPS:
            return _UNARY_OPS[type(node.op)](_eval(node.operand))
        raise ValueError("unsupported token")

    try:
        return _eval(ast.parse(str(text).strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError) as e:
        raise ConfigurationError(
            f"Cannot parse phase '{text}': use a number or an expression like '2*pi/3'"
        ) from e


@dataclass
class ExperimentConfig:
    """
    Validated configuration shared by all subcommands.

    Values come from defaults, then an optional JSON file, then CLI flags.
    All computation is deterministic, so there is no seed.
    """

    m: Optional[int] = None
    m_range: Optional[Tuple[int, int]] = None
    laws: Optional[Tuple[str, ...]] = None
    alpha_table: Optional[str] = DEFAULT_ALPHA_TABLE
    marked: int = DEFAULT_MARKED
    levels: Tuple[str, ...] = LEVELS
    grid_step: float = DEFAULT_GRID_STEP
    heatmap_step: float = DEFAULT_HEATMAP_STEP
    omega: float = DEFAULT_OMEGA
    mode: str = "standard"
    variant: str = "with_shift"
    phi: float = math.pi
    zeta: Optional[float] = None
    iterations: Optional[int] = None
    window: Optional[Tuple[float, float]] = None
    interval: Optional[Tuple[float, float]] = None
    published: bool = False
    output_dir: str = OUTPUT_DIR
    jobs: int = DEFAULT_JOBS
    plot: bool = False

    # Fields that never change artifact contents
    _NON_SEMANTIC: ClassVar[Tuple[str, ...]] = ("output_dir", "jobs", "plot")

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_sources(
        cls,
        json_path: Optional[str] = None,
        overrides: Optional[Mapping[str, Any]] = None,
    ) -> "ExperimentConfig":
        """
        Build a config from a JSON file and CLI overrides (flags win).

        Args:
            json_path: Optional path to a JSON config file
            overrides: Flag values; None entries are ignored

        Returns:
            Validated configuration
        """
        values: Dict[str, Any] = {}
        if json_path:
            path = Path(json_path)
            if not path.exists():
                raise ConfigurationError(f"Config file not found: {json_path}")
            try:
                loaded = json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as e:
                raise ConfigurationError(f"Config file {json_path} is not valid JSON: {e}") from e
            if not isinstance(loaded, dict):
                raise ConfigurationError(f"Config file {json_path} must contain a JSON object")
            values.update(loaded)

        given = {k: v for k, v in (overrides or {}).items() if v is not None}
        # a size flag replaces both size keys of the file
        if "m" in given or "m_range" in given:
            values.pop("m", None)
            values.pop("m_range", None)
        values.update(given)

        unknown = sorted(set(values) - set(cls.field_names()))
        if unknown:
            raise ConfigurationError(
                f"Unknown config key(s): {', '.join(unknown)}. "
                f"Allowed keys: {', '.join(cls.field_names())}"
            )

        config = cls(**values)
        config.validate()
        return config

    def validate(self) -> None:
        """Normalize types and reject invalid values before any simulation starts."""
        if self.m is not None:
            self.m = int(self.m)
            if self.m < 2:
                raise InvalidDimensionError(f"Coin size m must be >= 2 (got {self.m})")
        if self.m_range is not None:
            if len(self.m_range) != 2:
                raise ConfigurationError("m_range must be a pair [lo, hi]")
            lo, hi = int(self.m_range[0]), int(self.m_range[1])
            if lo < 2 or hi < lo:
                raise InvalidDimensionError(f"m_range must satisfy 2 <= lo <= hi (got {lo}, {hi})")
            self.m_range = (lo, hi)

        if self.laws is not None:
            if isinstance(self.laws, str):
                self.laws = (self.laws,)
            self.laws = tuple(self.laws)
            bad = [law for law in self.laws if law not in LAW_NAMES]
            if bad:
                raise ConfigurationError(
                    f"Unknown dependence law(s): {', '.join(bad)}. Use one of {', '.join(LAW_NAMES)}"
                )
            if "nl-ml" in self.laws and not self.alpha_table:
                raise ConfigurationError(
                    "Law 'nl-ml' requires an alpha table (--alpha-table or QRWS_ALPHA_TABLE)"
                )

        if isinstance(self.levels, str):
            self.levels = (self.levels,)
        self.levels = tuple(self.levels)
        bad = [lvl for lvl in self.levels if lvl not in LEVELS]
        if bad:
            raise ConfigurationError(f"Unknown neighbor level(s): {', '.join(bad)}. Use W, F or S")

        self.marked = int(self.marked)
        if self.marked < 0:
            raise ConfigurationError(f"Marked node must be non-negative (got {self.marked})")
        for m in self._declared_sizes():
            if self.marked >= 2 ** m:
                raise ConfigurationError(
                    f"Marked node {self.marked} is outside [0, {2 ** m}) for m={m}"
                )

        self.grid_step = float(self.grid_step)
        self.heatmap_step = float(self.heatmap_step)
        if not 0 < self.grid_step < math.pi:
            raise ConfigurationError(f"grid_step must be in (0, pi) (got {self.grid_step})")
        if not 0 < self.heatmap_step < math.pi:
            raise ConfigurationError(f"heatmap_step must be in (0, pi) (got {self.heatmap_step})")

        self.omega = float(self.omega)
        if not 0 < self.omega < 1:
            raise ConfigurationError(f"omega must be in (0, 1) (got {self.omega})")

        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {', '.join(MODES)} (got {self.mode})")
        if self.variant not in VARIANTS:
            raise ConfigurationError(
                f"variant must be one of {', '.join(VARIANTS)} (got {self.variant})"
            )

        self.phi = parse_phase(self.phi)
        if self.zeta is not None:
            self.zeta = parse_phase(self.zeta)

        if self.iterations is not None:
            self.iterations = int(self.iterations)
            if self.iterations < 0:
                raise ConfigurationError(f"iterations must be >= 0 (got {self.iterations})")

        for name in ("window", "interval"):
            value = getattr(self, name)
            if value is None:
                continue
            if len(value) != 2:
                raise ConfigurationError(f"{name} must be a pair [lo, hi]")
            lo, hi = parse_phase(value[0]), parse_phase(value[1])
            if not lo < hi:
                raise ConfigurationError(f"{name} must satisfy lo < hi (got {lo}, {hi})")
            setattr(self, name, (lo, hi))

        self.jobs = int(self.jobs)
        if self.jobs < 1:
            raise ConfigurationError(f"jobs must be >= 1 (got {self.jobs})")
        self.published = bool(self.published)
        self.plot = bool(self.plot)

    def _declared_sizes(self) -> List[int]:
        sizes = []
        if self.m is not None:
            sizes.append(self.m)
        if self.m_range is not None:
            sizes.extend(range(self.m_range[0], self.m_range[1] + 1))
        return sizes

    def sizes(self, default: Optional[Tuple[int, int]] = None) -> List[int]:
        """
        Coin sizes this config addresses.

        Args:
            default: Range used when neither m nor m_range was given

        Returns:
            Sorted list of coin sizes
        """
        if self.m_range is not None:
            return list(range(self.m_range[0], self.m_range[1] + 1))
        if self.m is not None:
            return [self.m]
        if default is not None:
            return list(range(default[0], default[1] + 1))
        raise ConfigurationError("Provide a coin size with --m or --m-range")

    def resolved_laws(self) -> Tuple[str, ...]:
        """Requested laws; by default all laws, nl-ml only when an alpha table exists."""
        if self.laws is not None:
            return self.laws
        if self.alpha_table:
            return LAW_NAMES
        return LAW_NAMES[:3]

    def semantic_dict(self) -> Dict[str, Any]:
        """Fields that influence results, JSON-ready."""
        data = asdict(self)
        for name in self._NON_SEMANTIC:
            data.pop(name, None)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in data.items()}

    def config_hash(self) -> str:
        """
        SHA-1 of the canonical JSON of the semantic fields.

        Returns:
            Hex digest embedded in every artifact
        """
        h = hashlib.sha1()
        h.update(json.dumps(self.semantic_dict(), sort_keys=True).encode("utf-8"))
        return h.hexdigest()
