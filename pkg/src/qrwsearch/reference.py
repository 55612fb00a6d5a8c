"""Published reference values and the checks that compare against them."""

from __future__ import annotations
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, Optional, Tuple

from .config import REFERENCE_VALUES_PATH, SCHEMA_VERSION
from .errors import ConfigurationError, SchemaError
from .hill import COEFFICIENTS, PARAMS, ParameterLaw, SecondaryFit

PASS = "pass"
FAIL = "fail"
SKIPPED = "skipped"
FINDING = "finding"


@dataclass
class Check:
    """One comparison in the reproduction report."""

    group: str
    name: str
    expected: Optional[float]
    measured: Optional[float]
    tolerance: Optional[float]
    status: str
    note: str = ""

    @classmethod
    def compare(cls, group: str, name: str, expected: float, measured: float, tolerance: float, note: str = "") -> "Check":
        passed = abs(measured - expected) <= tolerance
        return cls(group, name, expected, measured, tolerance, PASS if passed else FAIL, note)

    @classmethod
    def condition(cls, group: str, name: str, measured: Optional[float], ok: bool, note: str = "") -> "Check":
        return cls(group, name, None, measured, None, PASS if ok else FAIL, note)

    @classmethod
    def skipped(cls, group: str, name: str, reason: str, expected: Optional[float] = None) -> "Check":
        return cls(group, name, expected, None, None, SKIPPED, reason)

    def as_dict(self) -> dict:
        return {
            "group": self.group,
            "name": self.name,
            "expected": self.expected,
            "measured": self.measured,
            "tolerance": self.tolerance,
            "status": self.status,
            "note": self.note,
        }


@lru_cache(maxsize=1)
def load_reference() -> Dict[str, Any]:
    """
    Load the bundled reference values.

    Returns:
        Parsed reference data
    """
    try:
        data = json.loads(REFERENCE_VALUES_PATH.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise SchemaError(f"Cannot read reference values {REFERENCE_VALUES_PATH}: {e}") from e
    if data.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"{REFERENCE_VALUES_PATH}: unsupported schema_version {data.get('schema_version')}")
    return data


def published_lambda(m: int, law: str) -> Optional[Tuple[float, float]]:
    """Published (Lambda1, Lambda2) for m and law, or None when not tabulated."""
    values = load_reference()["lambda_averages"]["values"]
    row = values.get(str(m), {}).get(law)
    return (float(row[0]), float(row[1])) if row else None


def published_secondary(law: str, level: str) -> SecondaryFit:
    """
    Published secondary fits for one law and level.

    Zero coefficients are carried as frozen.

    Args:
        law: Dependence law name
        level: W, F or S

    Returns:
        SecondaryFit with source "published"
    """
    table = load_reference()["secondary_coefficients"]["values"]
    try:
        entry = table[level][law]
    except KeyError:
        raise ConfigurationError(f"No published secondary fit for law {law}, level {level}")
    laws = {}
    for param in PARAMS:
        raw = [float(v) for v in entry[param]]
        padded = tuple(raw + [0.0] * (len(COEFFICIENTS) - len(raw)))
        frozen = tuple(c for c, v in zip(COEFFICIENTS[: len(raw)], raw) if v == 0.0)
        laws[param] = ParameterLaw(param=param, coefficients=padded, frozen=frozen)
    return SecondaryFit(law=law, level=level, sizes=tuple(range(4, 11)), source="published", **laws)
