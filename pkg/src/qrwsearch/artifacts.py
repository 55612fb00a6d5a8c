"""
CSV and JSON artifacts.

CSV files open with ``# key=value`` metadata lines (kind, schema_version,
config_hash and whatever the producer adds) followed by the header row.
Floats use 17 significant digits so reading a file back gives the exact
values that were written. JSON files are sorted and indented.
"""

from __future__ import annotations
import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .config import SCHEMA_VERSION
from .errors import MissingArtifactError, SchemaError
from .robustness import HeatmapResult, LambdaReport, SweepResult
from .walk import SimulationResult

SWEEP_HEADER = ["phi", "zeta", "p_w", "p_f", "p_s"]
DISTRIBUTION_HEADER = ["node", "probability"]
TRACE_HEADER = ["iteration", "p_marked"]
HEATMAP_HEADER = ["phi", "zeta", "p_w"]
LAMBDA_HEADER = ["phi", "lambda1", "lambda2"]
PROGNOSIS_HEADER = ["phi", "probability"]


# File names
def distribution_name(m: int) -> str:
    return f"distribution_m{m}.csv"


def trace_name(m: int) -> str:
    return f"trace_m{m}.csv"


def summary_name(m: int) -> str:
    return f"summary_m{m}.json"


def sweep_name(m: int, law: str) -> str:
    return f"sweep_m{m}_{law}.csv"


def heatmap_name(m: int) -> str:
    return f"heatmap_m{m}.csv"


def robustness_name(m: int, law: str, level: str) -> str:
    return f"robustness_m{m}_{law}_{level}.json"


def fit_name(m: int, law: str, level: str) -> str:
    return f"fit_m{m}_{law}_{level}.json"


def secondary_name(law: str, level: str, param: str) -> str:
    return f"secondary_{law}_{level}_{param}.json"


def extrapolation_name(law: str, level: str) -> str:
    return f"extrapolation_{law}_{level}.json"


def prognosis_name(m: int, law: str, level: str) -> str:
    return f"prognosis_m{m}_{law}_{level}.csv"


def lambda_name(m: int, law: str, suffix: str = "csv") -> str:
    return f"lambda_m{m}_{law}.{suffix}"


def _format(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_csv(
    path: Path,
    kind: str,
    header: Sequence[str],
    rows,
    metadata: Optional[Mapping[str, Any]] = None,
    config_hash: str = "",
) -> Path:
    """
    Write a CSV artifact with metadata lines.

    Args:
        path: Output file
        kind: Artifact kind, checked by the reader
        header: Column names
        rows: Iterable of row sequences
        metadata: Extra ``# key=value`` entries
        config_hash: Hash of the producing configuration

    Returns:
        The path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {"kind": kind, "schema_version": SCHEMA_VERSION, "config_hash": config_hash}
    meta.update(metadata or {})
    with open(path, "w", newline="", encoding="utf-8") as f:
        for key, value in meta.items():
            f.write(f"# {key}={_format(value)}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format(v) for v in row])
    return path


def read_csv(
    path: Path,
    kind: str,
    header: Sequence[str],
    producer: str,
) -> Tuple[Dict[str, str], Dict[str, np.ndarray]]:
    """
    Read a numeric CSV artifact.

    Args:
        path: Input file
        kind: Expected artifact kind
        header: Expected column names, in order
        producer: Subcommand that writes this artifact (for error messages)

    Returns:
        Tuple of (metadata, columns) with every column as a float array
    """
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"{path} not found; run '{producer}' first")

    metadata: Dict[str, str] = {}
    data_lines: List[str] = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if line.startswith("#") and not data_lines:
                key, sep, value = line[1:].strip().partition("=")
                if sep:
                    metadata[key.strip()] = value.strip()
                continue
            data_lines.append(line)

    if metadata.get("kind") != kind:
        raise SchemaError(f"{path}: expected a '{kind}' artifact, found '{metadata.get('kind')}'")
    if metadata.get("schema_version") != str(SCHEMA_VERSION):
        raise SchemaError(
            f"{path}: schema_version {metadata.get('schema_version')} is not supported "
            f"(expected {SCHEMA_VERSION})"
        )

    reader = csv.reader(data_lines)
    found = next(reader, None)
    if found != list(header):
        raise SchemaError(f"{path}: header {found} does not match {list(header)}")

    values: List[List[float]] = []
    for row_number, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) != len(header):
            raise SchemaError(
                f"{path}: data row {row_number} has {len(row)} fields, expected {len(header)}"
            )
        try:
            values.append([float(v) for v in row])
        except ValueError as e:
            raise SchemaError(f"{path}: data row {row_number} is not numeric ({e})") from e

    table = np.array(values, dtype=np.float64).reshape(len(values), len(header))
    return metadata, {name: table[:, i] for i, name in enumerate(header)}


def write_json(path: Path, kind: str, payload: Mapping[str, Any], config_hash: str = "") -> Path:
    """
    Write a JSON artifact (sorted keys, two-space indent, trailing newline).

    Args:
        path: Output file
        kind: Artifact kind
        payload: Content
        config_hash: Hash of the producing configuration

    Returns:
        The path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = _jsonable(dict(payload))
    data.update({"kind": kind, "schema_version": SCHEMA_VERSION, "config_hash": config_hash})
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def read_json(path: Path, kind: str, producer: str) -> Dict[str, Any]:
    """
    Read a JSON artifact and check its kind and schema version.

    Args:
        path: Input file
        kind: Expected artifact kind
        producer: Subcommand that writes this artifact

    Returns:
        Parsed content
    """
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"{path} not found; run '{producer}' first")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: not valid JSON ({e})") from e
    if not isinstance(data, dict) or data.get("kind") != kind:
        found = data.get("kind") if isinstance(data, dict) else type(data).__name__
        raise SchemaError(f"{path}: expected a '{kind}' artifact, found '{found}'")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(
            f"{path}: schema_version {data.get('schema_version')} is not supported "
            f"(expected {SCHEMA_VERSION})"
        )
    return data


# Domain artifacts
def write_simulation(output_dir: Path, result: SimulationResult, summary: Mapping[str, Any], config_hash: str) -> List[Path]:
    """Distribution CSV, trace CSV and summary JSON of one run."""
    output_dir = Path(output_dir)
    meta = {"m": result.m, "marked": " ".join(str(h) for h in sorted(result.marked))}
    return [
        write_csv(
            output_dir / distribution_name(result.m), "distribution", DISTRIBUTION_HEADER,
            ((j, p) for j, p in enumerate(result.distribution)), meta, config_hash,
        ),
        write_csv(
            output_dir / trace_name(result.m), "trace", TRACE_HEADER,
            ((i, p) for i, p in enumerate(result.trace)), meta, config_hash,
        ),
        write_json(output_dir / summary_name(result.m), "summary", summary, config_hash),
    ]


def write_sweep(output_dir: Path, sweep: SweepResult, config_hash: str, grid_step: float) -> Path:
    rows = zip(sweep.phi, sweep.zeta, sweep.p_w, sweep.p_f, sweep.p_s)
    meta = {"m": sweep.m, "law": sweep.law, "marked": sweep.marked, "grid_step": grid_step}
    return write_csv(Path(output_dir) / sweep_name(sweep.m, sweep.law), "sweep", SWEEP_HEADER, rows, meta, config_hash)


def read_sweep(output_dir: Path, m: int, law: str) -> SweepResult:
    """Load an archived sweep so analyses can run without re-simulating."""
    path = Path(output_dir) / sweep_name(m, law)
    meta, cols = read_csv(path, "sweep", SWEEP_HEADER, f"sweep --m {m} --law {law}")
    try:
        stored_m, stored_law, marked = int(meta["m"]), meta["law"], int(meta["marked"])
    except (KeyError, ValueError) as e:
        raise SchemaError(f"{path}: incomplete metadata ({e})") from e
    if stored_m != m or stored_law != law:
        raise SchemaError(f"{path}: holds m={stored_m} law={stored_law}, expected m={m} law={law}")
    if not cols["phi"].size:
        raise SchemaError(f"{path}: no data rows")
    return SweepResult(
        m=m, law=law, marked=marked, phi=cols["phi"], zeta=cols["zeta"],
        p_w=cols["p_w"], p_f=cols["p_f"], p_s=cols["p_s"],
    )


def write_heatmap(output_dir: Path, heatmap: HeatmapResult, config_hash: str) -> Path:
    rows = (
        (phi, zeta, heatmap.p_w[i, j])
        for i, phi in enumerate(heatmap.phi)
        for j, zeta in enumerate(heatmap.zeta)
    )
    meta = {"m": heatmap.m, "marked": heatmap.marked, "n_phi": heatmap.phi.size, "n_zeta": heatmap.zeta.size}
    return write_csv(Path(output_dir) / heatmap_name(heatmap.m), "heatmap", HEATMAP_HEADER, rows, meta, config_hash)


def read_heatmap(output_dir: Path, m: int) -> HeatmapResult:
    path = Path(output_dir) / heatmap_name(m)
    meta, cols = read_csv(path, "heatmap", HEATMAP_HEADER, f"heatmap --m {m}")
    try:
        n_phi, n_zeta = int(meta["n_phi"]), int(meta["n_zeta"])
    except (KeyError, ValueError) as e:
        raise SchemaError(f"{path}: incomplete metadata ({e})") from e
    if cols["p_w"].size != n_phi * n_zeta:
        raise SchemaError(f"{path}: {cols['p_w'].size} rows, expected {n_phi * n_zeta}")
    return HeatmapResult(
        m=m,
        marked=int(meta.get("marked", 0)),
        phi=cols["phi"][::n_zeta].copy(),
        zeta=cols["zeta"][:n_zeta].copy(),
        p_w=cols["p_w"].reshape(n_phi, n_zeta),
    )


def write_lambda(output_dir: Path, report: LambdaReport, config_hash: str, name_suffix: str = "") -> Path:
    rows = zip(report.phi, report.lambda1, report.lambda2)
    meta = {"m": report.m, "law": report.law}
    name = lambda_name(report.m, report.law)
    if name_suffix:
        name = name.replace(".csv", f"_{name_suffix}.csv")
    return write_csv(Path(output_dir) / name, "lambda", LAMBDA_HEADER, rows, meta, config_hash)


def write_prognosis(output_dir: Path, m: int, law: str, level: str, phis, values, config_hash: str) -> Path:
    meta = {"m": m, "law": law, "level": level}
    return write_csv(
        Path(output_dir) / prognosis_name(m, law, level), "prognosis", PROGNOSIS_HEADER,
        zip(phis, values), meta, config_hash,
    )


def finite_or_none(value: Optional[float]) -> Optional[float]:
    """JSON-safe float: NaN and infinities become null."""
    if value is None or not math.isfinite(value):
        return None
    return float(value)
