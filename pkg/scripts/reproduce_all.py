#!/usr/bin/env python3
"""
Batch reproduction of the full QRWS pipeline.

Runs, in order:
- simulate (Grover coin at m=6)
- sweep over every dependence law for m in the configured range
- robustness, Hill fits and lambda averages per sweep
- secondary fits on m=4..10 and extrapolation up to m=25
- the reproduction report

Every stage writes into the same output directory; a failing stage is
reported and the remaining stages still run.
"""

import argparse
import sys
import time
from pathlib import Path
from typing import List, Optional, Tuple

# Add src to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root / "src"))

from qrwsearch.cli import main as cli_main
from qrwsearch.config import DATA_DIR


DEFAULT_CONFIG = DATA_DIR / "experiments" / "reproduce.json"


def build_stages(
    m_range: Tuple[int, int],
    fit_range: Tuple[int, int],
    extrapolate_to: int,
    alpha_table: Optional[str],
) -> List[Tuple[str, List[str]]]:
    """
    Command lines for every pipeline stage.

    Args:
        m_range: Coin sizes to simulate
        fit_range: Coin sizes used for the secondary fits
        extrapolate_to: Largest coin size of the prognosis
        alpha_table: Optional alpha_ml table (enables the nl-ml law)

    Returns:
        List of (stage name, CLI arguments)
    """
    sizes = ["--m-range", str(m_range[0]), str(m_range[1])]
    alpha = ["--alpha-table", alpha_table] if alpha_table else []
    return [
        ("simulate", ["simulate", "--m", "6", "--phi", "pi"]),
        ("sweep", ["sweep", *sizes, *alpha]),
        ("robustness", ["robustness", *sizes, *alpha]),
        ("fit", ["fit", *sizes, *alpha]),
        ("lambda", ["lambda", *sizes, *alpha, "--interval", "2*pi/3", "4*pi/3"]),
        ("secondary-fit", ["secondary-fit", "--m-range", str(fit_range[0]), str(fit_range[1]), *alpha]),
        ("extrapolate", ["extrapolate", "--m-range", "4", str(extrapolate_to), *alpha]),
        ("report", ["report", *sizes, *alpha]),
    ]


def run_pipeline(
    config: str,
    output_dir: Optional[str],
    stages: List[Tuple[str, List[str]]],
    plot: bool = False,
    jobs: Optional[int] = None,
) -> int:
    """
    Run every stage and print a summary table.

    Args:
        config: JSON config shared by all stages
        output_dir: Overrides the config's output directory
        stages: Stages from build_stages
        plot: Also write SVG plots
        jobs: Worker processes

    Returns:
        Number of failed stages
    """
    extra = ["--config", config]
    if output_dir:
        extra += ["--output-dir", output_dir]
    if jobs:
        extra += ["--jobs", str(jobs)]

    results = []
    for name, argv in stages:
        print(f"\n--- {name} ---")
        started = time.perf_counter()
        plot_flag = ["--plot"] if plot and name != "report" else []
        code = cli_main(argv + extra + plot_flag)
        results.append((name, code, time.perf_counter() - started))

    print("\n" + "=" * 50)
    for name, code, seconds in results:
        status = "ok" if code == 0 else f"exit {code}"
        print(f"{name:<15} {status:<8} {seconds:>8.1f}s")
    print("=" * 50)
    return sum(1 for _, code, _ in results if code != 0)


def main():
    """Main entry point."""
    parser = argparse.ArgumentParser(
        description="Run the complete QRWS reproduction pipeline",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Full pipeline for m = 4..11
  python scripts/reproduce_all.py

  # Include the nl-ml law
  python scripts/reproduce_all.py --alpha-table alpha_ml.json

  # Quick pass on small coins with plots
  python scripts/reproduce_all.py --m-range 4 7 --fit-range 4 7 --plot
        """
    )

    parser.add_argument(
        "--config",
        default=str(DEFAULT_CONFIG),
        help="Shared JSON config (default: data/experiments/reproduce.json)"
    )
    parser.add_argument("--output-dir", help="Artifact directory (default: from the config)")
    parser.add_argument(
        "--m-range",
        type=int,
        nargs=2,
        default=[4, 11],
        help="Coin sizes to simulate (default: 4 11)"
    )
    parser.add_argument(
        "--fit-range",
        type=int,
        nargs=2,
        default=[4, 10],
        help="Coin sizes for the secondary fits (default: 4 10)"
    )
    parser.add_argument(
        "--extrapolate-to",
        type=int,
        default=25,
        help="Largest coin size of the prognosis (default: 25)"
    )
    parser.add_argument("--alpha-table", help="JSON map {m: alpha} enabling the nl-ml law")
    parser.add_argument("--jobs", type=int, help="Worker processes (default: CPU count)")
    parser.add_argument("--plot", action="store_true", help="Also write SVG plots")

    args = parser.parse_args()

    print("=" * 50)
    print("QRWS reproduction")
    print("=" * 50)
    print(f"Config: {args.config}")
    print(f"Coin sizes: {args.m_range[0]}..{args.m_range[1]}")
    print(f"Secondary fits: {args.fit_range[0]}..{args.fit_range[1]}")
    print(f"Extrapolation: up to m={args.extrapolate_to}")
    print(f"nl-ml law: {'on' if args.alpha_table else 'off (no alpha table)'}")
    print("=" * 50)

    stages = build_stages(
        tuple(args.m_range), tuple(args.fit_range), args.extrapolate_to, args.alpha_table
    )
    failed = run_pipeline(args.config, args.output_dir, stages, plot=args.plot, jobs=args.jobs)
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
