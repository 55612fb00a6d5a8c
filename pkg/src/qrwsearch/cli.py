"""Command-line interface for the QRWS toolkit."""

from __future__ import annotations
import argparse
import logging
import math
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

from . import artifacts, plots
from .coins import CoinSpec, DependenceLaw, load_alpha_table, zeta_of_phi
from .config import MODES, VARIANTS, ExperimentConfig
from .errors import ConfigurationError, MissingArtifactError, NumericalError, QRWSError
from .hill import (
    PARAMS,
    ParameterLaw,
    SecondaryFit,
    HillFit,
    extrapolate,
    hill_fit,
    prognosis,
    robustness_series,
    secondary_fit,
)
from .neighbors import aggregate, measurement_budget
from .reference import published_secondary
from .report import build_report, write_report
from .robustness import closed_grid, lambda_report, phi_grid, robustness_epsilon, sweep_heatmap, sweep_phi
from .walk import RunConfig, even_odd_deviation, run

logger = logging.getLogger(__name__)

LEVEL_ALIASES = {"none": "W", "first": "F", "second": "S", "W": "W", "F": "F", "S": "S"}
CONTROL_ARGS = ("cmd", "func", "config", "verbose", "quiet")
HEATMAP_ZETA_RANGE = (-math.pi, 3.0 * math.pi)
STRATEGY_BY_LEVEL = {"W": "none", "F": "first", "S": "second"}


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the validation code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _level(value: str) -> str:
    try:
        return LEVEL_ALIASES[value]
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown level '{value}' (use W/F/S or none/first/second)")


def _load_config(args) -> ExperimentConfig:
    """Merge defaults, the --config JSON file and explicit flags (flags win)."""
    overrides = {
        key: value
        for key, value in vars(args).items()
        if key not in CONTROL_ARGS and key in ExperimentConfig.field_names()
    }
    return ExperimentConfig.from_sources(args.config, overrides)


def _progress(args) -> bool:
    return not getattr(args, "quiet", False) and sys.stderr.isatty()


def _law(name: str, config: ExperimentConfig) -> DependenceLaw:
    alpha = load_alpha_table(config.alpha_table) if name == "nl-ml" else None
    return DependenceLaw.from_name(name, alpha)


def _out(config: ExperimentConfig) -> Path:
    return Path(config.output_dir)


class _Jobs:
    """Failed (m, law, level) jobs of one command; the remaining jobs still run."""

    def __init__(self, command: str):
        self.command = command
        self.failed: List[Tuple[str, QRWSError]] = []

    @contextmanager
    def run(self, key: str) -> Iterator[None]:
        try:
            yield
        except (NumericalError, MissingArtifactError) as e:
            logger.error("%s %s failed: %s", self.command, key, e)
            self.failed.append((key, e))

    def exit_code(self) -> int:
        if not self.failed:
            return 0
        print(f"{self.command}: {len(self.failed)} job(s) failed", file=sys.stderr)
        for key, error in self.failed:
            print(f"  {key}: {error}", file=sys.stderr)
        return max(error.exit_code for _, error in self.failed)


def cmd_simulate(args) -> None:
    """
    Simulate command: run the search once and write distribution, trace and summary.

    Args:
        args: Parsed command-line arguments
    """
    config = _load_config(args)
    laws = config.laws or ()
    if len(laws) > 1:
        raise ConfigurationError("simulate takes a single --law")

    for m in config.sizes():
        if config.zeta is not None:
            zeta = config.zeta
        elif laws:
            zeta = zeta_of_phi(_law(laws[0], config), config.phi, m)
        else:
            zeta = math.pi
        run_config = RunConfig(
            m=m,
            marked=frozenset([config.marked]),
            coin=CoinSpec(m, config.phi, zeta),
            iterations="auto" if config.iterations is None else config.iterations,
            mode=config.mode,
            alternating_variant=config.variant,
        )
        result = run(run_config)
        agg = aggregate(result.distribution, config.marked, m)
        summary = {
            "m": m,
            "marked": config.marked,
            "phi": config.phi,
            "zeta": zeta,
            "law": laws[0] if laws else None,
            "mode": config.mode,
            "variant": config.variant,
            "k": result.iterations_run,
            "oracle_calls": result.oracle_calls,
            "even_odd_deviation": even_odd_deviation(result.trace),
            **agg.as_dict(),
        }
        paths = artifacts.write_simulation(_out(config), result, summary, config.config_hash())
        if config.plot:
            paths.append(plots.plot_trace(result.trace, _out(config) / f"trace_m{m}.svg", m))

        print(f"m={m}  k={result.iterations_run}  oracle calls={result.oracle_calls}")
        print(f"  P_W={agg.p_w:.6f}  first-sum={agg.p_first_sum:.6f}  "
              f"second-sum={agg.p_second_sum:.6f}  residue={agg.residue:.6f}")
        print(f"  P_F={agg.p_f:.6f}  P_S={agg.p_s:.6f}")
        for path in paths:
            print(f"Wrote {path}")


def cmd_sweep(args) -> None:
    """
    Sweep command: P_W, P_F and P_S along each dependence law.

    Args:
        args: Parsed command-line arguments
    """
    config = _load_config(args)
    for m in config.sizes():
        for name in config.resolved_laws():
            sweep = sweep_phi(
                m,
                _law(name, config),
                marked=config.marked,
                grid_step=config.grid_step,
                levels=config.levels,
                jobs=config.jobs,
                progress=_progress(args),
                mode=config.mode,
            )
            path = artifacts.write_sweep(_out(config), sweep, config.config_hash(), config.grid_step)
            print(f"Wrote {path} ({len(sweep.phi)} points)")
            if config.plot:
                svg = plots.plot_sweep(sweep, path.with_suffix(".svg"), config.levels)
                print(f"Wrote {svg}")


def cmd_heatmap(args) -> None:
    """
    Heatmap command: P_W over the (phi, zeta) plane.

    Args:
        args: Parsed command-line arguments
    """
    config = _load_config(args)
    phis = closed_grid(0.0, 2.0 * math.pi, config.heatmap_step)
    zetas = closed_grid(*HEATMAP_ZETA_RANGE, config.heatmap_step)
    for m in config.sizes():
        heatmap = sweep_heatmap(m, phis, zetas, marked=config.marked, jobs=config.jobs, progress=_progress(args))
        path = artifacts.write_heatmap(_out(config), heatmap, config.config_hash())
        print(f"Wrote {path} ({phis.size} x {zetas.size} points)")
        if config.plot:
            print(f"Wrote {plots.plot_heatmap(heatmap, path.with_suffix('.svg'))}")


def cmd_robustness(args) -> int:
    """
    Robustness command: epsilon around the peak of each archived sweep.

    Args:
        args: Parsed command-line arguments
    """
    config = _load_config(args)
    jobs = _Jobs("robustness")
    print(f"{'m':>3}  {'law':<9} {'level':<5} {'phi_max':>9} {'p_max':>9} {'epsilon':>9}")
    for m in config.sizes():
        for name in config.resolved_laws():
            with jobs.run(f"m={m} {name}"):
                sweep = artifacts.read_sweep(_out(config), m, name)
                for level in config.levels:
                    result = robustness_epsilon(sweep.curve(level), config.omega)
                    artifacts.write_json(
                        _out(config) / artifacts.robustness_name(m, name, level),
                        "robustness",
                        result.as_dict(),
                        config.config_hash(),
                    )
                    print(f"{m:>3}  {name:<9} {level:<5} {result.phi_max:>9.4f} "
                          f"{result.p_max:>9.6f} {result.epsilon:>9.4f}")
    return jobs.exit_code()


def cmd_fit(args) -> int:
    """
    Fit command: Hill fit of each archived sweep curve.

    A failed fit is reported and skipped; the command exits non-zero at the end.

    Args:
        args: Parsed command-line arguments
    """
    config = _load_config(args)
    jobs = _Jobs("fit")
    for m in config.sizes():
        for name in config.resolved_laws():
            with jobs.run(f"m={m} {name}"):
                sweep = artifacts.read_sweep(_out(config), m, name)
                for level in config.levels:
                    with jobs.run(f"m={m} {name} {level}"):
                        curve = sweep.curve(level)
                        fit = hill_fit(curve, config.window)
                        path = artifacts.write_json(
                            _out(config) / artifacts.fit_name(m, name, level), "fit", fit.as_dict(),
                            config.config_hash(),
                        )
                        bounded = " (peak bounded)" if fit.bounded else ""
                        print(f"m={m} {name} {level}: b={fit.b:.6f} kappa={fit.kappa:.6f} "
                              f"eta={fit.eta:.4f} sigma={fit.sigma:.2e}{bounded}")
                        if config.plot:
                            plots.plot_fit(curve.phi, curve.p, fit, path.with_suffix(".svg"))
    print(f"Fits written to {_out(config)}")
    return jobs.exit_code()


def _read_fit(config: ExperimentConfig, m: int, law: str, level: str) -> HillFit:
    data = artifacts.read_json(
        _out(config) / artifacts.fit_name(m, law, level), "fit", f"fit --m {m} --law {law}"
    )
    return HillFit.from_dict(data)


def _available_fits(config: ExperimentConfig, sizes: List[int], law: str, level: str) -> List[HillFit]:
    fits = []
    for m in sizes:
        try:
            fits.append(_read_fit(config, m, law, level))
        except MissingArtifactError as e:
            logger.warning("Secondary fit %s %s without m=%d: %s", law, level, m, e)
    return fits


def cmd_secondary_fit(args) -> int:
    """
    Secondary-fit command: b(m), kappa(m) and eta(m) from the per-size fits.

    Sizes whose primary fit is missing are left out; a (law, level) pair
    that cannot be fitted is reported and skipped.

    Args:
        args: Parsed command-line arguments
    """
    config = _load_config(args)
    sizes = config.sizes(default=(4, 10))
    jobs = _Jobs("secondary-fit")
    for name in config.resolved_laws():
        for level in config.levels:
            with jobs.run(f"{name} {level}"):
                secondary = secondary_fit(_available_fits(config, sizes, name, level), name, level)
                for param, law in secondary.laws().items():
                    payload = {"law": name, "level": level, "sizes": list(secondary.sizes), **law.as_dict()}
                    artifacts.write_json(
                        _out(config) / artifacts.secondary_name(name, level, param),
                        "secondary",
                        payload,
                        config.config_hash(),
                    )
                    coefficients = ", ".join(f"{c:.6g}" for c in law.coefficients)
                    frozen = f" frozen={list(law.frozen)}" if law.frozen else ""
                    print(f"{name} {level} {param}: ({coefficients}){frozen} sigma={law.sigma:.3g}")
    print(f"Secondary fits written to {_out(config)}")
    return jobs.exit_code()


def _read_secondary(config: ExperimentConfig, law: str, level: str) -> SecondaryFit:
    laws: Dict[str, ParameterLaw] = {}
    sizes: tuple = ()
    for param in PARAMS:
        data = artifacts.read_json(
            _out(config) / artifacts.secondary_name(law, level, param), "secondary", "secondary-fit"
        )
        laws[param] = ParameterLaw.from_dict(data)
        sizes = tuple(data.get("sizes", ()))
    return SecondaryFit(law=law, level=level, sizes=sizes, **laws)


def _simulated_epsilon(config: ExperimentConfig, law: str, level: str, sizes: List[int]) -> Dict[int, float]:
    """Archived epsilon per coin size; sizes without a robustness artifact are absent."""
    found = {}
    for m in sizes:
        path = _out(config) / artifacts.robustness_name(m, law, level)
        if path.exists():
            found[m] = float(artifacts.read_json(path, "robustness", f"robustness --m {m}")["epsilon"])
    return found


def _with_budget(row: dict) -> dict:
    budget = measurement_budget(row["m"], STRATEGY_BY_LEVEL[row["level"]])
    return {**row, "measurements": budget.classical_measurements, "total_cost": budget.total_cost}


def cmd_extrapolate(args) -> int:
    """
    Extrapolate command: Hill parameters, robustness and prognosis curves for large m.

    Args:
        args: Parsed command-line arguments
    """
    config = _load_config(args)
    top = max(config.sizes(default=(4, 25)))
    sizes = list(range(4, top + 1)) if config.m_range is None else config.sizes()
    jobs = _Jobs("extrapolate")
    for name in config.resolved_laws():
        with jobs.run(name):
            if config.published:
                secondaries = {level: published_secondary(name, level) for level in config.levels}
            else:
                secondaries = {level: _read_secondary(config, name, level) for level in config.levels}
            series = robustness_series(secondaries, sizes, config.omega)
            by_level: Dict[str, List[dict]] = {}
            for row in series:
                by_level.setdefault(row["level"], []).append(_with_budget(row))

            for level, secondary in secondaries.items():
                payload = {
                    "law": name,
                    "level": level,
                    "omega": config.omega,
                    "source": secondary.source,
                    "fitted_sizes": list(secondary.sizes),
                    "coefficients": {param: law.as_dict() for param, law in secondary.laws().items()},
                    "series": by_level[level],
                }
                path = artifacts.write_json(
                    _out(config) / artifacts.extrapolation_name(name, level),
                    "extrapolation",
                    payload,
                    config.config_hash(),
                )
                params = extrapolate(secondary, top)
                phis = phi_grid(config.grid_step)
                artifacts.write_prognosis(
                    _out(config), top, name, level, phis,
                    prognosis(params, phis, f"(m={top}, {name}, {level})"), config.config_hash(),
                )
                last = by_level[level][-1]
                print(f"{name} {level} m={top}: b={params.b:.4f} kappa={params.kappa:.4f} "
                      f"eta={params.eta:.3f} epsilon~={last['epsilon_tilde']:.4f} "
                      f"cost={last['total_cost']}")
                print(f"Wrote {path}")
            if config.plot:
                svg = plots.plot_robustness_series(
                    {f"{name} {level}": rows for level, rows in by_level.items()},
                    _out(config) / f"extrapolation_{name}.svg",
                    {
                        f"{name} {level}": _simulated_epsilon(config, name, level, sizes)
                        for level in by_level
                    },
                )
                print(f"Wrote {svg}")
    return jobs.exit_code()


def cmd_lambda(args) -> int:
    """
    Lambda command: normalized neighbor-level ratios and their averages.

    Args:
        args: Parsed command-line arguments
    """
    config = _load_config(args)
    jobs = _Jobs("lambda")
    for m in config.sizes():
        for name in config.resolved_laws():
            with jobs.run(f"m={m} {name}"):
                sweep = artifacts.read_sweep(_out(config), m, name)
                epsilon = robustness_epsilon(sweep.curve("W"), config.omega).epsilon
                report = lambda_report(sweep, epsilon)
                csv_path = artifacts.write_lambda(_out(config), report, config.config_hash())
                payload = {
                    "m": m,
                    "law": name,
                    "omega": config.omega,
                    "epsilon_w": epsilon,
                    "interval": list(report.interval),
                    "capital_lambda1": artifacts.finite_or_none(report.capital_lambda1),
                    "capital_lambda2": artifacts.finite_or_none(report.capital_lambda2),
                }
                artifacts.write_json(
                    _out(config) / artifacts.lambda_name(m, name, "json"), "lambda", payload, config.config_hash()
                )
                print(f"m={m} {name}: epsilon_W={epsilon:.4f}  "
                      f"Lambda1={report.capital_lambda1:+.6f}  Lambda2={report.capital_lambda2:+.6f}")
                print(f"Wrote {csv_path}")
                if config.interval:
                    view = report.restricted(*config.interval)
                    print(f"Wrote {artifacts.write_lambda(_out(config), view, config.config_hash(), 'interval')}")
                if config.plot:
                    plots.plot_lambda(report, csv_path.with_suffix(".svg"))
    return jobs.exit_code()


def cmd_report(args) -> None:
    """
    Report command: compare computed values against the bundled references.

    Args:
        args: Parsed command-line arguments
    """
    config = _load_config(args)
    report = build_report(config)
    for path in write_report(report, _out(config), config.config_hash()):
        print(f"Wrote {path}")
    counts = report.counts()
    print(f"pass={counts['pass']} fail={counts['fail']} skipped={counts['skipped']} "
          f"findings={counts['finding']}")
    if report.missing:
        print(f"{len(set(report.missing))} artifact(s) missing; see report.md")


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (flags override its values)")
    common.add_argument("--m", type=int, help="Coin size")
    common.add_argument("--m-range", dest="m_range", type=int, nargs=2, metavar=("LO", "HI"),
                        help="Inclusive coin-size range")
    common.add_argument("--law", dest="laws", nargs="+", choices=["const", "linear", "nl-fixed", "nl-ml"],
                        help="Dependence law(s) (default: all; nl-ml needs --alpha-table)")
    common.add_argument("--alpha-table", dest="alpha_table",
                        help="JSON map {m: alpha} for the nl-ml law")
    common.add_argument("--marked", type=int, help="Marked node (default: 2)")
    common.add_argument("--level", dest="levels", type=_level, nargs="+",
                        help="Neighbor level(s): W/F/S or none/first/second (default: all)")
    common.add_argument("--grid-step", dest="grid_step", type=float, help="phi grid step (default: 0.005)")
    common.add_argument("--omega", type=float, help="Fraction of the peak for robustness (default: 0.9)")
    common.add_argument("--output-dir", dest="output_dir", help="Artifact directory (default: results)")
    common.add_argument("--jobs", type=int, help="Worker processes (default: CPU count)")
    common.add_argument("--plot", action="store_true", default=None, help="Also write SVG plots")
    common.add_argument("--quiet", action="store_true", help="Hide progress bars")
    common.add_argument("--verbose", action="store_true", help="Debug logging")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = _Parser(
        description="Quantum random walk search on the hypercube with a generalized Householder coin",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Grover coin at m=6
  %(prog)s simulate --m 6 --marked 2 --phi pi

  # Half the oracle calls
  %(prog)s simulate --m 6 --mode alternating

  # Sweep phi along the linear law, then measure robustness
  %(prog)s sweep --m 6 --law linear
  %(prog)s robustness --m 6 --law linear --omega 0.9

  # Hill fits for m=4..10, secondary fits, prognosis up to m=25
  %(prog)s fit --m-range 4 10
  %(prog)s secondary-fit --m-range 4 10
  %(prog)s extrapolate --m 25 --level second

  # Averaged lambda values and the reproduction report
  %(prog)s lambda --m 6
  %(prog)s report --m-range 4 11
        """
    )
    subparsers = parser.add_subparsers(dest="cmd", help="Available commands")

    # Simulate command
    p_sim = subparsers.add_parser("simulate", parents=[common], help="Run the search once")
    p_sim.add_argument("--phi", help="Householder phase, e.g. 'pi' or '2*pi/3' (default: pi)")
    p_sim.add_argument("--zeta", help="Multiplier phase (default: from --law, else pi)")
    p_sim.add_argument("--iterations", type=int, help="Iteration count (default: optimal)")
    p_sim.add_argument("--mode", choices=MODES, help="standard or alternating (default: standard)")
    p_sim.add_argument("--variant", choices=VARIANTS,
                       help="Even-step operator of the alternating mode (default: with_shift)")
    p_sim.set_defaults(func=cmd_simulate)

    # Sweep command
    p_sweep = subparsers.add_parser("sweep", parents=[common], help="Sweep phi along dependence laws")
    p_sweep.add_argument("--mode", choices=MODES, help="standard or alternating (default: standard)")
    p_sweep.set_defaults(func=cmd_sweep)

    # Heatmap command
    p_heat = subparsers.add_parser("heatmap", parents=[common], help="P_W over the (phi, zeta) plane")
    p_heat.add_argument("--heatmap-step", dest="heatmap_step", type=float,
                        help="Step of both heatmap axes (default: 0.05)")
    p_heat.set_defaults(func=cmd_heatmap)

    # Robustness command
    p_rob = subparsers.add_parser("robustness", parents=[common], help="Robustness of archived sweeps")
    p_rob.set_defaults(func=cmd_robustness)

    # Fit command
    p_fit = subparsers.add_parser("fit", parents=[common], help="Hill fits of archived sweeps")
    p_fit.add_argument("--window", nargs=2, metavar=("LO", "HI"),
                       help="Fit window (default: (2pi/3, 4pi/3) for const, (0, 2pi) otherwise)")
    p_fit.set_defaults(func=cmd_fit)

    # Secondary-fit command
    p_sec = subparsers.add_parser("secondary-fit", parents=[common],
                                  help="Fit Hill parameters across coin sizes")
    p_sec.set_defaults(func=cmd_secondary_fit)

    # Extrapolate command
    p_ext = subparsers.add_parser("extrapolate", parents=[common],
                                  help="Robustness prognosis for large coin sizes")
    p_ext.add_argument("--published", action="store_true", default=None,
                       help="Use the published secondary coefficients instead of local fits")
    p_ext.set_defaults(func=cmd_extrapolate)

    # Lambda command
    p_lam = subparsers.add_parser("lambda", parents=[common], help="Normalized neighbor-level ratios")
    p_lam.add_argument("--interval", nargs=2, metavar=("LO", "HI"),
                       help="Also write the curves restricted to this phi interval")
    p_lam.set_defaults(func=cmd_lambda)

    # Report command
    p_rep = subparsers.add_parser("report", parents=[common], help="Reproduction report")
    p_rep.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "cmd", None):
        parser.print_help()
        return 0

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        code = args.func(args)
    except QRWSError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
