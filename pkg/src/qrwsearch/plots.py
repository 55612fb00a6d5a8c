"""SVG plots of sweeps, heatmaps, traces, fits and lambda curves."""

from __future__ import annotations
import math
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .hill import HillFit, hill_eval
from .robustness import HeatmapResult, LambdaReport, SweepResult

LEVEL_LABELS = {"W": "P_W (returned node)", "F": "P_F (+ first neighbors)", "S": "P_S (+ second neighbors)"}
PI_TICKS = [0.0, math.pi / 2, math.pi, 3 * math.pi / 2, 2 * math.pi]
PI_LABELS = ["0", "π/2", "π", "3π/2", "2π"]

# Stable ids and no timestamp so repeated runs write identical files
matplotlib.rcParams["svg.hashsalt"] = "qrwsearch"


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _phi_axis(ax) -> None:
    ax.set_xticks(PI_TICKS)
    ax.set_xticklabels(PI_LABELS)
    ax.set_xlabel("φ")


def plot_sweep(sweep: SweepResult, path: Path, levels: Iterable[str] = ("W", "F", "S")) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    for level in levels:
        curve = sweep.curve(level)
        ax.plot(curve.phi, curve.p, label=LEVEL_LABELS[level], linewidth=1.2)
    _phi_axis(ax)
    ax.set_ylabel("success probability")
    ax.set_title(f"m={sweep.m}, law {sweep.law}")
    ax.set_ylim(0, 1.02)
    ax.legend(loc="upper right", fontsize=8)
    return _save(fig, path)


def plot_heatmap(heatmap: HeatmapResult, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 5))
    mesh = ax.pcolormesh(heatmap.phi, heatmap.zeta, heatmap.p_w.T, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="P_W")
    _phi_axis(ax)
    ax.set_ylabel("ζ")
    ax.set_title(f"m={heatmap.m}")
    return _save(fig, path)


def plot_trace(trace, path: Path, m: int) -> Path:
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(np.arange(len(trace)), trace, marker=".", linewidth=0.8)
    ax.set_xlabel("iteration")
    ax.set_ylabel("p(marked)")
    ax.set_title(f"m={m}")
    return _save(fig, path)


def plot_fit(phi, p, fit: HillFit, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(phi, p, label="simulation", linewidth=1.2)
    ax.plot(phi, hill_eval(phi, fit.b, fit.kappa, fit.eta), "--", label="Hill fit", linewidth=1.0)
    ax.axvspan(fit.window[0], fit.window[1], color="0.9", zorder=0)
    _phi_axis(ax)
    ax.set_ylabel(LEVEL_LABELS[fit.level])
    ax.set_title(f"m={fit.m}, law {fit.law}, σ={fit.sigma:.3g}")
    ax.legend(loc="upper right", fontsize=8)
    return _save(fig, path)


def plot_robustness_series(
    series: Mapping[str, List[dict]],
    path: Path,
    simulated: Optional[Mapping[str, Dict[int, float]]] = None,
) -> Path:
    """
    Extrapolated robustness against coin size.

    Args:
        series: Rows from robustness_series keyed by label
        path: Output file
        simulated: Directly measured epsilon by label and m, drawn as points
    """
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, rows in series.items():
        ax.plot([r["m"] for r in rows], [r["epsilon_tilde"] for r in rows], "--", label=label)
    for label, points in (simulated or {}).items():
        sizes = sorted(points)
        ax.plot(sizes, [points[m] for m in sizes], "o", label=f"{label} (simulated)")
    ax.set_xlabel("m")
    ax.set_ylabel("ε")
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_lambda(report: LambdaReport, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(report.phi, report.lambda1, label="λ1 (F vs W)", linewidth=1.2)
    ax.plot(report.phi, report.lambda2, label="λ2 (S vs F)", linewidth=1.2)
    if report.interval:
        ax.axvspan(report.interval[0], report.interval[1], color="0.9", zorder=0)
    _phi_axis(ax)
    ax.set_ylabel("λ")
    ax.set_title(f"m={report.m}, law {report.law}")
    ax.legend(fontsize=8)
    return _save(fig, path)
