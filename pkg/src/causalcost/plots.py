"""Report figures, rendered straight to files (headless Agg backend)."""

from __future__ import annotations

from collections.abc import Mapping
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .estimation import CostDistribution
from .evaluation import EvaluationReport
from .screening import FactorRanking

__all__ = ["plot_cdf", "plot_fold_cdfs", "plot_accuracy", "plot_ranking"]

_FIGSIZE = (7.0, 4.5)
_DPI = 110


def _finish(fig, path: "str | Path") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def plot_cdf(
    dist: CostDistribution,
    path: "str | Path",
    title: str = "Cumulative cost distribution",
    budget: float | None = None,
    probability: float | None = None,
) -> Path:
    """Empirical CDF of simulated effort, with optional risk-query markers."""
    samples = dist.samples
    levels = np.arange(1, len(samples) + 1) / len(samples)
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.step(samples, levels, where="post", color="tab:blue", lw=1.5)
    if budget is not None:
        exceed = float(np.mean(samples > budget))
        ax.axvline(budget, color="tab:red", ls="--", lw=1.0,
                   label=f"budget {budget:g}: {exceed:.0%} overrun risk")
    if probability is not None:
        index = max(int(np.ceil(probability * len(samples))) - 1, 0)
        ax.axhline(probability, color="tab:green", ls=":", lw=1.0,
                   label=f"p={probability:g} at {samples[index]:.6g}")
    ax.set_xlabel("effort (person-hours)")
    ax.set_ylabel("cumulative probability")
    ax.set_ylim(0, 1.02)
    ax.set_title(title)
    if budget is not None or probability is not None:
        ax.legend(loc="lower right", fontsize=9)
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def plot_fold_cdfs(distributions: Mapping[str, CostDistribution], path: "str | Path") -> Path:
    """Overlay of per-project held-out cost CDFs from the evaluation folds."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for pid in sorted(distributions):
        samples = distributions[pid].samples
        levels = np.arange(1, len(samples) + 1) / len(samples)
        ax.step(samples, levels, where="post", lw=0.9, alpha=0.7, label=pid)
    ax.set_xlabel("effort (person-hours)")
    ax.set_ylabel("cumulative probability")
    ax.set_title("Held-out cost distributions")
    if len(distributions) <= 16:
        ax.legend(loc="lower right", fontsize=7, ncol=2)
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def plot_accuracy(evaluation: EvaluationReport, path: "str | Path") -> Path:
    """Per-project relative error bars with the MMRE level marked."""
    ids = [row.project_id for row in evaluation.per_project]
    signed = [row.signed_error for row in evaluation.per_project]
    colors = ["tab:red" if abs(s) > evaluation.pred_threshold else "tab:blue" for s in signed]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.bar(ids, signed, color=colors)
    ax.axhline(0, color="black", lw=0.8)
    ax.axhline(evaluation.mmre, color="tab:orange", ls="--", lw=1.0,
               label=f"MMRE {evaluation.mmre:.3f}")
    ax.axhline(-evaluation.mmre, color="tab:orange", ls="--", lw=1.0)
    ax.set_ylabel("signed relative error")
    ax.set_title(
        f"Leave-one-out accuracy: MMRE {evaluation.mmre:.3f}, "
        f"Pred({evaluation.pred_threshold:g}) {evaluation.pred:.2f}"
    )
    ax.tick_params(axis="x", rotation=60, labelsize=8)
    ax.legend(loc="upper right", fontsize=9)
    ax.grid(axis="y", alpha=0.3)
    return _finish(fig, path)


def plot_ranking(ranking: FactorRanking, path: "str | Path", theta: float = 0.3) -> Path:
    """|rho| per candidate driver, selection threshold marked."""
    entries = [e for e in ranking.entries if e.rho is not None]
    ids = [e.candidate_id for e in entries]
    magnitudes = [abs(e.rho) for e in entries]
    colors = ["tab:green" if e.selected else "tab:gray" for e in entries]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.bar(ids, magnitudes, color=colors)
    ax.axhline(theta, color="tab:orange", ls="--", lw=1.0, label=f"|rho| threshold {theta:g}")
    ax.set_ylabel("|Spearman rho| vs cost overhead")
    ax.set_title("Candidate cost-driver ranking")
    ax.tick_params(axis="x", rotation=60, labelsize=8)
    ax.legend(loc="upper right", fontsize=9)
    ax.grid(axis="y", alpha=0.3)
    return _finish(fig, path)
