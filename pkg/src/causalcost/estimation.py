"""Cost distributions for new or held-out projects, plus risk queries.

The cumulative distribution is empirical (sample-based), never a fitted
curve.  Quantiles use the lower empirical convention and the point estimate
is the lower median, so golden outputs are stable for a fixed seed.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from .model import CausalModel
from .sampling import RandomSeed, SamplePlan, simulate_overhead

__all__ = [
    "CostDistribution",
    "estimate_cost",
    "quantile",
    "exceedance_probability",
    "point_estimate",
]


@dataclass(frozen=True)
class CostDistribution:
    """Sorted simulated effort values (person-hours) for one project."""

    samples: np.ndarray
    size: float
    nominal_productivity: float
    plan: SamplePlan
    seed: RandomSeed

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return len(self.samples)


def estimate_cost(
    model: CausalModel,
    ratings: Mapping[str, int],
    size: float,
    nominal_productivity: float,
    plan: SamplePlan,
    seed: RandomSeed | int,
) -> CostDistribution:
    """Simulate effort = (size / nominal_productivity) * (1 + CO) per draw."""
    if nominal_productivity <= 0:
        raise ValueError(f"nominal productivity must be positive, got {nominal_productivity}")
    if size <= 0:
        raise ValueError(f"project size must be positive, got {size}")
    overhead = simulate_overhead(model, ratings, plan, seed)
    lowest = float(overhead.samples[0])
    if lowest <= -1.0:
        raise ValueError(
            f"simulated cost overhead reaches {lowest:+.4f} (<= -100%), "
            "which would make cost nonpositive"
        )
    nominal_effort = size / nominal_productivity
    samples = nominal_effort * (1.0 + overhead.samples)
    return CostDistribution(samples, size, nominal_productivity, plan, overhead.seed)


def _checked(dist: CostDistribution) -> np.ndarray:
    if len(dist) == 0:
        raise ValueError("empty cost distribution")
    return dist.samples


def quantile(dist: CostDistribution, p: float) -> float:
    """Smallest sample x such that at least a fraction p of samples is <= x."""
    samples = _checked(dist)
    if not (0.0 < p <= 1.0):
        raise ValueError(f"probability must lie in (0, 1], got {p}")
    n = len(samples)
    fractions = np.arange(1, n + 1) / n
    index = int(np.searchsorted(fractions, p, side="left"))
    return float(samples[min(index, n - 1)])


def exceedance_probability(dist: CostDistribution, budget: float) -> float:
    """Fraction of simulated efforts strictly above the given budget."""
    samples = _checked(dist)
    n = len(samples)
    return float(n - np.searchsorted(samples, budget, side="right")) / n


def point_estimate(dist: CostDistribution, statistic: str = "median") -> float:
    """Scalar summary of the distribution: lower median (default) or mean."""
    samples = _checked(dist)
    if statistic == "median":
        return float(samples[(len(samples) - 1) // 2])
    if statistic == "mean":
        return float(np.mean(samples))
    raise ValueError(f"unknown point-estimate statistic {statistic!r}")
