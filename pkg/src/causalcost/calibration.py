"""Nominal-productivity calibration from past-project data.

Total effort is read as (size / nominal_productivity) * (1 + CO): the
overhead fraction acts as a productivity loss on top of the nominal cost.
With x_k = size_k * (1 + CO_k), effort is proportional to x, so the baseline
rate comes out of a least-squares fit of effort on x through the origin
(a zero-size project incurs zero nominal effort by definition).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .sampling import OverheadDistribution

__all__ = [
    "ProjectRecord",
    "CalibrationPoint",
    "CalibrationResult",
    "mean_overhead",
    "fit_nominal_productivity",
]


@dataclass(frozen=True)
class ProjectRecord:
    """One past project: size, per-phase efforts, per-expert ratings, extras.

    The constructor is deliberately permissive: records with missing or
    nonsensical values must be representable so that data validation can
    report them as findings instead of crashing on ingestion.

    phase_efforts maps phase name -> person-hours; an absent phase means the
    phase was not measured, which is different from zero effort.  ratings maps
    expert id -> {factor id -> ordinal rating, 0 = nominal}.  attributes holds
    auxiliary measured values (numeric or categorical).
    """

    id: str
    size: float | None
    phase_efforts: dict[str, float] = field(default_factory=dict)
    ratings: dict[str, dict[str, int]] = field(default_factory=dict)
    attributes: dict[str, float | str] = field(default_factory=dict)

    def total_effort(self, phases=None) -> float:
        """Sum of measured phase efforts, optionally restricted to `phases`."""
        if phases is None:
            return float(sum(self.phase_efforts.values()))
        return float(sum(v for k, v in self.phase_efforts.items() if k in phases))


class CalibrationPoint(NamedTuple):
    project_id: str
    size: float
    effort: float
    mean_overhead: float


@dataclass(frozen=True)
class CalibrationResult:
    nominal_productivity: float
    per_project_nominal: dict[str, float]
    regression_slope: float
    residuals: dict[str, float]


def mean_overhead(dist: OverheadDistribution) -> float:
    """Arithmetic mean of the simulated overhead samples."""
    if len(dist) == 0:
        raise ValueError("cannot summarize an empty overhead distribution")
    return float(np.mean(dist.samples))


def fit_nominal_productivity(points: list[CalibrationPoint]) -> CalibrationResult:
    """Baseline productivity from (size, effort, mean CO) triples.

    slope = sum(x_k * e_k) / sum(x_k^2) with x_k = size_k * (1 + CO_k);
    nominal productivity is 1 / slope (size units per person-hour).
    """
    if len(points) < 2:
        raise ValueError(f"calibration needs at least 2 projects, got {len(points)}")
    for p in points:
        if p.size is None or p.size <= 0:
            raise ValueError(f"project {p.project_id!r} has nonpositive size {p.size}")
        if p.effort <= 0:
            raise ValueError(f"project {p.project_id!r} has nonpositive effort {p.effort}")
    x = np.array([p.size * (1.0 + p.mean_overhead) for p in points])
    e = np.array([p.effort for p in points])
    denom = float(np.dot(x, x))
    if denom == 0.0:
        raise ValueError("degenerate calibration: all overhead-adjusted sizes are zero")
    slope = float(np.dot(x, e)) / denom
    if slope <= 0:
        raise ValueError(f"calibration produced a nonpositive effort rate {slope}")
    per_project = {p.project_id: float(xk / p.effort) for p, xk in zip(points, x)}
    residuals = {p.project_id: float(ek - slope * xk) for p, xk, ek in zip(points, x, e)}
    return CalibrationResult(
        nominal_productivity=1.0 / slope,
        per_project_nominal=per_project,
        regression_slope=slope,
        residuals=residuals,
    )
