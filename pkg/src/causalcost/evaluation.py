"""Post-modeling analysis: leave-one-out evaluation and refinement hints.

Accuracy is reported as MMRE / MdMRE / Pred and consistency as the sample
standard deviation of signed relative errors, so both systematic bias and
scatter are visible independently.  Every fold derives its own random
substream from (master seed, project id); folds can run in any order and
the report never changes.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .calibration import CalibrationPoint, ProjectRecord, fit_nominal_productivity, mean_overhead
from .estimation import CostDistribution, estimate_cost, point_estimate
from .model import CausalModel, validate_ratings
from .sampling import RandomSeed, SamplePlan, as_seed, simulate_overhead
from .screening import (
    EffortScope,
    FactorRanking,
    assess_expert_disagreement,
    harmonize_effort_scope,
    rank_cost_drivers,
)
from .stats import lower_median

__all__ = [
    "ProjectEvaluation",
    "EvaluationReport",
    "RefinementSuggestion",
    "REMOVE_OUTLIER",
    "FIX_EFFORT_SCOPE",
    "RE_ELICIT_RATINGS",
    "ADD_CANDIDATE_FACTOR",
    "REFINE_SIZE_METRIC",
    "SUGGESTION_KINDS",
    "UsableData",
    "usable_projects",
    "accuracy_metrics",
    "loocv_evaluate",
    "suggest_missing_drivers",
    "compare_pre_post",
]

REMOVE_OUTLIER = "remove_outlier"
FIX_EFFORT_SCOPE = "fix_effort_scope"
RE_ELICIT_RATINGS = "re_elicit_ratings"
ADD_CANDIDATE_FACTOR = "add_candidate_factor"
REFINE_SIZE_METRIC = "refine_size_metric"
SUGGESTION_KINDS = (
    REMOVE_OUTLIER,
    FIX_EFFORT_SCOPE,
    RE_ELICIT_RATINGS,
    ADD_CANDIDATE_FACTOR,
    REFINE_SIZE_METRIC,
)

DEFAULT_PRED_THRESHOLD = 0.25


@dataclass(frozen=True)
class ProjectEvaluation:
    project_id: str
    actual: float
    estimate: float
    mre: float
    signed_error: float


@dataclass(frozen=True)
class EvaluationReport:
    per_project: tuple[ProjectEvaluation, ...]
    mmre: float
    mdmre: float
    pred: float
    pred_threshold: float
    consistency: float
    excluded: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class RefinementSuggestion:
    """One recommended refinement; the tool proposes, people decide."""

    kind: str
    subject: str
    evidence: str

    def __post_init__(self):
        if self.kind not in SUGGESTION_KINDS:
            raise ValueError(f"unknown suggestion kind {self.kind!r}")


def accuracy_metrics(
    actuals: Sequence[float],
    estimates: Sequence[float],
    project_ids: Sequence[str] | None = None,
    pred_threshold: float = DEFAULT_PRED_THRESHOLD,
    excluded: Sequence[tuple[str, str]] = (),
) -> EvaluationReport:
    """MRE-family metrics over paired actual and estimated efforts."""
    if len(actuals) != len(estimates):
        raise ValueError(f"length mismatch: {len(actuals)} actuals vs {len(estimates)} estimates")
    if len(actuals) == 0:
        raise ValueError("no projects to evaluate")
    if project_ids is None:
        project_ids = [f"project_{i}" for i in range(len(actuals))]
    rows = []
    for pid, actual, estimate in zip(project_ids, actuals, estimates):
        if actual <= 0:
            raise ValueError(f"actual effort for {pid!r} must be positive, got {actual}")
        signed = (estimate - actual) / actual
        rows.append(ProjectEvaluation(pid, float(actual), float(estimate), abs(signed), signed))
    mres = np.array([r.mre for r in rows])
    signed_errors = np.array([r.signed_error for r in rows])
    consistency = float(np.std(signed_errors, ddof=1)) if len(rows) > 1 else 0.0
    return EvaluationReport(
        per_project=tuple(rows),
        mmre=float(np.mean(mres)),
        mdmre=lower_median(mres),
        pred=float(np.mean(mres <= pred_threshold)),
        pred_threshold=pred_threshold,
        consistency=consistency,
        excluded=tuple(excluded),
    )


class UsableData(NamedTuple):
    """Projects passing the evaluation preconditions, plus shared context."""

    project_ids: tuple[str, ...]  # sorted
    ratings: dict[str, dict[str, int]]  # aggregated across experts
    totals: dict[str, float]  # common-scope actuals for usable projects
    scope: "EffortScope | None"
    excluded: tuple[tuple[str, str], ...]  # (project id, reason)


def usable_projects(
    model: CausalModel,
    projects: Sequence[ProjectRecord],
    scope_policy="modal",
) -> UsableData:
    """Select projects that can be calibrated and evaluated, with reasons for the rest."""
    excluded: list[tuple[str, str]] = []
    ratings = assess_expert_disagreement(projects).aggregated
    with_efforts = [p for p in projects if p.phase_efforts]
    for p in projects:
        if not p.phase_efforts:
            excluded.append((p.id, "no phase effort measured"))
    scope = harmonize_effort_scope(with_efforts, scope_policy) if with_efforts else None
    usable: list[str] = []
    for p in with_efforts:
        if p.size is None or p.size <= 0:
            excluded.append((p.id, f"nonpositive or missing size {p.size}"))
            continue
        total = scope.totals.get(p.id) if scope else None
        if total is None:
            excluded.append((p.id, "outside the common effort scope"))
            continue
        if total <= 0:
            excluded.append((p.id, f"nonpositive common-scope effort {total}"))
            continue
        problems = validate_ratings(model, ratings.get(p.id, {}))
        if problems:
            excluded.append((p.id, "; ".join(problems)))
            continue
        usable.append(p.id)
    totals = {pid: scope.totals[pid] for pid in usable} if scope else {}
    return UsableData(tuple(sorted(usable)), ratings, totals, scope, tuple(excluded))


def loocv_evaluate(
    model: CausalModel,
    projects: Sequence[ProjectRecord],
    plan: SamplePlan,
    seed: RandomSeed | int,
    scope_policy="modal",
    statistic: str = "median",
    pred_threshold: float = DEFAULT_PRED_THRESHOLD,
    with_distributions: bool = False,
):
    """Leave-one-out evaluation: estimate each project from all the others.

    Per fold the nominal productivity is recalibrated without the held-out
    project, the held-out cost distribution is simulated with the fold
    substream, and its point estimate is scored against the common-scope
    actual effort.  With `with_distributions=True` also returns the per-fold
    cost distributions keyed by project id.
    """
    seed = as_seed(seed)
    by_id = {p.id: p for p in projects}
    usable, ratings, totals, _, excluded = usable_projects(model, projects, scope_policy)
    if len(usable) < 3:
        raise ValueError(f"leave-one-out evaluation needs at least 3 usable projects, got {len(usable)}")
    mean_cos = {
        pid: mean_overhead(
            simulate_overhead(model, ratings[pid], plan, seed.derive(f"project:{pid}"))
        )
        for pid in usable
    }
    actuals = []
    estimates = []
    distributions: dict[str, CostDistribution] = {}
    for held_out in usable:
        points = [
            CalibrationPoint(pid, by_id[pid].size, totals[pid], mean_cos[pid])
            for pid in usable
            if pid != held_out
        ]
        calibration = fit_nominal_productivity(points)
        dist = estimate_cost(
            model,
            ratings[held_out],
            by_id[held_out].size,
            calibration.nominal_productivity,
            plan,
            seed.derive(f"fold:{held_out}"),
        )
        actuals.append(totals[held_out])
        estimates.append(point_estimate(dist, statistic))
        if with_distributions:
            distributions[held_out] = dist
    report = accuracy_metrics(actuals, estimates, usable, pred_threshold, excluded)
    if with_distributions:
        return report, distributions
    return report


def suggest_missing_drivers(
    residual_overheads: Mapping[str, float],
    attributes: Mapping[str, Mapping[str, float]],
    theta: float = 0.3,
    alpha: float = 0.05,
    seed: RandomSeed | int = 0,
) -> list[RefinementSuggestion]:
    """Attributes outside the model that still explain overhead residuals.

    The residual target is the data-implied overhead minus the model-simulated
    mean overhead per project; any attribute ranking above the thresholds
    becomes an add-candidate-factor suggestion.
    """
    pids = sorted(residual_overheads)
    target = [residual_overheads[pid] for pid in pids]
    usable = {
        name: [values[pid] for pid in pids]
        for name, values in attributes.items()
        if all(pid in values for pid in pids)
    }
    if not usable:
        return []
    ranking = rank_cost_drivers(usable, target, theta, alpha, seed)
    suggestions = []
    for entry in ranking.entries:
        if not entry.selected:
            continue
        suggestions.append(
            RefinementSuggestion(
                ADD_CANDIDATE_FACTOR,
                entry.candidate_id,
                f"residual-overhead correlation rho={entry.rho:+.3f}, p={entry.p_value:.4f}",
            )
        )
    return suggestions


def compare_pre_post(
    pre: FactorRanking,
    model: CausalModel,
    theta: float = 0.3,
) -> list[RefinementSuggestion]:
    """Discrepancies between the data-driven ranking and the expert model.

    Selected candidates missing from the model become add-candidate-factor
    suggestions; modeled factors without data support (weak, undefined, or
    unranked correlation) become re-elicitation suggestions.
    """
    modeled = set(model.factor_ids())
    suggestions = []
    for entry in pre.entries:
        if entry.selected and entry.candidate_id not in modeled:
            suggestions.append(
                RefinementSuggestion(
                    ADD_CANDIDATE_FACTOR,
                    entry.candidate_id,
                    f"data-significant driver not in the model: "
                    f"rho={entry.rho:+.3f}, p={entry.p_value:.4f}",
                )
            )
    for fid in sorted(model.rated_factor_ids()):
        entry = pre.entry(fid)
        if entry is None:
            suggestions.append(
                RefinementSuggestion(
                    RE_ELICIT_RATINGS, fid, "modeled factor absent from the candidate ranking"
                )
            )
        elif entry.rho is None:
            suggestions.append(
                RefinementSuggestion(
                    RE_ELICIT_RATINGS, fid, "modeled factor has undefined correlation (constant ratings)"
                )
            )
        elif abs(entry.rho) < theta:
            suggestions.append(
                RefinementSuggestion(
                    RE_ELICIT_RATINGS,
                    fid,
                    f"modeled factor has weak data support: rho={entry.rho:+.3f}",
                )
            )
    return suggestions
