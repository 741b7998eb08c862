"""One full refinement iteration: screen, calibrate, rank, evaluate, suggest.

The pipeline recommends refinements but never applies one on its own; every
data change (dropping an outlier, excluding an inconsistently measured
project) happens through `apply_suggestions`, which returns a new dataset
revision and leaves the input untouched.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

from .calibration import (
    CalibrationPoint,
    CalibrationResult,
    ProjectRecord,
    fit_nominal_productivity,
    mean_overhead,
)
from .estimation import CostDistribution
from .evaluation import (
    FIX_EFFORT_SCOPE,
    RE_ELICIT_RATINGS,
    REMOVE_OUTLIER,
    SUGGESTION_KINDS,
    EvaluationReport,
    RefinementSuggestion,
    UsableData,
    compare_pre_post,
    loocv_evaluate,
    suggest_missing_drivers,
    usable_projects,
)
from .model import CausalModel, validate_model
from .sampling import RandomSeed, SamplePlan, as_seed, simulate_overhead
from .screening import (
    AssociationPair,
    DataQualityReport,
    DisagreementReport,
    EffortScope,
    FactorRanking,
    OutlierReport,
    assess_expert_disagreement,
    detect_factor_associations,
    detect_outliers,
    empirical_overhead,
    find_group_separators,
    rank_cost_drivers,
    validate_data,
)

__all__ = [
    "IterationConfig",
    "StopDecision",
    "PreModelingResult",
    "IterationReport",
    "calibrate_dataset",
    "pre_modeling_analysis",
    "run_iteration",
    "check_stop_criterion",
    "apply_suggestions",
    "ApplyResult",
]


@dataclass(frozen=True)
class IterationConfig:
    """Knobs for one refinement iteration; defaults match the CLI defaults."""

    plan: SamplePlan = SamplePlan()
    seed: RandomSeed | int = 0
    rho_threshold: float = 0.3
    p_threshold: float = 0.05
    rating_spread_threshold: int = 1
    association_threshold: float = 0.7
    scope_policy: "str | frozenset[str]" = "modal"
    target_mmre: float = 0.25
    estimate_statistic: str = "median"
    pred_threshold: float = 0.25

    def __post_init__(self):
        object.__setattr__(self, "seed", as_seed(self.seed))
        if self.target_mmre <= 0:
            raise ValueError(f"target MMRE must be positive, got {self.target_mmre}")


@dataclass(frozen=True)
class StopDecision:
    stop: bool
    rationale: str


@dataclass(frozen=True)
class PreModelingResult:
    """Everything the pre-modeling half of an iteration produces."""

    data_quality: DataQualityReport
    usable: UsableData
    disagreement: DisagreementReport
    calibration: CalibrationResult
    mean_overheads: dict[str, float]
    implied_overheads: dict[str, float]
    candidates: dict[str, list[float]]
    attribute_values: dict[str, dict[str, float]]
    ranking: FactorRanking
    associations: tuple[AssociationPair, ...]
    outliers: OutlierReport

    @property
    def scope(self) -> EffortScope:
        return self.usable.scope


@dataclass(frozen=True)
class IterationReport:
    """Everything one iteration produced, in the order it was produced."""

    data_quality: DataQualityReport
    scope: EffortScope
    disagreement: DisagreementReport
    calibration: CalibrationResult
    ranking: FactorRanking
    associations: tuple[AssociationPair, ...]
    outliers: OutlierReport
    evaluation: EvaluationReport
    suggestions: tuple[RefinementSuggestion, ...]
    stop: StopDecision
    fold_distributions: dict[str, CostDistribution] = field(default_factory=dict)


def _check_model(model: CausalModel) -> None:
    violations = validate_model(model)
    if violations:
        raise ValueError("model is structurally invalid: " + "; ".join(str(v) for v in violations))


def calibrate_dataset(
    model: CausalModel,
    projects: Sequence[ProjectRecord],
    plan: SamplePlan,
    seed: RandomSeed | int,
    scope_policy="modal",
) -> tuple[CalibrationResult, UsableData, dict[str, float]]:
    """Simulate each usable project's overhead and fit nominal productivity.

    Returns the calibration, the usable-project selection, and the simulated
    mean overhead per project.
    """
    _check_model(model)
    seed = as_seed(seed)
    usable = usable_projects(model, projects, scope_policy)
    if len(usable.project_ids) < 2:
        raise ValueError(
            f"calibration needs at least 2 usable projects, got {len(usable.project_ids)}"
        )
    by_id = {p.id: p for p in projects}
    mean_cos = {
        pid: mean_overhead(
            simulate_overhead(model, usable.ratings[pid], plan, seed.derive(f"project:{pid}"))
        )
        for pid in usable.project_ids
    }
    calibration = fit_nominal_productivity(
        [
            CalibrationPoint(pid, by_id[pid].size, usable.totals[pid], mean_cos[pid])
            for pid in usable.project_ids
        ]
    )
    return calibration, usable, mean_cos


def _numeric_attributes(
    projects: Sequence[ProjectRecord], pids: Sequence[str]
) -> dict[str, dict[str, float]]:
    """Numeric attributes covering every listed project, as name -> pid -> value."""
    by_id = {p.id: p for p in projects}
    names = sorted(
        {
            name
            for pid in pids
            for name, value in by_id[pid].attributes.items()
            if isinstance(value, (int, float)) and not isinstance(value, bool)
        }
    )
    out = {}
    for name in names:
        values = {}
        complete = True
        for pid in pids:
            value = by_id[pid].attributes.get(name)
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                values[pid] = float(value)
            else:
                complete = False
                break
        if complete:
            out[name] = values
    return out


def pre_modeling_analysis(
    model: CausalModel,
    projects: Sequence[ProjectRecord],
    config: IterationConfig = IterationConfig(),
) -> PreModelingResult:
    """Data screening, calibration, driver ranking, and outlier detection."""
    _check_model(model)
    seed = as_seed(config.seed)
    data_quality = validate_data(projects, model, config.rating_spread_threshold)
    disagreement = assess_expert_disagreement(projects, config.rating_spread_threshold)
    calibration, usable, mean_cos = calibrate_dataset(
        model, projects, config.plan, seed, config.scope_policy
    )
    by_id = {p.id: p for p in projects}
    pids = usable.project_ids
    implied_co = {
        pid: empirical_overhead(
            usable.totals[pid], by_id[pid].size, calibration.nominal_productivity
        )
        for pid in pids
    }

    attribute_values = _numeric_attributes(projects, pids)
    candidates: dict[str, list[float]] = {}
    factor_ids = {fid for pid in pids for fid in usable.ratings[pid]}
    for fid in sorted(factor_ids):
        if all(fid in usable.ratings[pid] for pid in pids):
            candidates[fid] = [float(usable.ratings[pid][fid]) for pid in pids]
    for name, values in attribute_values.items():
        if name not in candidates:
            candidates[name] = [values[pid] for pid in pids]

    target = [implied_co[pid] for pid in pids]
    if len(pids) >= 4 and candidates:
        ranking = rank_cost_drivers(
            candidates, target, config.rho_threshold, config.p_threshold, seed.derive("rank")
        )
    else:
        ranking = FactorRanking(())

    selected = {cid: candidates[cid] for cid in ranking.selected_ids()}
    associations = (
        detect_factor_associations(selected, config.association_threshold)
        if len(selected) >= 2
        else ()
    )

    if len(pids) >= 4:
        outliers = detect_outliers(calibration.per_project_nominal)
        separators, skipped = find_group_separators(
            [by_id[pid] for pid in pids],
            calibration.per_project_nominal,
            config.p_threshold,
        )
        outliers = outliers.with_separators(separators, skipped)
    else:
        outliers = OutlierReport()

    return PreModelingResult(
        data_quality=data_quality,
        usable=usable,
        disagreement=disagreement,
        calibration=calibration,
        mean_overheads=mean_cos,
        implied_overheads=implied_co,
        candidates=candidates,
        attribute_values=attribute_values,
        ranking=ranking,
        associations=tuple(associations),
        outliers=outliers,
    )


def run_iteration(
    model: CausalModel,
    projects: Sequence[ProjectRecord],
    config: IterationConfig = IterationConfig(),
) -> IterationReport:
    """Execute the full analysis cycle over an immutable dataset snapshot.

    Stages, in order: data validation, effort-scope harmonization, expert
    aggregation, calibration, driver ranking, outlier and group screening,
    leave-one-out evaluation, residual-driven driver suggestions, and the
    ranking-vs-model comparison.  Inputs are never mutated.
    """
    seed = as_seed(config.seed)
    pre = pre_modeling_analysis(model, projects, config)
    pids = pre.usable.project_ids
    if len(pids) < 3:
        raise ValueError(f"iteration needs at least 3 projects surviving validation, got {len(pids)}")

    evaluation, fold_distributions = loocv_evaluate(
        model,
        projects,
        config.plan,
        seed,
        scope_policy=config.scope_policy,
        statistic=config.estimate_statistic,
        pred_threshold=config.pred_threshold,
        with_distributions=True,
    )

    residuals = {pid: pre.implied_overheads[pid] - pre.mean_overheads[pid] for pid in pids}
    unused_attributes = {
        name: values
        for name, values in pre.attribute_values.items()
        if name not in model.factor_map
    }
    residual_suggestions = (
        suggest_missing_drivers(
            residuals,
            unused_attributes,
            config.rho_threshold,
            config.p_threshold,
            seed.derive("residual-rank"),
        )
        if len(pids) >= 4
        else []
    )
    pre_post_suggestions = (
        compare_pre_post(pre.ranking, model, config.rho_threshold) if pre.ranking.entries else []
    )

    by_id = {p.id: p for p in projects}
    assembled: list[RefinementSuggestion] = []
    for pid in pre.outliers.flagged:
        value = pre.calibration.per_project_nominal[pid]
        assembled.append(
            RefinementSuggestion(
                REMOVE_OUTLIER,
                pid,
                f"nominal productivity {value:.6g} outside Tukey fences "
                f"[{pre.outliers.lower_fence:.6g}, {pre.outliers.upper_fence:.6g}]",
            )
        )
    scope = pre.scope
    for pid in scope.deviants:
        missing = sorted(scope.modal_scope - set(by_id[pid].phase_efforts)) if pid in by_id else []
        assembled.append(
            RefinementSuggestion(
                FIX_EFFORT_SCOPE,
                pid,
                "effort measurement misses commonly covered phase(s): " + ", ".join(missing),
            )
        )
    for cell in pre.disagreement.cells:
        assembled.append(
            RefinementSuggestion(
                RE_ELICIT_RATINGS,
                f"{cell.project_id}/{cell.factor_id}",
                f"expert ratings {cell.ratings} spread {cell.spread}",
            )
        )
    assembled.extend(pre_post_suggestions)
    assembled.extend(residual_suggestions)

    seen: set[tuple[str, str]] = set()
    unique: list[RefinementSuggestion] = []
    for suggestion in assembled:
        key = (suggestion.kind, suggestion.subject)
        if key not in seen:
            seen.add(key)
            unique.append(suggestion)
    unique.sort(key=lambda s: (SUGGESTION_KINDS.index(s.kind), s.subject))

    stop = check_stop_criterion(evaluation, config)
    return IterationReport(
        data_quality=pre.data_quality,
        scope=scope,
        disagreement=pre.disagreement,
        calibration=pre.calibration,
        ranking=pre.ranking,
        associations=pre.associations,
        outliers=pre.outliers,
        evaluation=evaluation,
        suggestions=tuple(unique),
        stop=stop,
        fold_distributions=fold_distributions,
    )


def check_stop_criterion(report, config: IterationConfig) -> StopDecision:
    """Stop refining once MMRE is at or below the configured target."""
    evaluation = report.evaluation if isinstance(report, IterationReport) else report
    if not isinstance(evaluation, EvaluationReport):
        raise ValueError("report carries no evaluation results")
    mmre = evaluation.mmre
    if mmre <= config.target_mmre:
        return StopDecision(
            True, f"MMRE {mmre:.4f} is within the target {config.target_mmre:.4f}: stop refining"
        )
    return StopDecision(
        False, f"MMRE {mmre:.4f} exceeds the target {config.target_mmre:.4f}: continue refining"
    )


@dataclass(frozen=True)
class ApplyResult:
    projects: tuple[ProjectRecord, ...]
    applied: tuple[RefinementSuggestion, ...]
    skipped: tuple[tuple[RefinementSuggestion, str], ...]


def apply_suggestions(
    projects: Sequence[ProjectRecord],
    suggestions: Sequence[RefinementSuggestion],
    kinds: Sequence[str] = (REMOVE_OUTLIER, FIX_EFFORT_SCOPE),
) -> ApplyResult:
    """Produce a new dataset revision from data-side suggestions.

    remove_outlier and fix_effort_scope drop the named project (the tool
    cannot re-collect measurements); the remaining kinds require human model
    or measurement changes and are reported as skipped.
    """
    for kind in kinds:
        if kind not in SUGGESTION_KINDS:
            raise ValueError(f"unknown suggestion kind {kind!r}")
    to_drop: set[str] = set()
    applied = []
    skipped = []
    for suggestion in suggestions:
        if suggestion.kind not in kinds:
            skipped.append((suggestion, "kind not selected for application"))
        elif suggestion.kind in (REMOVE_OUTLIER, FIX_EFFORT_SCOPE):
            if suggestion.subject in {p.id for p in projects}:
                to_drop.add(suggestion.subject)
                applied.append(suggestion)
            else:
                skipped.append((suggestion, "project not present in the dataset"))
        else:
            skipped.append((suggestion, "requires a human model or measurement change"))
    remaining = tuple(p for p in projects if p.id not in to_drop)
    return ApplyResult(remaining, tuple(applied), tuple(skipped))
