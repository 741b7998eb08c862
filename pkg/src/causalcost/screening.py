"""Pre-modeling analysis: data quality screening and cost-driver discovery.

Everything here reads immutable project snapshots and produces findings as
data.  Findings never raise; hard errors are reserved for calls that cannot
produce a meaningful answer at all (for example an empty common effort scope).
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .calibration import ProjectRecord
from .model import CausalModel
from .sampling import RandomSeed, as_seed
from .stats import (
    DEFAULT_MC_PERMUTATIONS,
    lower_median,
    mann_whitney_exact,
    spearman_rho,
    spearman_test,
    tukey_fences,
)

__all__ = [
    "COMPLETENESS",
    "CONSISTENCY",
    "CORRECTNESS",
    "Finding",
    "DataQualityReport",
    "EffortScope",
    "RankedCandidate",
    "FactorRanking",
    "AssociationPair",
    "GroupSeparator",
    "OutlierReport",
    "DisagreementCell",
    "DisagreementReport",
    "validate_data",
    "harmonize_effort_scope",
    "empirical_overhead",
    "rank_cost_drivers",
    "detect_factor_associations",
    "detect_outliers",
    "find_group_separators",
    "assess_expert_disagreement",
]

COMPLETENESS = "completeness"
CONSISTENCY = "consistency"
CORRECTNESS = "correctness"

DEFAULT_RHO_THRESHOLD = 0.3
DEFAULT_P_THRESHOLD = 0.05
DEFAULT_RATING_SPREAD = 1
DEFAULT_ASSOCIATION_THRESHOLD = 0.7


@dataclass(frozen=True)
class Finding:
    """One data-quality problem, tied to a project and a field."""

    project_id: str
    field: str
    category: str  # completeness | consistency | correctness
    message: str

    def __str__(self) -> str:
        return f"{self.category}: project {self.project_id!r}, {self.field}: {self.message}"


@dataclass(frozen=True)
class DataQualityReport:
    findings: tuple[Finding, ...] = ()

    def by_category(self, category: str) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.category == category)

    @property
    def is_clean(self) -> bool:
        return not self.findings


@dataclass(frozen=True)
class EffortScope:
    """Harmonized effort totals over the phases every project measured."""

    common_scope: frozenset[str]
    modal_scope: frozenset[str]
    totals: dict[str, float]
    deviants: tuple[str, ...]


@dataclass(frozen=True)
class RankedCandidate:
    candidate_id: str
    rho: float | None
    p_value: float | None
    selected: bool
    note: str = ""


@dataclass(frozen=True)
class FactorRanking:
    entries: tuple[RankedCandidate, ...] = ()

    def selected_ids(self) -> tuple[str, ...]:
        return tuple(e.candidate_id for e in self.entries if e.selected)

    def entry(self, candidate_id: str) -> RankedCandidate | None:
        for e in self.entries:
            if e.candidate_id == candidate_id:
                return e
        return None


@dataclass(frozen=True)
class AssociationPair:
    first: str
    second: str
    rho: float


@dataclass(frozen=True)
class GroupSeparator:
    attribute: str
    partition: tuple[tuple[str, tuple[str, ...]], tuple[str, tuple[str, ...]]]
    p_value: float


@dataclass(frozen=True)
class OutlierReport:
    flagged: tuple[str, ...] = ()
    lower_fence: float = float("nan")
    upper_fence: float = float("nan")
    lower_hinge: float = float("nan")
    upper_hinge: float = float("nan")
    separators: tuple[GroupSeparator, ...] = ()
    skipped_attributes: tuple[str, ...] = ()

    def with_separators(self, separators, skipped) -> "OutlierReport":
        return replace(self, separators=tuple(separators), skipped_attributes=tuple(skipped))


@dataclass(frozen=True)
class DisagreementCell:
    project_id: str
    factor_id: str
    spread: int
    ratings: tuple[int, ...]
    aggregate: int


@dataclass(frozen=True)
class DisagreementReport:
    cells: tuple[DisagreementCell, ...]
    aggregated: dict[str, dict[str, int]] = field(default_factory=dict)


def validate_data(
    projects: Sequence[ProjectRecord],
    model: CausalModel | None = None,
    rating_spread_threshold: int = DEFAULT_RATING_SPREAD,
) -> DataQualityReport:
    """Screen raw records for completeness, correctness, and consistency.

    Rating-scale checks need the causal model and are skipped without one.
    """
    findings: list[Finding] = []
    for record in projects:
        if record.size is None:
            findings.append(Finding(record.id, "size", COMPLETENESS, "size not measured"))
        elif record.size <= 0:
            findings.append(
                Finding(record.id, "size", CORRECTNESS, f"size must be positive, got {record.size}")
            )
        if not record.phase_efforts:
            findings.append(Finding(record.id, "effort", COMPLETENESS, "no phase effort measured"))
        for phase in sorted(record.phase_efforts):
            value = record.phase_efforts[phase]
            if value < 0:
                findings.append(
                    Finding(record.id, f"effort_{phase}", CORRECTNESS, f"negative effort {value}")
                )
        if not record.ratings:
            findings.append(Finding(record.id, "ratings", COMPLETENESS, "no expert ratings"))
        if model is not None:
            factors = model.factor_map
            for fid in sorted(model.rated_factor_ids()):
                given = [r[fid] for r in record.ratings.values() if fid in r]
                if record.ratings and not given:
                    findings.append(
                        Finding(record.id, f"factor_{fid}", COMPLETENESS, "no expert rated this factor")
                    )
                    continue
                level_count = factors[fid].scale.level_count
                for expert in sorted(record.ratings):
                    if fid not in record.ratings[expert]:
                        continue
                    r = record.ratings[expert][fid]
                    if not (0 <= r <= level_count):
                        findings.append(
                            Finding(
                                record.id,
                                f"factor_{fid}",
                                CORRECTNESS,
                                f"rating {r} from expert {expert!r} outside [0, {level_count}]",
                            )
                        )

    # phase-coverage consistency against the majority scope
    measurable = [p for p in projects if p.phase_efforts]
    if measurable:
        try:
            scope = harmonize_effort_scope(measurable, "modal")
        except ValueError:
            findings.append(
                Finding("<dataset>", "effort", CONSISTENCY, "projects share no commonly measured phase")
            )
        else:
            for record in measurable:
                missing = sorted(scope.modal_scope - set(record.phase_efforts))
                if missing:
                    findings.append(
                        Finding(
                            record.id,
                            "effort",
                            CONSISTENCY,
                            "missing commonly measured phase(s): " + ", ".join(missing),
                        )
                    )

    # inter-expert rating spread
    disagreement = assess_expert_disagreement(projects, rating_spread_threshold)
    for cell in disagreement.cells:
        findings.append(
            Finding(
                cell.project_id,
                f"factor_{cell.factor_id}",
                CONSISTENCY,
                f"expert ratings {cell.ratings} spread {cell.spread} exceeds {rating_spread_threshold}",
            )
        )
    return DataQualityReport(tuple(findings))


def harmonize_effort_scope(
    projects: Sequence[ProjectRecord],
    policy: "str | frozenset[str] | set[str]" = "modal",
) -> EffortScope:
    """Comparable effort totals over a common phase scope.

    Modal policy: totals cover the intersection of every project's measured
    phases, and a project deviates if it lacks any phase measured by a strict
    majority.  An explicit phase set is used as-is; projects missing part of
    it are deviants and get no total.
    """
    if not projects:
        raise ValueError("no projects to harmonize")
    phase_sets = {p.id: frozenset(p.phase_efforts) for p in projects}
    if isinstance(policy, str):
        if policy != "modal":
            raise ValueError(f"unknown effort-scope policy {policy!r}")
        common = frozenset.intersection(*phase_sets.values())
        if not common:
            raise ValueError("common effort scope is empty: no phase measured by all projects")
        counts: dict[str, int] = {}
        for phases in phase_sets.values():
            for phase in phases:
                counts[phase] = counts.get(phase, 0) + 1
        modal = frozenset(ph for ph, c in counts.items() if c > len(projects) / 2)
        deviants = tuple(p.id for p in projects if not modal <= phase_sets[p.id])
        totals = {p.id: p.total_effort(common) for p in projects}
        return EffortScope(common, modal, totals, deviants)
    explicit = frozenset(policy)
    if not explicit:
        raise ValueError("explicit effort scope must name at least one phase")
    deviants = tuple(p.id for p in projects if not explicit <= phase_sets[p.id])
    totals = {p.id: p.total_effort(explicit) for p in projects if explicit <= phase_sets[p.id]}
    return EffortScope(explicit, explicit, totals, deviants)


def empirical_overhead(effort: float, size: float, nominal_productivity: float) -> float:
    """Data-implied cost overhead: effort * P / size - 1 (can be negative)."""
    if size is None or size <= 0:
        raise ValueError(f"size must be positive, got {size}")
    if nominal_productivity <= 0:
        raise ValueError(f"nominal productivity must be positive, got {nominal_productivity}")
    return effort * nominal_productivity / size - 1.0


def rank_cost_drivers(
    candidates: Mapping[str, Sequence[float]],
    target: Sequence[float],
    theta: float = DEFAULT_RHO_THRESHOLD,
    alpha: float = DEFAULT_P_THRESHOLD,
    seed: RandomSeed | int = 0,
    permutations: int = DEFAULT_MC_PERMUTATIONS,
) -> FactorRanking:
    """Rank candidate drivers by |Spearman rho| against the overhead target.

    p-values are exact for n <= 8 and seeded Monte Carlo permutation above;
    a candidate is selected when |rho| >= theta and p <= alpha.  Candidates
    with an undefined correlation (constant values) rank last, unselected,
    with a diagnostic note.
    """
    target_arr = np.asarray(list(target), dtype=float)
    n = len(target_arr)
    if n < 4:
        raise ValueError(f"driver ranking needs at least 4 projects, got {n}")
    seed = as_seed(seed)
    entries = []
    for cid in sorted(candidates):
        values = np.asarray(list(candidates[cid]), dtype=float)
        if len(values) != n:
            raise ValueError(f"candidate {cid!r} has {len(values)} values for {n} projects")
        result = spearman_test(
            values, target_arr, rng=seed.generator(f"perm:{cid}"), permutations=permutations
        )
        if result.rho is None:
            entries.append(
                RankedCandidate(cid, None, None, False, "constant values, correlation undefined")
            )
            continue
        selected = abs(result.rho) >= theta and result.p_value <= alpha
        entries.append(RankedCandidate(cid, result.rho, result.p_value, selected, result.method))
    entries.sort(key=lambda e: (-(abs(e.rho) if e.rho is not None else -1.0), e.candidate_id))
    return FactorRanking(tuple(entries))


def detect_factor_associations(
    candidates: Mapping[str, Sequence[float]],
    threshold: float = DEFAULT_ASSOCIATION_THRESHOLD,
) -> tuple[AssociationPair, ...]:
    """Unordered candidate pairs with |Spearman rho| at or above the threshold.

    Flagged pairs are interaction-or-redundancy candidates for expert review.
    """
    ids = sorted(candidates)
    pairs = []
    for i, first in enumerate(ids):
        for second in ids[i + 1 :]:
            rho = spearman_rho(
                np.asarray(list(candidates[first]), dtype=float),
                np.asarray(list(candidates[second]), dtype=float),
            )
            if rho is not None and abs(rho) >= threshold:
                pairs.append(AssociationPair(first, second, rho))
    pairs.sort(key=lambda p: (-abs(p.rho), p.first, p.second))
    return tuple(pairs)


def detect_outliers(values: Mapping[str, float], k: float = 1.5) -> OutlierReport:
    """Tukey-fence outliers over per-project values (nominal productivities)."""
    if len(values) < 4:
        raise ValueError(f"outlier detection needs at least 4 values, got {len(values)}")
    lo, hi, q1, q3 = tukey_fences(list(values.values()), k)
    flagged = tuple(pid for pid in sorted(values) if values[pid] < lo or values[pid] > hi)
    return OutlierReport(flagged, lo, hi, q1, q3)


def find_group_separators(
    projects: Sequence[ProjectRecord],
    target: Mapping[str, float],
    alpha: float = DEFAULT_P_THRESHOLD,
    attributes: Sequence[str] | None = None,
) -> tuple[tuple[GroupSeparator, ...], tuple[str, ...]]:
    """Categorical attributes that split projects into productivity groups.

    Each binary attribute is tested with the exact two-sided rank-sum test;
    attributes reaching p <= alpha are returned ordered by p.  Attributes
    that do not split the projects into two groups of at least 2 are skipped
    and reported back by name.
    """
    by_id = {p.id: p for p in projects}
    if attributes is None:
        names = set()
        for p in projects:
            for name, value in p.attributes.items():
                if isinstance(value, str):
                    names.add(name)
        attributes = sorted(names)
    separators = []
    skipped = []
    for attribute in attributes:
        groups: dict[str, list[str]] = {}
        for pid in sorted(target):
            record = by_id.get(pid)
            if record is None or attribute not in record.attributes:
                continue
            groups.setdefault(str(record.attributes[attribute]), []).append(pid)
        if len(groups) != 2 or any(len(ids) < 2 for ids in groups.values()):
            skipped.append(attribute)
            continue
        (val_a, ids_a), (val_b, ids_b) = sorted(groups.items())
        test = mann_whitney_exact([target[i] for i in ids_a], [target[i] for i in ids_b])
        if test.p_value <= alpha:
            separators.append(
                GroupSeparator(
                    attribute,
                    ((val_a, tuple(ids_a)), (val_b, tuple(ids_b))),
                    test.p_value,
                )
            )
    separators.sort(key=lambda s: (s.p_value, s.attribute))
    return tuple(separators), tuple(skipped)


def assess_expert_disagreement(
    projects: Sequence[ProjectRecord],
    spread_threshold: int = DEFAULT_RATING_SPREAD,
) -> DisagreementReport:
    """Flag (project, factor) cells whose expert ratings spread beyond the
    threshold, and aggregate every cell to its lower median regardless."""
    cells = []
    aggregated: dict[str, dict[str, int]] = {}
    for record in projects:
        rated = sorted({fid for ratings in record.ratings.values() for fid in ratings})
        merged: dict[str, int] = {}
        for fid in rated:
            given = tuple(
                record.ratings[expert][fid]
                for expert in sorted(record.ratings)
                if fid in record.ratings[expert]
            )
            aggregate = int(lower_median(given))
            merged[fid] = aggregate
            spread = max(given) - min(given)
            if spread > spread_threshold:
                cells.append(DisagreementCell(record.id, fid, spread, given, aggregate))
        aggregated[record.id] = merged
    return DisagreementReport(tuple(cells), aggregated)
