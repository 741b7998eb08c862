"""Synthetic organizations with known ground truth.

Real calibration datasets are proprietary, so method validation runs against
generated ones: a true causal model, a true nominal productivity, seeded
ratings and sizes, controllable effort noise, and optionally planted defects
(an effort outlier, an inconsistently measured phase, pure-noise decoy
attributes, a disagreeing expert).  The generator returns the ground truth
alongside the records so tests can check what an analysis should recover.

Ratings have exactly uniform marginals on each factor scale but share a
latent project-condition component (Gaussian copula): projects that are bad
for cost tend to be bad on several factors at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calibration import ProjectRecord
from .model import (
    CausalModel,
    CostFactor,
    DirectInfluence,
    OrdinalScale,
    TriangularParams,
    evaluate_overhead,
    validate_model,
)
from .sampling import RandomSeed, as_seed

__all__ = [
    "SyntheticSpec",
    "GroundTruth",
    "generate_synthetic_dataset",
    "default_true_model",
    "default_spec",
]

DEFAULT_PHASES = ("requirements", "implementation", "testing")
DEFAULT_PHASE_FRACTIONS = (0.2, 0.5, 0.3)
RATING_COPULA_LOADING = 0.9
OUTLIER_EFFORT_MULTIPLIER = 4.0


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic organization."""

    model: CausalModel
    nominal_productivity: float
    project_count: int = 16
    size_range: tuple[float, float] = (5.0, 60.0)
    seed: RandomSeed | int = 0
    noise_level: float = 0.0
    decoy_attributes: int = 0
    phases: tuple[str, ...] = DEFAULT_PHASES
    phase_fractions: tuple[float, ...] = DEFAULT_PHASE_FRACTIONS
    phase_jitter: float = 0.25
    plant_outlier: bool = False
    plant_missing_phase: bool = False
    plant_disagreeing_expert: bool = False

    def __post_init__(self):
        if self.project_count < 4:
            raise ValueError(f"need at least 4 projects, got {self.project_count}")
        if self.noise_level < 0:
            raise ValueError(f"noise level must be >= 0, got {self.noise_level}")
        if self.nominal_productivity <= 0:
            raise ValueError("true nominal productivity must be positive")
        if len(self.phases) != len(self.phase_fractions):
            raise ValueError("one fraction per phase required")
        if abs(sum(self.phase_fractions) - 1.0) > 1e-9:
            raise ValueError("phase fractions must sum to 1")
        violations = validate_model(self.model)
        if violations:
            raise ValueError("true model is invalid: " + "; ".join(str(v) for v in violations))


@dataclass(frozen=True)
class GroundTruth:
    nominal_productivity: float
    overheads: dict[str, float]
    driver_ids: tuple[str, ...]
    decoy_names: tuple[str, ...]
    defects: dict[str, str] = field(default_factory=dict)


def _copula_ratings(
    rng: np.random.Generator, model: CausalModel, count: int, loading: float
) -> dict[str, np.ndarray]:
    shared = rng.normal(size=count)
    ratings = {}
    for f in sorted(model.factors, key=lambda f: f.id):
        own = rng.normal(size=count)
        latent = loading * shared + math.sqrt(1.0 - loading**2) * own
        u = np.array([0.5 * (1.0 + math.erf(v / math.sqrt(2.0))) for v in latent])
        levels = f.scale.level_count
        ratings[f.id] = np.minimum((u * (levels + 1)).astype(int), levels)
    return ratings


def generate_synthetic_dataset(spec: SyntheticSpec) -> tuple[list[ProjectRecord], GroundTruth]:
    """Build seeded project records whose efforts follow the true model.

    effort_k = (size_k / P_true) * (1 + CO_k) * (1 + eps_k), with CO_k
    evaluated at the triangular mean of every influence and eps_k uniform in
    [-noise, +noise].  Phase efforts split the total by per-project jittered
    fractions; defects are applied last and reported in the ground truth.
    """
    seed = as_seed(spec.seed)
    n = spec.project_count
    model = spec.model
    mean_draw = {
        inf.key: inf.extreme_overhead.mean for inf in model.canonical_influences()
    }

    sizes = seed.generator("synth:sizes").uniform(*spec.size_range, size=n)
    ratings_by_factor = _copula_ratings(
        seed.generator("synth:ratings"), model, n, RATING_COPULA_LOADING
    )
    noise = seed.generator("synth:noise").uniform(-spec.noise_level, spec.noise_level, size=n)
    fraction_rng = seed.generator("synth:fractions")
    decoy_names = tuple(f"aux_{i + 1}" for i in range(spec.decoy_attributes))
    decoy_values = {
        name: seed.generator(f"synth:decoy:{name}").uniform(0.0, 1.0, size=n)
        for name in decoy_names
    }

    pids = [f"p{i:02d}" for i in range(n)]
    overheads: dict[str, float] = {}
    records: list[ProjectRecord] = []
    for i, pid in enumerate(pids):
        ratings = {fid: int(values[i]) for fid, values in ratings_by_factor.items()}
        co = evaluate_overhead(model, ratings, mean_draw)
        overheads[pid] = co
        total = sizes[i] / spec.nominal_productivity * (1.0 + co) * (1.0 + noise[i])
        raw = np.array(spec.phase_fractions) * fraction_rng.uniform(
            1.0 - spec.phase_jitter, 1.0 + spec.phase_jitter, size=len(spec.phases)
        )
        fractions = raw / raw.sum()
        phase_efforts = {
            phase: float(total * frac) for phase, frac in zip(spec.phases, fractions)
        }
        attributes = {name: float(decoy_values[name][i]) for name in decoy_names}
        records.append(
            ProjectRecord(
                id=pid,
                size=float(sizes[i]),
                phase_efforts=phase_efforts,
                ratings={"e1": ratings},
                attributes=attributes,
            )
        )

    defects: dict[str, str] = {}
    defect_rng = seed.generator("synth:defects")
    if spec.plant_outlier:
        index = int(defect_rng.integers(0, n))
        victim = records[index]
        records[index] = ProjectRecord(
            victim.id,
            victim.size,
            {k: v * OUTLIER_EFFORT_MULTIPLIER for k, v in victim.phase_efforts.items()},
            victim.ratings,
            victim.attributes,
        )
        defects["outlier"] = victim.id
    if spec.plant_missing_phase:
        candidates = [r for r in records if r.id not in defects.values()]
        index = int(defect_rng.integers(0, len(candidates)))
        victim = candidates[index]
        dropped = dict(victim.phase_efforts)
        dropped.pop(spec.phases[0])
        position = next(i for i, r in enumerate(records) if r.id == victim.id)
        records[position] = ProjectRecord(
            victim.id, victim.size, dropped, victim.ratings, victim.attributes
        )
        defects["missing_phase"] = victim.id
    if spec.plant_disagreeing_expert:
        chosen = None
        for record in records:
            for fid in sorted(record.ratings["e1"]):
                levels = model.factor_map[fid].scale.level_count
                if record.ratings["e1"][fid] <= levels - 2:
                    chosen = (record, fid)
                    break
            if chosen:
                break
        if chosen is None:
            raise ValueError("no rating cell leaves room for a planted disagreement")
        record, fid = chosen
        second = dict(record.ratings["e1"])
        second[fid] = second[fid] + 2
        position = next(i for i, r in enumerate(records) if r.id == record.id)
        records[position] = ProjectRecord(
            record.id,
            record.size,
            record.phase_efforts,
            {"e1": dict(record.ratings["e1"]), "e2": second},
            record.attributes,
        )
        defects["disagreement"] = record.id

    truth = GroundTruth(
        nominal_productivity=spec.nominal_productivity,
        overheads=overheads,
        driver_ids=tuple(sorted(f.id for f in model.factors)),
        decoy_names=decoy_names,
        defects=defects,
    )
    return records, truth


_DRIVER_PARAMS = (
    ("staff_skill_gap", "Key staff skill gaps", (0.20, 0.30, 0.45)),
    ("req_volatility", "Requirements volatility", (0.25, 0.35, 0.50)),
    ("platform_constraints", "Target platform constraints", (0.15, 0.30, 0.45)),
    ("customer_involvement_gap", "Customer involvement gaps", (0.20, 0.35, 0.50)),
    ("tooling_gap", "Development tooling gaps", (0.25, 0.30, 0.40)),
)


def default_true_model(driver_count: int = 5) -> CausalModel:
    """Canonical true model: direct-only drivers with extremes in [0.05, 0.5]."""
    if not (1 <= driver_count <= len(_DRIVER_PARAMS)):
        raise ValueError(f"driver count must be in [1, {len(_DRIVER_PARAMS)}]")
    factors = []
    direct = []
    for fid, name, (a, c, b) in _DRIVER_PARAMS[:driver_count]:
        anchors = tuple(
            f"{name}: level {level}" + (" (nominal)" if level == 0 else "")
            for level in range(4)
        )
        factors.append(CostFactor(fid, name, OrdinalScale(3, anchors)))
        direct.append(DirectInfluence(fid, TriangularParams(a, c, b)))
    return CausalModel(tuple(factors), tuple(direct))


def default_spec(
    seed: RandomSeed | int = 0,
    project_count: int = 16,
    driver_count: int = 5,
    decoy_attributes: int = 5,
    noise_level: float = 0.05,
    **overrides,
) -> SyntheticSpec:
    """The validation organization: 16 projects, 5 drivers, 5 decoys, 5% noise."""
    return SyntheticSpec(
        model=default_true_model(driver_count),
        nominal_productivity=0.5,
        project_count=project_count,
        seed=seed,
        noise_level=noise_level,
        decoy_attributes=decoy_attributes,
        **overrides,
    )
