"""Causal cost-overhead model: factors, influences, and overhead evaluation.

A model is a small weighted DAG.  Cost factors carry ordinal scales on which
past projects are rated (0 = nominal, i.e. the best possible situation for
cost; L = the worst).  Direct influences attach a triangular overhead
multiplier to a factor; interaction influences let a second (indirect) factor
scale the effect of a directly influencing one.  Indirection is one level
deep: an indirect factor may not itself be the direct target of another
interaction.

Everything in this module is an immutable value object and every operation is
a pure function, so instances can be shared freely across threads.
"""

from __future__ import annotations

import re
from collections.abc import Mapping
from dataclasses import dataclass

__all__ = [
    "OrdinalScale",
    "TriangularParams",
    "CostFactor",
    "DirectInfluence",
    "InteractionInfluence",
    "CausalModel",
    "ModelViolation",
    "validate_model",
    "validate_ratings",
    "interpolation_weight",
    "evaluate_overhead",
    "overhead_bounds",
]

# Factor ids end up in draw keys, CSV column names, and CLI arguments, so the
# grammar is restrictive: no ':' (interaction keys), no '=' or ',' (inline
# ratings), and no '_expert_' (project-table column parsing).
_FACTOR_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")


@dataclass(frozen=True)
class OrdinalScale:
    """Rating scale with levels 0..level_count and one anchor text per level."""

    level_count: int
    level_anchors: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "level_anchors", tuple(self.level_anchors))


@dataclass(frozen=True)
class TriangularParams:
    """Triangular (min, most likely, max) overhead fraction, e.g. 0.30 = +30%."""

    min: float
    likely: float
    max: float

    @property
    def mean(self) -> float:
        return (self.min + self.likely + self.max) / 3.0

    def is_valid(self) -> bool:
        return self.min >= -1.0 and self.min <= self.likely <= self.max


@dataclass(frozen=True)
class CostFactor:
    id: str
    name: str
    scale: OrdinalScale
    direction: str = "+"  # display metadata; stored ratings are reverse-coded
    description: str = ""


@dataclass(frozen=True)
class DirectInfluence:
    factor_id: str
    extreme_overhead: TriangularParams

    @property
    def key(self) -> str:
        return self.factor_id


@dataclass(frozen=True)
class InteractionInfluence:
    direct_factor_id: str
    indirect_factor_id: str
    sign: int
    extreme_overhead: TriangularParams

    @property
    def key(self) -> str:
        return f"{self.direct_factor_id}:{self.indirect_factor_id}"


@dataclass(frozen=True)
class CausalModel:
    factors: tuple[CostFactor, ...]
    direct: tuple[DirectInfluence, ...]
    interactions: tuple[InteractionInfluence, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "direct", tuple(self.direct))
        object.__setattr__(self, "interactions", tuple(self.interactions))

    @property
    def factor_map(self) -> dict[str, CostFactor]:
        return {f.id: f for f in self.factors}

    def factor_ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.factors)

    def rated_factor_ids(self) -> frozenset[str]:
        """Ids of every factor appearing in any influence (these need ratings)."""
        ids = {d.factor_id for d in self.direct}
        for ia in self.interactions:
            ids.add(ia.direct_factor_id)
            ids.add(ia.indirect_factor_id)
        return frozenset(ids)

    def canonical_influences(self) -> tuple[DirectInfluence | InteractionInfluence, ...]:
        """All influences in the canonical sampling order.

        Direct influences sorted by factor id, then interactions sorted by
        (direct id, indirect id).  Sampling assigns one random substream per
        position in this ordering, so the order is part of the determinism
        contract and must never change.
        """
        directs = sorted(self.direct, key=lambda d: d.factor_id)
        inters = sorted(
            self.interactions,
            key=lambda ia: (ia.direct_factor_id, ia.indirect_factor_id),
        )
        return tuple(directs) + tuple(inters)


@dataclass(frozen=True)
class ModelViolation:
    """One violated structural invariant, naming the offending element."""

    code: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.subject}: {self.message}"


def _check_triangular(params: TriangularParams, subject: str) -> list[ModelViolation]:
    out = []
    if not (params.min <= params.likely <= params.max):
        out.append(
            ModelViolation(
                "triangular_order",
                subject,
                f"requires min <= likely <= max, got "
                f"({params.min}, {params.likely}, {params.max})",
            )
        )
    if params.min < -1.0:
        out.append(
            ModelViolation(
                "triangular_floor",
                subject,
                f"min overhead {params.min} is below -1 (cost cannot go negative)",
            )
        )
    return out


def validate_model(model: CausalModel) -> list[ModelViolation]:
    """Check every structural invariant; an empty list means the model is valid.

    Violations are data, not exceptions: a malformed model can always be
    constructed and inspected, it just cannot be simulated.
    """
    violations: list[ModelViolation] = []
    seen: set[str] = set()
    for factor in model.factors:
        if not _FACTOR_ID_RE.match(factor.id) or "_expert_" in factor.id:
            violations.append(
                ModelViolation(
                    "bad_factor_id",
                    factor.id,
                    "factor ids must match [A-Za-z0-9][A-Za-z0-9_.-]* "
                    "and must not contain '_expert_'",
                )
            )
        if factor.id in seen:
            violations.append(
                ModelViolation("duplicate_factor_id", factor.id, "declared more than once")
            )
        seen.add(factor.id)
        if factor.direction not in ("+", "-"):
            violations.append(
                ModelViolation(
                    "bad_direction",
                    factor.id,
                    f"direction must be '+' or '-', got {factor.direction!r}",
                )
            )
        scale = factor.scale
        if scale.level_count < 1:
            violations.append(
                ModelViolation(
                    "bad_level_count",
                    factor.id,
                    f"scale needs at least one non-nominal level, got L={scale.level_count}",
                )
            )
        elif scale.level_anchors and len(scale.level_anchors) != scale.level_count + 1:
            violations.append(
                ModelViolation(
                    "anchor_count",
                    factor.id,
                    f"expected {scale.level_count + 1} level anchors, "
                    f"got {len(scale.level_anchors)}",
                )
            )

    declared = {f.id for f in model.factors}

    if not model.direct:
        violations.append(
            ModelViolation("no_direct_influence", "<model>", "at least one direct influence is required")
        )

    direct_ids: set[str] = set()
    for d in model.direct:
        if d.factor_id not in declared:
            violations.append(
                ModelViolation("unknown_factor", d.factor_id, "direct influence on an undeclared factor")
            )
        if d.factor_id in direct_ids:
            violations.append(
                ModelViolation("duplicate_direct", d.factor_id, "factor has more than one direct influence")
            )
        direct_ids.add(d.factor_id)
        violations.extend(_check_triangular(d.extreme_overhead, f"direct {d.factor_id}"))

    interaction_targets = {ia.direct_factor_id for ia in model.interactions}
    seen_pairs: set[tuple[str, str]] = set()
    for ia in model.interactions:
        subject = ia.key
        for fid in (ia.direct_factor_id, ia.indirect_factor_id):
            if fid not in declared:
                violations.append(
                    ModelViolation("unknown_factor", subject, f"references undeclared factor {fid!r}")
                )
        if ia.direct_factor_id == ia.indirect_factor_id:
            violations.append(
                ModelViolation("self_interaction", subject, "a factor cannot interact with itself")
            )
        if ia.direct_factor_id not in direct_ids:
            violations.append(
                ModelViolation(
                    "interaction_without_direct",
                    subject,
                    f"interaction target {ia.direct_factor_id!r} has no direct influence",
                )
            )
        if ia.indirect_factor_id in interaction_targets:
            violations.append(
                ModelViolation(
                    "chained_interaction",
                    subject,
                    f"indirect factor {ia.indirect_factor_id!r} is itself the target of an "
                    "interaction; indirection is limited to one level",
                )
            )
        if ia.sign not in (1, -1):
            violations.append(
                ModelViolation("bad_sign", subject, f"interaction sign must be +1 or -1, got {ia.sign!r}")
            )
        if (ia.direct_factor_id, ia.indirect_factor_id) in seen_pairs:
            violations.append(
                ModelViolation("duplicate_interaction", subject, "interaction pair declared more than once")
            )
        seen_pairs.add((ia.direct_factor_id, ia.indirect_factor_id))
        violations.extend(_check_triangular(ia.extreme_overhead, f"interaction {subject}"))

    return violations


def validate_ratings(model: CausalModel, ratings: Mapping[str, int]) -> list[str]:
    """Problems that would stop `evaluate_overhead` for this rating vector."""
    problems = []
    factors = model.factor_map
    for fid in sorted(model.rated_factor_ids()):
        if fid not in ratings:
            problems.append(f"missing rating for factor {fid!r}")
            continue
        level_count = factors[fid].scale.level_count
        r = ratings[fid]
        if not (0 <= r <= level_count):
            problems.append(f"rating {r} for factor {fid!r} outside [0, {level_count}]")
    return problems


def interpolation_weight(rating: int, scale: OrdinalScale) -> float:
    """Linear weight of a rating: 0 at the nominal level, 1 at the extreme."""
    if not (0 <= rating <= scale.level_count):
        raise ValueError(f"rating {rating} outside scale bounds [0, {scale.level_count}]")
    return rating / scale.level_count


def influence_coefficients(
    model: CausalModel, ratings: Mapping[str, int]
) -> list[tuple[str, TriangularParams, float]]:
    """(key, triangular params, weight coefficient) per influence, canonical order.

    The coefficient is the multiplier applied to a sampled overhead value:
    w(r_i) for a direct influence, sign * w(r_i) * w(r_j) for an interaction.
    """
    factors = model.factor_map

    def weight(fid: str) -> float:
        if fid not in ratings:
            raise ValueError(f"missing rating for factor {fid!r}")
        return interpolation_weight(ratings[fid], factors[fid].scale)

    out = []
    for inf in model.canonical_influences():
        if isinstance(inf, DirectInfluence):
            coeff = weight(inf.factor_id)
        else:
            coeff = inf.sign * weight(inf.direct_factor_id) * weight(inf.indirect_factor_id)
        out.append((inf.key, inf.extreme_overhead, coeff))
    return out


def evaluate_overhead(
    model: CausalModel,
    ratings: Mapping[str, int],
    draw: Mapping[str, float],
) -> float:
    """Cost-overhead fraction for one fully specified multiplier draw.

    CO = sum_i draw_i * w(r_i)  +  sum_ij sign_ij * draw_ij * w(r_i) * w(r_j)

    Deterministic and pure; an all-nominal rating vector yields exactly 0.
    Accumulation follows the canonical influence order so that results are
    bit-identical to the vectorized simulation path.
    """
    total = 0.0
    for key, _, coeff in influence_coefficients(model, ratings):
        if key not in draw:
            raise ValueError(f"draw is missing an entry for influence {key!r}")
        total += coeff * draw[key]
    return total


def overhead_bounds(model: CausalModel, ratings: Mapping[str, int]) -> tuple[float, float]:
    """Sign-aware [lowest, highest] overhead over all admissible draws."""
    lo = 0.0
    hi = 0.0
    for _, params, coeff in influence_coefficients(model, ratings):
        a = coeff * params.min
        b = coeff * params.max
        lo += min(a, b)
        hi += max(a, b)
    return lo, hi
