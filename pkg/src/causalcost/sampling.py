"""Deterministic, seeded sampling of triangular overhead multipliers.

Monte Carlo and Latin Hypercube both go through the triangular inverse CDF,
so LHS strata map directly onto the quantile function.  Every sampled
variable (one per influence, in the model's canonical influence order) owns
an independent substream derived purely from (master seed, stream label);
parallel or re-ordered execution therefore cannot change any result.
"""

from __future__ import annotations

import hashlib
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from .model import CausalModel, TriangularParams, influence_coefficients, validate_model

__all__ = [
    "SamplePlan",
    "RandomSeed",
    "OverheadDistribution",
    "triangular_inverse_cdf",
    "draw_uniforms",
    "simulate_overhead",
]

MONTE_CARLO = "monte_carlo"
LATIN_HYPERCUBE = "latin_hypercube"
_METHODS = (MONTE_CARLO, LATIN_HYPERCUBE)

_MAX_SEED = 2**64


@dataclass(frozen=True)
class SamplePlan:
    """How to sample: `monte_carlo` or `latin_hypercube`, and how many draws."""

    method: str = LATIN_HYPERCUBE
    count: int = 10_000

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"unknown sampling method {self.method!r}; expected one of {_METHODS}")
        if self.count < 1:
            raise ValueError(f"sample count must be >= 1, got {self.count}")


@dataclass(frozen=True)
class RandomSeed:
    """Master seed plus a derivation namespace.

    `generator(label)` returns a fresh numpy Generator that is a pure function
    of (master_seed, namespace, label): identical inputs always reproduce the
    identical stream.  `derive(label)` extends the namespace, which is how
    per-project and per-fold substreams stay independent of each other.
    """

    master_seed: int = 0
    namespace: str = ""

    def __post_init__(self):
        if not (0 <= self.master_seed < _MAX_SEED):
            raise ValueError(f"master seed must be an unsigned 64-bit integer, got {self.master_seed}")

    def derive(self, label: str) -> "RandomSeed":
        joined = f"{self.namespace}/{label}" if self.namespace else label
        return RandomSeed(self.master_seed, joined)

    def generator(self, label: str) -> np.random.Generator:
        full = f"{self.namespace}/{label}" if self.namespace else label
        digest = hashlib.sha256(full.encode("utf-8")).digest()
        words = tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=words)
        return np.random.Generator(np.random.PCG64(seq))


def as_seed(seed: "RandomSeed | int") -> RandomSeed:
    return seed if isinstance(seed, RandomSeed) else RandomSeed(seed)


@dataclass(frozen=True)
class OverheadDistribution:
    """Sorted cost-overhead samples from one simulation run."""

    samples: np.ndarray
    plan: SamplePlan
    seed: RandomSeed

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return len(self.samples)


def triangular_inverse_cdf(params: TriangularParams, u):
    """Closed-form triangular quantile function; accepts scalars or arrays.

    For u <= (c-a)/(b-a):  x = a + sqrt(u (b-a) (c-a))
    otherwise:             x = b - sqrt((1-u) (b-a) (b-c))

    Degenerate distributions collapse to the point / segment value.
    """
    if not params.is_valid():
        raise ValueError(f"invalid triangular parameters {params}")
    scalar = np.isscalar(u) or np.ndim(u) == 0
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0.0) or np.any(u_arr > 1.0):
        raise ValueError("u must lie in [0, 1]")
    a, c, b = params.min, params.likely, params.max
    if b == a:
        x = np.full_like(u_arr, a)
        return float(a) if scalar else x
    threshold = (c - a) / (b - a)
    left = a + np.sqrt(u_arr * (b - a) * (c - a))
    right = b - np.sqrt((1.0 - u_arr) * (b - a) * (b - c))
    x = np.where(u_arr <= threshold, left, right)
    return float(x) if scalar else x


def draw_uniforms(plan: SamplePlan, variable_index: int, seed: RandomSeed | int) -> np.ndarray:
    """N uniforms for one sampled variable, from its own substream.

    Monte Carlo draws independently; Latin Hypercube places exactly one draw
    per stratum [(k-1)/N, k/N) via a seeded permutation plus in-stratum
    jitter.  Permutations are independent across variables because every
    variable index maps to its own substream.
    """
    seed = as_seed(seed)
    rng = seed.generator(f"var:{variable_index}")
    n = plan.count
    if plan.method == MONTE_CARLO:
        return rng.random(n)
    strata = rng.permutation(n)
    jitter = rng.random(n)
    return (strata + jitter) / n


def simulate_overhead(
    model: CausalModel,
    ratings: Mapping[str, int],
    plan: SamplePlan,
    seed: RandomSeed | int,
) -> OverheadDistribution:
    """Simulate the cost-overhead distribution for one rated project.

    Each influence is an independent sampled variable; per iteration the
    sampled multipliers form one draw evaluated through the causal model.
    The accumulation order matches `evaluate_overhead`, so a single sample
    here is bit-identical to evaluating that draw directly.
    """
    seed = as_seed(seed)
    violations = validate_model(model)
    if violations:
        joined = "; ".join(str(v) for v in violations)
        raise ValueError(f"model is structurally invalid: {joined}")
    overhead = np.zeros(plan.count)
    for index, (_, params, coeff) in enumerate(influence_coefficients(model, ratings)):
        uniforms = draw_uniforms(plan, index, seed)
        overhead += coeff * triangular_inverse_cdf(params, uniforms)
    return OverheadDistribution(np.sort(overhead), plan, seed)
