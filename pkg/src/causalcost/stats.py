"""Small-sample rank statistics with exact inference.

Datasets in this domain are tiny (tens of projects), so p-values come from
exhaustive enumeration wherever feasible and from seeded Monte Carlo
permutations otherwise; asymptotic approximations are never used.  Ties are
handled with midranks throughout.
"""

from __future__ import annotations

import itertools
import math
from typing import NamedTuple

import numpy as np

__all__ = [
    "midranks",
    "spearman_rho",
    "SpearmanTest",
    "spearman_test",
    "MannWhitneyTest",
    "mann_whitney_exact",
    "tukey_fences",
    "lower_median",
]

_TIE_EPS = 1e-12

# exhaustive Spearman enumeration is n! permutations; 8! = 40320 stays cheap
EXACT_PERMUTATION_LIMIT = 8
DEFAULT_MC_PERMUTATIONS = 10_000
_MAX_RANKSUM_ENUMERATION = 5_000_000


def midranks(values) -> np.ndarray:
    """Ranks 1..n with tied values sharing the average of their positions."""
    arr = np.asarray(values, dtype=float)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(len(arr), dtype=float)
    i = 0
    while i < len(arr):
        j = i
        while j + 1 < len(arr) and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(x, y) -> float | None:
    """Spearman rank correlation with midranks; None if either side is constant."""
    rx = midranks(x)
    ry = midranks(y)
    rxc = rx - rx.mean()
    ryc = ry - ry.mean()
    sx = float(np.dot(rxc, rxc))
    sy = float(np.dot(ryc, ryc))
    if sx == 0.0 or sy == 0.0:
        return None
    return float(np.dot(rxc, ryc) / math.sqrt(sx * sy))


class SpearmanTest(NamedTuple):
    rho: float | None
    p_value: float | None
    method: str  # "exact", "monte_carlo", or "undefined"


def spearman_test(
    x,
    y,
    rng: np.random.Generator | None = None,
    exact_limit: int = EXACT_PERMUTATION_LIMIT,
    permutations: int = DEFAULT_MC_PERMUTATIONS,
) -> SpearmanTest:
    """Two-sided permutation test of Spearman correlation.

    n <= exact_limit enumerates all n! pairings exactly; larger n uses
    `permutations` seeded Monte Carlo permutations (pass the rng that owns
    the substream) with add-one smoothing.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    rho = spearman_rho(x, y)
    if rho is None:
        return SpearmanTest(None, None, "undefined")
    n = len(x)
    rx = midranks(x)
    ry = midranks(y)
    rxc = rx - rx.mean()
    ryc = ry - ry.mean()
    denom = math.sqrt(float(np.dot(rxc, rxc)) * float(np.dot(ryc, ryc)))
    threshold = abs(rho) - _TIE_EPS
    if n <= exact_limit:
        perms = np.array(list(itertools.permutations(range(n))))
        rhos = (ryc[perms] @ rxc) / denom
        count = int(np.sum(np.abs(rhos) >= threshold))
        return SpearmanTest(rho, count / math.factorial(n), "exact")
    if rng is None:
        raise ValueError(f"n={n} needs Monte Carlo permutations: provide a seeded generator")
    index_matrix = np.tile(np.arange(n), (permutations, 1))
    index_matrix = rng.permuted(index_matrix, axis=1)
    rhos = (ryc[index_matrix] @ rxc) / denom
    count = int(np.sum(np.abs(rhos) >= threshold))
    return SpearmanTest(rho, (count + 1) / (permutations + 1), "monte_carlo")


class MannWhitneyTest(NamedTuple):
    u_statistic: float
    p_value: float
    enumerated: int


def mann_whitney_exact(group_a, group_b) -> MannWhitneyTest:
    """Exact two-sided rank-sum test by enumerating all C(n, n_a) assignments.

    The p-value is the fraction of rank assignments whose U statistic lies at
    least as far from its mean n_a*n_b/2 as the observed one.  Midranks make
    tied values exchangeable, so identical groups always give p = 1.
    """
    a = np.asarray(group_a, dtype=float)
    b = np.asarray(group_b, dtype=float)
    n_a, n_b = len(a), len(b)
    if n_a < 1 or n_b < 1:
        raise ValueError("both groups must be nonempty")
    total = math.comb(n_a + n_b, n_a)
    if total > _MAX_RANKSUM_ENUMERATION:
        raise ValueError(
            f"refusing to enumerate {total} rank assignments "
            f"(n_a={n_a}, n_b={n_b}); this test is exact-only"
        )
    ranks = midranks(np.concatenate([a, b]))
    offset = n_a * (n_a + 1) / 2.0
    center = n_a * n_b / 2.0
    u_obs = float(ranks[:n_a].sum() - offset)
    dev_obs = abs(u_obs - center) - _TIE_EPS
    count = 0
    for combo in itertools.combinations(range(n_a + n_b), n_a):
        u = ranks[list(combo)].sum() - offset
        if abs(u - center) >= dev_obs:
            count += 1
    return MannWhitneyTest(u_obs, count / total, total)


def tukey_fences(values, k: float = 1.5) -> tuple[float, float, float, float]:
    """(lower fence, upper fence, lower hinge, upper hinge) via Tukey hinges.

    Hinges are medians of the lower/upper halves; when n is odd both halves
    include the overall median.
    """
    arr = np.sort(np.asarray(values, dtype=float))
    n = len(arr)
    if n < 2:
        raise ValueError("fences need at least 2 values")
    half = (n + 1) // 2
    q1 = float(np.median(arr[:half]))
    q3 = float(np.median(arr[n - half :]))
    iqr = q3 - q1
    return q1 - k * iqr, q3 + k * iqr, q1, q3


def lower_median(values) -> float:
    """Median with the lower of the two middle elements when n is even."""
    arr = np.sort(np.asarray(values, dtype=float))
    if len(arr) == 0:
        raise ValueError("median of empty sequence")
    return float(arr[(len(arr) - 1) // 2])
