"""Campaign comparison statistics.

The comparison test is the two-sided Mann-Whitney U. Ranks are assigned
over the pooled samples with ties receiving average ranks, and U for
sample a is R1 - n1(n1+1)/2. For small tie-free samples the p-value
comes from the exact null distribution of U (a count recurrence over
rank arrangements); everything else uses the normal approximation with
tie-corrected variance and a 0.5 continuity correction. The exact path
matters: at tiny sample sizes the normal approximation can be off by
more than a tenth, which is too coarse for pass/fail gating.

Also here: the small aggregation helpers used when summarizing repeated
runs (middle-third trimming and normalization to a reference median).
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

ALPHA = 0.05

# largest per-sample size for the exact p-value path
EXACT_MAX_N = 8


@dataclass(frozen=True)
class UTestResult:
    u_statistic: float
    p_value: float
    significant: bool


def _ranks_and_ties(values: Sequence[float]) -> tuple[list[float], list[int]]:
    """Average ranks (1-based) plus the tie group sizes."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    tie_sizes: list[int] = []
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j + 2) / 2
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        tie_sizes.append(j - i + 1)
        i = j + 1
    return ranks, tie_sizes


@lru_cache(maxsize=None)
def _u_count(n1: int, n2: int, u: int) -> int:
    """Number of rank arrangements of (n1, n2) tie-free samples with U == u."""
    if u < 0 or u > n1 * n2:
        return 0
    if n1 == 0 or n2 == 0:
        return 1 if u == 0 else 0
    return _u_count(n1 - 1, n2, u - n2) + _u_count(n1, n2 - 1, u)


def _exact_two_sided_p(u1: float, n1: int, n2: int) -> float:
    u_small = min(u1, n1 * n2 - u1)
    total = math.comb(n1 + n2, n1)
    tail = sum(_u_count(n1, n2, k) for k in range(int(u_small) + 1))
    return min(1.0, 2.0 * tail / total)


def mann_whitney_u(sample_a: Sequence[float], sample_b: Sequence[float]) -> UTestResult:
    """Two-sided Mann-Whitney U test; U is reported for sample_a."""
    n1 = len(sample_a)
    n2 = len(sample_b)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")

    ranks, tie_sizes = _ranks_and_ties(list(sample_a) + list(sample_b))
    r1 = sum(ranks[:n1])
    u1 = r1 - n1 * (n1 + 1) / 2

    tie_free = all(size == 1 for size in tie_sizes)
    if tie_free and n1 <= EXACT_MAX_N and n2 <= EXACT_MAX_N:
        p = _exact_two_sided_p(u1, n1, n2)
        return UTestResult(u1, p, p < ALPHA)

    n = n1 + n2
    mu = n1 * n2 / 2
    tie_term = sum(size**3 - size for size in tie_sizes)
    sigma_sq = n1 * n2 / 12 * ((n + 1) - tie_term / (n * (n - 1)))
    if sigma_sq <= 0:
        # every pooled value identical; no evidence either way
        return UTestResult(u1, 1.0, False)
    z = max(0.0, abs(u1 - mu) - 0.5) / math.sqrt(sigma_sq)
    p = min(1.0, math.erfc(z / math.sqrt(2)))
    return UTestResult(u1, p, p < ALPHA)


def trim_middle_third(runs: Sequence[float]) -> list[float]:
    """Sorted middle third, indices [n//3, 2n//3); needs at least 3 runs."""
    n = len(runs)
    if n < 3:
        raise ValueError("need at least 3 runs to trim to the middle third")
    ordered = sorted(runs)
    return ordered[n // 3 : (2 * n) // 3]


def normalize_to_median(runs: Sequence[float], reference: Sequence[float]) -> list[float]:
    """Divide each run by the median of the reference sample."""
    if not reference:
        raise ValueError("reference sample is empty")
    med = statistics.median(reference)
    if med == 0:
        raise ValueError("reference median is zero; cannot normalize")
    return [value / med for value in runs]
