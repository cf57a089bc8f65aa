"""How often a random integer matrix has integer eigenvalues.

A matrix ``[[a, b], [c, d]]`` has integer eigenvalues iff its discriminant
``(a + d)^2 - 4(ad - bc) = (a - d)^2 + 4bc`` is a non-negative perfect square.
"""

from __future__ import annotations

import math
from collections import Counter
from fractions import Fraction

import numpy as np

EXACT_CAP = 10**8


def _is_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def integer_eigen_count(N: int) -> int:
    """Number of matrices with entries in [-N, N] whose eigenvalues are integers."""
    if N < 0:
        raise ValueError("N must be non-negative")
    r = range(-N, N + 1)
    diffs = Counter((a - d) ** 2 for a in r for d in r)
    prods = Counter(4 * b * c for b in r for c in r)
    return sum(nu * nv for u, nu in diffs.items() for v, nv in prods.items() if _is_square(u + v))


def exact_probability(N: int) -> Fraction:
    total = (2 * N + 1) ** 4
    if total > EXACT_CAP:
        raise ValueError(f"exact enumeration of {total} matrices exceeds the cap {EXACT_CAP}")
    return Fraction(integer_eigen_count(N), total)


def montecarlo_probability(N: int, samples: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    a, b, c, d = rng.integers(-N, N + 1, size=(4, samples), dtype=np.int64)
    disc = (a - d) ** 2 + 4 * b * c
    root = np.floor(np.sqrt(np.maximum(disc, 0))).astype(np.int64)
    # correct the float square root by one in either direction
    root = np.where((root + 1) ** 2 <= disc, root + 1, root)
    root = np.where(root**2 > disc, root - 1, root)
    hits = (disc >= 0) & (root * root == disc)
    return float(hits.mean())


def hetzel_statistic(N_max: int, mode: str = "exact", samples: int = 100_000, seed: int = 0):
    """Rows ``(N, probability)`` for ``N = 0..N_max``."""
    if N_max < 0:
        raise ValueError("N_max must be non-negative")
    if mode == "exact":
        if (2 * N_max + 1) ** 4 > EXACT_CAP:
            raise ValueError(f"exact mode limited to (2N+1)^4 <= {EXACT_CAP}")
        return [(N, exact_probability(N)) for N in range(N_max + 1)]
    if mode == "montecarlo":
        seeds = np.random.SeedSequence(seed).spawn(N_max + 1)
        return [
            (N, montecarlo_probability(N, samples, int(s.generate_state(1)[0])))
            for N, s in enumerate(seeds)
        ]
    raise ValueError(f"unknown mode {mode!r}")
