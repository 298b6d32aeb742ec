"""Offline maximum-weight matching on a realized edge set (the benchmark W*)."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment

from .graph import BipartiteInstance, InstanceError, Matching

BRUTE_FORCE_MAX_SIDE = 10


@dataclass(frozen=True)
class OptimalResult:
    matching: Matching
    value: float


def _check_bits(instance: BipartiteInstance, bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=bool)
    if bits.shape != instance.shape:
        raise InstanceError(f"dimension mismatch: edge bits {bits.shape} vs instance {instance.shape}")
    return bits


def max_weight_matching(instance: BipartiteInstance, bits) -> OptimalResult:
    """Exact optimum via the assignment method.

    Absent edges get weight 0, which is harmless because every weight is
    nonnegative; zero-weight and absent pairs are dropped from the witness.
    """
    bits = _check_bits(instance, bits)
    w = np.where(bits, instance.weights, 0.0)
    rows, cols = linear_sum_assignment(w, maximize=True)
    keep = (w[rows, cols] > 0) & bits[rows, cols]
    m = Matching.from_pairs(instance, zip(rows[keep], cols[keep]))
    return OptimalResult(m, m.total_weight)


def optimum_value(weights: np.ndarray, bits: np.ndarray) -> float:
    """W* only, without building a Matching; used in tight Monte Carlo loops."""
    w = np.where(bits, weights, 0.0)
    rows, cols = linear_sum_assignment(w, maximize=True)
    return float(w[rows, cols].sum())


def brute_force_mwm(instance: BipartiteInstance, bits) -> OptimalResult:
    """Exhaustive search over all matchings, memoized on the set of used
    vertices of the smaller side. Exact; exponential in the smaller side."""
    bits = _check_bits(instance, bits)
    w = np.where(bits, instance.weights, 0.0)
    transposed = w.shape[0] < w.shape[1]
    if transposed:
        w, bits = w.T, bits.T
    n_big, n_small = w.shape
    if n_small > BRUTE_FORCE_MAX_SIDE:
        raise InstanceError(f"instance too large for brute force: min side {n_small} > {BRUTE_FORCE_MAX_SIDE}")
    wl = w.tolist()
    nbrs = [[j for j in range(n_small) if bits[i, j] and wl[i][j] > 0] for i in range(n_big)]

    @lru_cache(maxsize=None)
    def best(i: int, used: int) -> tuple[float, tuple]:
        # best over matchings of big-side vertices i.. avoiding small-side set `used`
        if i == n_big:
            return 0.0, ()
        top, top_pairs = best(i + 1, used)
        for j in nbrs[i]:
            if used >> j & 1:
                continue
            val, pairs = best(i + 1, used | 1 << j)
            val += wl[i][j]
            if val > top:
                top, top_pairs = val, ((i, j),) + pairs
        return top, top_pairs

    _, pairs = best(0, 0)
    if transposed:
        pairs = tuple((j, i) for i, j in pairs)
    m = Matching.from_pairs(instance, pairs)
    return OptimalResult(m, m.total_weight)
