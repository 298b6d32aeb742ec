"""Compiled probe walk used by the Monte Carlo estimators.

Same ordering and commit rule as ``ranking.run_ranking`` but without the
ProbeEnv bookkeeping; ``tests/test_ranking.py`` checks the two agree.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def probe_order(weights, gy):
    """Flat indices u*n_right+v of positive-weight pairs, by (1-gy[u])*w desc,
    ties by flat index."""
    nl, nr = weights.shape
    count = 0
    for u in range(nl):
        for v in range(nr):
            if weights[u, v] > 0:
                count += 1
    keys = np.empty(count)
    flat = np.empty(count, dtype=np.int64)
    k = 0
    for u in range(nl):
        for v in range(nr):
            if weights[u, v] > 0:
                keys[k] = -((1.0 - gy[u]) * weights[u, v])
                flat[k] = u * nr + v
                k += 1
    order = np.argsort(keys, kind="mergesort")
    return flat[order]


@njit(cache=True, nogil=True)
def walk(weights, bits, gy, left_mate, right_mate):
    """Run one trial, filling the mate arrays in place; returns the probe count."""
    nl, nr = weights.shape
    left_mate[:] = -1
    right_mate[:] = -1
    order = probe_order(weights, gy)
    target = min(nl, nr)
    matched = 0
    probes = 0
    for k in range(order.shape[0]):
        if matched == target:
            break
        f = order[k]
        u = f // nr
        v = f % nr
        if left_mate[u] >= 0 or right_mate[v] >= 0:
            continue
        probes += 1
        if bits[u, v]:
            left_mate[u] = v
            right_mate[v] = u
            matched += 1
    return probes


@njit(cache=True, nogil=True)
def walk_batch(weights, bits, gy):
    """bits: (T or 1, nl, nr); gy: (T, nl). Returns left mates (T, nl) and probe counts."""
    trials, nl = gy.shape
    nr = weights.shape[1]
    left = np.empty((trials, nl), dtype=np.int64)
    right = np.empty(nr, dtype=np.int64)
    probes = np.empty(trials, dtype=np.int64)
    shared = bits.shape[0] == 1
    for t in range(trials):
        b = bits[0] if shared else bits[t]
        probes[t] = walk(weights, b, gy[t], left[t], right)
    return left, probes
