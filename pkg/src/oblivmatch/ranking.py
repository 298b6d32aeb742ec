"""Weighted Ranking for oblivious matching, the greedy baseline, and gain sharing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import _kernel
from .graph import BipartiteInstance, GainShares, Matching
from .probe import Outcome, ProbeEnv
from .seeding import trial_rng

ONE_MINUS = np.nextafter(1.0, 0.0)
INV_E = np.exp(-1.0)


def g(y):
    """The default rank function e^(y-1): non-decreasing, [0,1] -> [1/e, 1]."""
    y = np.asarray(y, dtype=float)
    if np.any((y < 0) | (y > 1)) or np.any(np.isnan(y)):
        raise ValueError(f"rank outside [0, 1]: {y}")
    out = np.exp(y - 1.0)
    return float(out) if out.ndim == 0 else out


RankFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class RankVector:
    ranks: np.ndarray

    def __post_init__(self):
        r = np.array(self.ranks, dtype=float, ndmin=1)
        if r.ndim != 1 or np.any((r < 0) | (r >= 1)) or np.any(np.isnan(r)):
            raise ValueError("ranks must be a 1-d array with entries in [0, 1)")
        r.setflags(write=False)
        object.__setattr__(self, "ranks", r)

    def __len__(self):
        return len(self.ranks)

    def with_rank(self, u: int, y: float) -> "RankVector":
        r = self.ranks.copy()
        r[u] = min(float(y), ONE_MINUS)
        return RankVector(r)


def _ranks(ranks) -> np.ndarray:
    return ranks.ranks if isinstance(ranks, RankVector) else RankVector(ranks).ranks


def draw_ranks(n_left: int, seed) -> RankVector:
    return RankVector(trial_rng(seed, "ranks").random(n_left))


class ScheduleEntry(NamedTuple):
    u: int
    v: int
    perturbed: float


def _schedule_from_gy(weights: np.ndarray, gy: np.ndarray) -> list[ScheduleEntry]:
    pw = (1.0 - gy)[:, None] * weights
    us, vs = np.nonzero(weights > 0)
    keys = pw[us, vs]
    order = np.lexsort((vs, us, -keys))
    return [ScheduleEntry(int(us[k]), int(vs[k]), float(keys[k])) for k in order]


def build_schedule(instance: BipartiteInstance, ranks, g: RankFunction = g) -> list[ScheduleEntry]:
    """Positive-weight pairs by perturbed weight (1-g(y_u))*w_uv, descending;
    ties go to the smaller u, then the smaller v."""
    y = _ranks(ranks)
    if len(y) != instance.n_left:
        raise ValueError(f"need {instance.n_left} ranks, got {len(y)}")
    return _schedule_from_gy(instance.weights, np.asarray(g(y), dtype=float))


class RankingResult(NamedTuple):
    matching: Matching
    gains: GainShares
    schedule: list[ScheduleEntry]


def _walk(env: ProbeEnv, schedule, on_commit=None):
    for u, v, _ in schedule:
        if not env.is_free(u, v):
            continue
        if env.probe(u, v) is Outcome.MATCHED and on_commit is not None:
            on_commit(u, v)


def run_ranking(instance: BipartiteInstance, env: ProbeEnv, ranks, g: RankFunction = g) -> RankingResult:
    y = _ranks(ranks)
    gy = np.asarray(g(y), dtype=float)
    schedule = _schedule_from_gy(instance.weights, gy)
    alpha_left = np.zeros(instance.n_left)
    alpha_right = np.zeros(instance.n_right)

    def share(u, v):
        w = instance.weights[u, v]
        alpha_left[u] = gy[u] * w
        alpha_right[v] = (1.0 - gy[u]) * w

    _walk(env, schedule, share)
    return RankingResult(env.final_matching(), GainShares(alpha_left, alpha_right), schedule)


def run_greedy(instance: BipartiteInstance, env: ProbeEnv) -> Matching:
    """Deterministic baseline: probe by raw weight, descending, ties by index."""
    _walk(env, _schedule_from_gy(instance.weights, np.zeros(instance.n_left)))
    return env.final_matching()


# -- fast path used by the estimators ----------------------------------------

def mates_batch(weights: np.ndarray, bits: np.ndarray, gy: np.ndarray):
    """Left mates (T, n_left) and probe counts for T trials.

    ``bits`` is one (n_left, n_right) matrix shared by every trial or a
    (T, n_left, n_right) stack. ``gy`` holds g(y) per trial and left vertex;
    an all-zero row gives the greedy order.
    """
    bits = np.asarray(bits, dtype=np.bool_)
    if bits.ndim == 2:
        bits = bits[None]
    gy = np.ascontiguousarray(np.atleast_2d(gy), dtype=float)
    return _kernel.walk_batch(np.ascontiguousarray(weights, dtype=float), np.ascontiguousarray(bits), gy)


def gains_from_mates(weights: np.ndarray, gy: np.ndarray, left_mate: np.ndarray):
    """Gain shares for a batch: returns alpha_left (T, nl) and alpha_right (T, nr)."""
    left_mate = np.atleast_2d(left_mate)
    gy = np.atleast_2d(gy)
    trials, nl = left_mate.shape
    nr = weights.shape[1]
    alpha_left = np.zeros((trials, nl))
    alpha_right = np.zeros((trials, nr))
    t, u = np.nonzero(left_mate >= 0)
    v = left_mate[t, u]
    w = weights[u, v]
    alpha_left[t, u] = gy[t, u] * w
    alpha_right[t, v] = (1.0 - gy[t, u]) * w
    return alpha_left, alpha_right


def matched_weight_of(weights: np.ndarray, bits: np.ndarray, ranks: np.ndarray, u: int,
                      ys: np.ndarray, g: RankFunction = g) -> np.ndarray:
    """Weight of the edge left vertex u ends up with, for each value in ``ys``
    substituted for y_u (0 where u stays unmatched)."""
    y = np.tile(np.asarray(ranks, dtype=float), (len(ys), 1))
    y[:, u] = np.minimum(ys, ONE_MINUS)
    gy = np.asarray(g(y), dtype=float)
    mates, _ = mates_batch(weights, bits, gy)
    mu = mates[:, u]
    return np.where(mu >= 0, weights[u, np.maximum(mu, 0)], 0.0)
