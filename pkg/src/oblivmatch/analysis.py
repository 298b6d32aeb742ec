"""Empirical checks of the primal-dual argument and Monte Carlo ratio estimates.

Every expectation over ranks is a seeded Monte Carlo average; trial t of a run
with master seed s always uses ``trial_seed(s, t)``, whatever the thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from .graph import Adversarial, BipartiteInstance, GainShares, Matching, Realization
from .optimal import max_weight_matching, optimum_value
from .ranking import ONE_MINUS, RankFunction, g, gains_from_mates, matched_weight_of, mates_batch
from .seeding import thread_count, trial_rng, trial_seed

RATIO_TARGET = 1.0 - math.exp(-1.0)
CONFIDENCE = 0.99
Z = float(stats.norm.ppf(0.5 + CONFIDENCE / 2))
BLOCK = 512
WEIGHT_TOL = 1e-12


class MonotonicityViolated(AssertionError):
    pass


def _tol(weight: float) -> float:
    return 1e-9 * (1.0 + abs(weight))


# -- per-trial checks --------------------------------------------------------

@dataclass(frozen=True)
class ConservationResult:
    passed: bool
    residual: float


def gain_conservation_check(matching: Matching, gains: GainShares) -> ConservationResult:
    residual = abs(gains.total() - matching.total_weight)
    return ConservationResult(residual <= _tol(matching.total_weight), residual)


@dataclass(frozen=True)
class MonotonicityResult:
    passed: bool
    grid: np.ndarray
    weights: np.ndarray
    first_violation: tuple | None = None  # (index, y_before, y_after, w_before, w_after)


def monotonicity_check(instance: BipartiteInstance, bits, ranks, u: int, grid_size: int = 200,
                       g: RankFunction = g) -> MonotonicityResult:
    """Sweep y_u over an even grid on [0, 1] with the other ranks fixed; the weight
    u ends up matched with must never go up."""
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    ys = np.linspace(0.0, 1.0, grid_size)
    ws = matched_weight_of(instance.weights, bits, ranks, u, ys, g)
    up = np.nonzero(ws[1:] > ws[:-1] + WEIGHT_TOL)[0]
    if len(up):
        k = int(up[0])
        return MonotonicityResult(False, ys, ws, (k + 1, ys[k], ys[k + 1], ws[k], ws[k + 1]))
    return MonotonicityResult(True, ys, ws)


@dataclass(frozen=True)
class MarginalRank:
    """u gets an edge of weight >= w_uv iff y_u < theta (within ``tol``).

    ``theta`` is the right end of the final bracket, so every y >= theta is
    known to lie on the low side and every y < theta - tol on the high side.
    """

    theta: float
    u: int
    v: int
    ranks: np.ndarray
    tol: float


def find_marginal_rank(instance: BipartiteInstance, bits, ranks, u: int, v: int, tol: float = 1e-6,
                       g: RankFunction = g, precheck_grid: int = 101) -> MarginalRank:
    if tol <= 0:
        raise ValueError("tol must be positive")
    ranks = np.asarray(getattr(ranks, "ranks", ranks), dtype=float)
    mono = monotonicity_check(instance, bits, ranks, u, precheck_grid, g)
    if not mono.passed:
        raise MonotonicityViolated(f"matched weight of {u} increases at {mono.first_violation}")
    w_uv = instance.weights[u, v]

    def high(y):
        return matched_weight_of(instance.weights, bits, ranks, u, np.array([y]), g)[0] >= w_uv - WEIGHT_TOL

    if not high(0.0):
        return MarginalRank(0.0, u, v, ranks, tol)
    if high(ONE_MINUS):
        return MarginalRank(1.0, u, v, ranks, tol)
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if high(mid):
            lo = mid
        else:
            hi = mid
    return MarginalRank(hi, u, v, ranks, tol)


def marginal_rank_sweep(instance: BipartiteInstance, bits, ranks, u: int, v: int,
                        points: int = 10_000, g: RankFunction = g) -> float:
    """First grid point where u's matched weight falls below w_uv (1.0 if none)."""
    ys = np.linspace(0.0, 1.0, points)
    ws = matched_weight_of(instance.weights, bits, np.asarray(getattr(ranks, "ranks", ranks)), u, ys, g)
    low = np.nonzero(ws < instance.weights[u, v] - WEIGHT_TOL)[0]
    return float(ys[low[0]]) if len(low) else 1.0


@dataclass
class GainCheckResult:
    passed: bool
    below_theta: int
    above_theta: int
    skipped: int
    violations: list = field(default_factory=list)  # (y_u, which, value, bound)


def marginal_rank_gain_check(instance: BipartiteInstance, bits, ranks, u: int, v: int, theta,
                             samples: int = 100, seed: int = 0, g: RankFunction = g) -> GainCheckResult:
    """Sample y_u and check, per trial: below theta u keeps at least g(y_u)*w_uv
    and v at least (1-g(theta))*w_uv; at or above theta v still keeps
    (1-g(theta))*w_uv. Samples inside the bracket of ``theta`` are skipped."""
    bits = np.asarray(bits, dtype=bool)
    if not bits[u, v] or instance.weights[u, v] <= 0:
        raise ValueError(f"({u},{v}) must be a present pair of positive weight")
    tol = 0.0
    if isinstance(theta, MarginalRank):
        tol = theta.tol
        theta = theta.theta
    ranks = np.asarray(getattr(ranks, "ranks", ranks), dtype=float)
    w = instance.weights
    w_uv = w[u, v]
    eps = _tol(w_uv)
    v_bound = (1.0 - float(g(np.array(theta)))) * w_uv

    ys = np.random.default_rng(seed).random(samples)
    skip = (ys >= theta - tol) & (ys < theta)
    ys = ys[~skip]
    y = np.tile(ranks, (len(ys), 1))
    y[:, u] = ys
    gy = np.asarray(g(y), dtype=float)
    mates, _ = mates_batch(w, bits, gy)
    a_left, a_right = gains_from_mates(w, gy, mates)

    out = GainCheckResult(True, int(np.sum(ys < theta)), int(np.sum(ys >= theta)), int(skip.sum()))
    for k, yu in enumerate(ys):
        if yu < theta and a_left[k, u] < gy[k, u] * w_uv - eps:
            out.violations.append((float(yu), "alpha_u", float(a_left[k, u]), float(gy[k, u] * w_uv)))
        if a_right[k, v] < v_bound - eps:
            out.violations.append((float(yu), "alpha_v", float(a_right[k, v]), float(v_bound)))
    out.passed = not out.violations
    return out


def analytic_bound(theta: float) -> float:
    """Integral of g over [0, theta] plus (1 - g(theta)) for g(y) = e^(y-1).

    Evaluated in closed form and cross-checked against adaptive quadrature;
    any disagreement beyond 1e-10 raises.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta outside [0, 1]: {theta}")
    closed = (math.exp(theta - 1.0) - math.exp(-1.0)) + (1.0 - math.exp(theta - 1.0))
    area, _ = integrate.quad(lambda y: math.exp(y - 1.0), 0.0, theta, epsabs=1e-13, epsrel=1e-13)
    quadrature = area + (1.0 - math.exp(theta - 1.0))
    if abs(closed - quadrature) > 1e-10:
        raise AssertionError(f"closed form {closed!r} and quadrature {quadrature!r} disagree at theta={theta}")
    return closed


# -- Monte Carlo -------------------------------------------------------------

@dataclass
class TrialBatch:
    seeds: np.ndarray
    alg: np.ndarray
    opt: np.ndarray
    probes: np.ndarray
    left_mates: np.ndarray
    gy: np.ndarray

    def __len__(self):
        return len(self.seeds)


def _run_block(instance, realization, master, start, stop, algorithm, opt_fixed, g):
    nl = instance.n_left
    w = instance.weights
    seeds = np.array([trial_seed(master, t) for t in range(start, stop)], dtype=np.uint64)
    if algorithm == "ranking":
        ranks = np.stack([trial_rng(s, "ranks").random(nl) for s in seeds]) if len(seeds) else np.empty((0, nl))
        gy = np.asarray(g(ranks), dtype=float).reshape(len(seeds), nl)
    elif algorithm == "greedy":
        gy = np.zeros((len(seeds), nl))
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if opt_fixed is not None:
        bits = realization.sample(None)
        opt = np.full(len(seeds), opt_fixed)
    else:
        bits = np.stack([realization.sample(trial_rng(s, "bits")) for s in seeds])
        opt = np.array([optimum_value(w, b) for b in bits])
    mates, probes = mates_batch(w, bits, gy)
    rows, cols = np.nonzero(mates >= 0)
    alg = np.zeros(len(seeds))
    np.add.at(alg, rows, w[cols, mates[rows, cols]])
    return TrialBatch(seeds, alg, opt, probes, mates, gy)


def simulate_trials(instance: BipartiteInstance, realization: Realization, n_trials: int, seed: int,
                    algorithm: str = "ranking", threads: int | None = None, g: RankFunction = g) -> TrialBatch:
    """Run trials 0..n_trials-1. Trial t draws its ranks and (for stochastic
    laws) its edge bits from ``trial_seed(seed, t)``, exactly as a ProbeEnv
    built with that seed would."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    opt_fixed = None if realization.is_stochastic else optimum_value(instance.weights, realization.sample(None))
    blocks = [(a, min(a + BLOCK, n_trials)) for a in range(0, n_trials, BLOCK)]

    def job(ab):
        return _run_block(instance, realization, seed, ab[0], ab[1], algorithm, opt_fixed, g)

    workers = thread_count(threads)
    if workers == 1 or len(blocks) == 1:
        parts = [job(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, blocks))
    return TrialBatch(*(np.concatenate([getattr(p, f) for p in parts]) for f in
                        ("seeds", "alg", "opt", "probes", "left_mates", "gy")))


@dataclass(frozen=True)
class RatioEstimate:
    alg_mean: float
    opt_mean: float
    ratio: float
    ci_half_width: float
    n_trials: int

    @property
    def lower(self) -> float:
        return self.ratio - self.ci_half_width

    @property
    def upper(self) -> float:
        return self.ratio + self.ci_half_width

    def passes(self, target: float = RATIO_TARGET, slack: float = 0.0) -> bool:
        return self.lower >= target - slack

    def as_dict(self) -> dict:
        return {"alg_mean": self.alg_mean, "opt_mean": self.opt_mean, "ratio": self.ratio,
                "ci_half_width": self.ci_half_width, "lower": self.lower, "n_trials": self.n_trials}


def ratio_of_means(alg: np.ndarray, opt: np.ndarray) -> RatioEstimate:
    """mean(alg)/mean(opt) with a delta-method CI at the module confidence level.

    When every trial has W* = 0 the ratio is taken as 1 (nothing to match).
    """
    n = len(alg)
    a_bar, o_bar = float(np.mean(alg)), float(np.mean(opt))
    if o_bar <= 0:
        return RatioEstimate(a_bar, o_bar, 1.0, 0.0, n)
    r = a_bar / o_bar
    if n < 2:
        return RatioEstimate(a_bar, o_bar, r, math.inf, n)
    resid = alg - r * opt
    se = math.sqrt(float(np.var(resid, ddof=1)) / n) / o_bar
    return RatioEstimate(a_bar, o_bar, r, Z * se, n)


def estimate_ratio(instance: BipartiteInstance, realization: Realization, n_trials: int, seed: int,
                   algorithm: str = "ranking", threads: int | None = None, g: RankFunction = g) -> RatioEstimate:
    batch = simulate_trials(instance, realization, n_trials, seed, algorithm, threads, g)
    return ratio_of_means(batch.alg, batch.opt)


def batch_conservation(instance: BipartiteInstance, batch: TrialBatch) -> np.ndarray:
    """Per-trial |sum of gains - matching weight|, normalised by 1e-9*(1+weight);
    values <= 1 pass."""
    a_left, a_right = gains_from_mates(instance.weights, batch.gy, batch.left_mates)
    total = a_left.sum(axis=1) + a_right.sum(axis=1)
    return np.abs(total - batch.alg) / (1e-9 * (1.0 + batch.alg))


@dataclass(frozen=True)
class DualRow:
    u: int
    v: int
    weight: float
    estimate: float
    ci_half_width: float
    target: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.estimate - self.target


@dataclass(frozen=True)
class DualFeasibilityReport:
    rows: list
    n_samples: int
    optimum: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def min_margin(self) -> float:
        return min((r.margin / r.weight for r in self.rows), default=math.inf)


def estimate_dual_feasibility(instance: BipartiteInstance, bits, n_rank_samples: int, seed: int,
                              threads: int | None = None, g: RankFunction = g) -> DualFeasibilityReport:
    """Estimate E[alpha_u + alpha_v] over fresh rank vectors for each edge of the
    oracle's maximum-weight matching and compare with (1-1/e)*w_uv."""
    if n_rank_samples < 100:
        raise ValueError("n_rank_samples must be >= 100")
    bits = np.asarray(bits, dtype=bool)
    opt = max_weight_matching(instance, bits)
    batch = simulate_trials(instance, Adversarial(bits), n_rank_samples, seed, "ranking", threads, g)
    a_left, a_right = gains_from_mates(instance.weights, batch.gy, batch.left_mates)
    rows = []
    for u, v in opt.matching.sorted_pairs():
        x = a_left[:, u] + a_right[:, v]
        w = float(instance.weights[u, v])
        est = float(np.mean(x))
        hw = Z * float(np.std(x, ddof=1)) / math.sqrt(len(x))
        target = RATIO_TARGET * w
        rows.append(DualRow(u, v, w, est, hw, target, est + hw >= target - hw))
    return DualFeasibilityReport(rows, n_rank_samples, opt.value)


# -- full lemma suite --------------------------------------------------------

@dataclass(frozen=True)
class CheckRow:
    check: str
    passed: bool
    value: float
    detail: str


def run_verification(instance: BipartiteInstance, realization: Realization, seed: int, *,
                     trials: int = 10_000, grid: int = 200, configs: int = 20, gain_samples: int = 100,
                     sweep_points: int = 10_000, theta_tol: float = 1e-6, theta_agreement: float = 2e-4,
                     threads: int | None = None) -> list[CheckRow]:
    """Every lemma check on one realized graph. Stochastic laws are realized
    once from ``seed`` first; the lemmas are statements about a fixed graph."""
    bits = realization.sample(trial_rng(seed, "bits"))
    fixed = Adversarial(bits)
    rows = []

    batch = simulate_trials(instance, fixed, trials, seed, "ranking", threads)
    ratio = batch_conservation(instance, batch)
    worst = float(np.max(ratio * 1e-9 * (1.0 + batch.alg)))
    rows.append(CheckRow("conservation", bool(np.all(ratio <= 1.0)), worst,
                         f"{int(np.sum(ratio > 1.0))} of {trials} trials exceed 1e-9*(1+weight)"))

    rng = np.random.default_rng([int(seed), 7])
    nl = instance.n_left
    mono_bad = 0
    first = ""
    for _ in range(configs):
        ranks, u = rng.random(nl), int(rng.integers(nl))
        res = monotonicity_check(instance, bits, ranks, u, grid)
        if not res.passed:
            mono_bad += 1
            first = first or f"u={u} at {res.first_violation}"
    rows.append(CheckRow("monotonicity", mono_bad == 0, float(mono_bad),
                         f"{mono_bad} of {configs} sweeps (grid {grid}) increase {first}".rstrip()))

    present = np.argwhere(bits & (instance.weights > 0))
    worst_gap = 0.0
    gain_bad = 0
    n_marginal = 0
    if len(present):
        for k in range(configs):
            u, v = (int(x) for x in present[rng.integers(len(present))])
            ranks = rng.random(nl)
            try:
                mr = find_marginal_rank(instance, bits, ranks, u, v, theta_tol)
            except MonotonicityViolated:
                worst_gap = math.inf
                continue
            worst_gap = max(worst_gap, abs(mr.theta - marginal_rank_sweep(instance, bits, ranks, u, v, sweep_points)))
            gc = marginal_rank_gain_check(instance, bits, ranks, u, v, mr, gain_samples, seed=int(rng.integers(2**63)))
            gain_bad += len(gc.violations)
            n_marginal += 1
    rows.append(CheckRow("marginal-rank", worst_gap <= theta_agreement, worst_gap,
                         f"max |binary search - {sweep_points}-point sweep| over {n_marginal} configs"))
    rows.append(CheckRow("basic-extra-gain", gain_bad == 0, float(gain_bad),
                         f"{gain_bad} violations over {n_marginal} configs x {gain_samples} samples"))

    dual = estimate_dual_feasibility(instance, bits, max(trials, 100), seed, threads)
    rows.append(CheckRow("dual-feasibility", dual.passed, dual.min_margin,
                         f"{sum(r.passed for r in dual.rows)} of {len(dual.rows)} optimal edges pass; "
                         f"value is the smallest (estimate - target)/w"))

    thetas = np.linspace(0.0, 1.0, 101)
    gap = max(abs(analytic_bound(float(t)) - RATIO_TARGET) for t in thetas)
    rows.append(CheckRow("analytic-bound", gap <= 1e-10, gap, "max deviation from 1-1/e over 101 thetas"))
    return rows
