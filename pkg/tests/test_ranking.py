import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oblivmatch.graph import (Adversarial, BipartiteInstance, blocking_instance, generate_random,
                              generate_upper_triangular)
from oblivmatch.probe import new_env
from oblivmatch.ranking import (RankVector, build_schedule, draw_ranks, g, gains_from_mates, mates_batch,
                                run_greedy, run_ranking)

W22 = BipartiteInstance([[2.0, 1.0], [1.0, 2.0]])
ALL22 = Adversarial(np.ones((2, 2), bool))


def test_g_values():
    assert g(1.0) == 1.0
    assert g(0.0) == pytest.approx(0.367879441, abs=1e-9)
    assert g(0.5) == pytest.approx(0.606530660, abs=1e-9)


@pytest.mark.parametrize("y", [-0.01, 1.01, float("nan")])
def test_g_domain(y):
    with pytest.raises(ValueError):
        g(y)


def test_g_monotone_range():
    ys = np.linspace(0, 1, 1001)
    gs = g(ys)
    assert np.all(np.diff(gs) >= 0)
    assert gs[0] == pytest.approx(1 / math.e) and gs[-1] == 1.0


def test_draw_ranks_deterministic():
    assert np.array_equal(draw_ranks(3, 17).ranks, draw_ranks(3, 17).ranks)
    assert not np.array_equal(draw_ranks(3, 17).ranks, draw_ranks(3, 18).ranks)


def test_draw_ranks_mean():
    r = draw_ranks(10**6, 5).ranks
    assert np.all((r >= 0) & (r < 1))
    assert abs(r.mean() - 0.5) < 0.002


def test_rank_vector_rejects_one():
    with pytest.raises(ValueError):
        RankVector([0.2, 1.0])


def test_schedule_single_pair():
    (entry,) = build_schedule(BipartiteInstance([[5.0]]), [0.0])
    assert (entry.u, entry.v) == (0, 0)
    assert entry.perturbed == pytest.approx(5 * (1 - 1 / math.e), abs=1e-12)
    assert entry.perturbed == pytest.approx(3.1606, abs=1e-4)


def test_schedule_two_by_two():
    ranks = [0.1, 0.9]
    expected = {(u, v): (1 - math.exp(ranks[u] - 1)) * W22.weights[u, v] for u in range(2) for v in range(2)}
    sched = build_schedule(W22, ranks)
    assert [(e.u, e.v) for e in sched] == sorted(expected, key=lambda k: -expected[k])
    assert (sched[0].u, sched[0].v) == (0, 0)
    assert sched[0].perturbed == pytest.approx(1.1869, abs=1e-4)


def test_schedule_unit_weights_by_rank():
    sched = build_schedule(BipartiteInstance(np.ones((2, 3))), [0.2, 0.8])
    assert [e.u for e in sched] == [0, 0, 0, 1, 1, 1]
    assert [e.v for e in sched] == [0, 1, 2, 0, 1, 2]


def test_schedule_skips_zero_weight():
    sched = build_schedule(BipartiteInstance([[0.0, 1.0], [2.0, 0.0]]), [0.3, 0.4])
    assert {(e.u, e.v) for e in sched} == {(0, 1), (1, 0)}


def test_schedule_ties_by_index():
    sched = build_schedule(BipartiteInstance(np.ones((3, 2))), [0.5, 0.5, 0.5])
    assert [(e.u, e.v) for e in sched] == [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]


def test_ranking_single_edge():
    inst = BipartiteInstance([[5.0]])
    res = run_ranking(inst, new_env(inst, Adversarial([[1]]), 0), [0.5])
    assert res.matching.total_weight == 5.0
    assert res.gains.alpha_left[0] == pytest.approx(3.0327, abs=1e-4)
    assert res.gains.alpha_right[0] == pytest.approx(1.9673, abs=1e-4)


@pytest.mark.parametrize("ranks", [[0.1, 0.9], [0.9, 0.1], [0.5, 0.5], [0.0, 0.3]])
def test_ranking_two_by_two_finds_optimum(ranks):
    res = run_ranking(W22, new_env(W22, ALL22, 0), ranks)
    assert res.matching.total_weight == 4.0


def test_ranking_blocking_instance():
    inst, real = blocking_instance()
    first = run_ranking(inst, new_env(inst, real, 0), [0.2, 0.7])
    assert first.matching.sorted_pairs() == [(0, 0)]
    second = run_ranking(inst, new_env(inst, real, 0), [0.7, 0.2])
    assert second.matching.sorted_pairs() == [(0, 1), (1, 0)]


def test_greedy_examples():
    inst = BipartiteInstance([[3.0]])
    assert run_greedy(inst, new_env(inst, Adversarial([[1]]), 0)).total_weight == 3.0
    assert run_greedy(W22, new_env(W22, ALL22, 0)).total_weight == 4.0
    ut, real = generate_upper_triangular(2)
    env = new_env(ut, real, 0)
    m = run_greedy(ut, env)
    assert m.total_weight == 2.0
    assert [(r.u, r.v) for r in env.log] == [(0, 0), (1, 1)]


def test_injectable_rank_function():
    inst = BipartiteInstance([[4.0]])
    res = run_ranking(inst, new_env(inst, Adversarial([[1]]), 0), [0.3], g=lambda y: np.asarray(y) * 0 + 0.25)
    assert res.gains.alpha_left[0] == 1.0 and res.gains.alpha_right[0] == 3.0


def _random_case(nl, nr, seed):
    inst, real = generate_random(nl, nr, "integer" if seed % 3 == 0 else "uniform", 0.6, seed)
    return inst, real, draw_ranks(nl, seed)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_ranking_invariants(nl, nr, seed):
    inst, real, ranks = _random_case(nl, nr, seed)
    env = new_env(inst, real, seed)
    res = run_ranking(inst, env, ranks)
    w = inst.weights

    # schedule order and content
    pw = [e.perturbed for e in res.schedule]
    assert all(a >= b for a, b in zip(pw, pw[1:]))
    assert {(e.u, e.v) for e in res.schedule} == {tuple(map(int, x)) for x in np.argwhere(w > 0)}
    for e in res.schedule:
        assert e.perturbed == pytest.approx((1 - math.exp(ranks.ranks[e.u] - 1)) * w[e.u, e.v], abs=1e-12)

    # the log is the subsequence of the schedule whose endpoints were free at their turn
    left, right = set(), set()
    log = [(r.u, r.v) for r in env.log]
    k = 0
    for e in res.schedule:
        free = e.u not in left and e.v not in right
        if k < len(log) and log[k] == (e.u, e.v):
            assert free
            k += 1
            if env.bits[e.u, e.v]:
                left.add(e.u)
                right.add(e.v)
        else:
            assert not free
    assert k == len(log)

    # gain sharing
    a_l, a_r = res.gains.alpha_left, res.gains.alpha_right
    assert abs(res.gains.total() - res.matching.total_weight) <= 1e-9 * (1 + res.matching.total_weight)
    matched_l = {u for u, _ in res.matching.pairs}
    matched_r = {v for _, v in res.matching.pairs}
    assert all(a_l[u] == 0 for u in range(nl) if u not in matched_l)
    assert all(a_r[v] == 0 for v in range(nr) if v not in matched_r)
    for u, v in res.matching.pairs:
        assert 1 / math.e - 1e-12 <= a_l[u] / w[u, v] <= 1.0
        assert 0.0 <= a_r[v] / w[u, v] <= 1 - 1 / math.e + 1e-12
        assert a_l[u] + a_r[v] == pytest.approx(w[u, v], abs=1e-9)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 9), st.integers(1, 9), st.integers(0, 2**32 - 1), st.booleans())
def test_compiled_walk_matches_probe_env(nl, nr, seed, greedy):
    inst, real, ranks = _random_case(nl, nr, seed)
    env = new_env(inst, real, seed)
    if greedy:
        m = run_greedy(inst, env)
        gy = np.zeros(nl)
    else:
        res = run_ranking(inst, env, ranks)
        m = res.matching
        gy = g(ranks.ranks)
    mates, probes = mates_batch(inst.weights, real.edges, gy)
    assert np.array_equal(mates[0], m.left_mates(nl))
    assert probes[0] == len(env.log)
    if not greedy:
        a_l, a_r = gains_from_mates(inst.weights, gy, mates)
        assert np.array_equal(a_l[0], res.gains.alpha_left)
        assert np.array_equal(a_r[0], res.gains.alpha_right)


@pytest.mark.parametrize("seed", range(20))
def test_unit_weights_follow_rank_order(seed):
    inst = BipartiteInstance(np.ones((6, 4)))
    ranks = draw_ranks(6, seed)
    sched = build_schedule(inst, ranks)
    order = [e.u for e in sched]
    firsts = list(dict.fromkeys(order))
    assert firsts == list(np.argsort(ranks.ranks, kind="stable"))
    assert order == [u for u in firsts for _ in range(4)]


def test_determinism():
    inst, real = generate_random(7, 7, "uniform", 0.5, 3)
    runs = [run_ranking(inst, new_env(inst, real, 99), draw_ranks(7, 99)) for _ in range(2)]
    assert runs[0].matching == runs[1].matching
    assert np.array_equal(runs[0].gains.alpha_left, runs[1].gains.alpha_left)


@pytest.mark.parametrize("c", [0.5, 3.0, 1024.0])
def test_scale_covariance(c):
    inst, real = generate_random(8, 8, "uniform", 0.5, 21)
    ranks = draw_ranks(8, 4)
    a = run_ranking(inst, new_env(inst, real, 0), ranks)
    b = run_ranking(inst.scaled(c), new_env(inst.scaled(c), real, 0), ranks)
    assert [(e.u, e.v) for e in a.schedule] == [(e.u, e.v) for e in b.schedule]
    assert a.matching.pairs == b.matching.pairs
    assert b.matching.total_weight == pytest.approx(c * a.matching.total_weight, rel=1e-12)
    np.testing.assert_allclose(b.gains.alpha_left, c * a.gains.alpha_left, rtol=1e-12)
    np.testing.assert_allclose(b.gains.alpha_right, c * a.gains.alpha_right, rtol=1e-12)
