import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oblivmatch.graph import Adversarial, BipartiteInstance, IndependentBernoulli, perfectly_correlated
from oblivmatch.probe import (DuplicateProbe, Outcome, ProbeOfMatchedVertex, final_matching, new_env,
                              write_probe_log)

W = BipartiteInstance([[5.0, 1.0], [2.0, 3.0]])


def test_adversarial_bits_copied():
    edges = np.array([[1, 0], [1, 1]], bool)
    env = new_env(W, Adversarial(edges), seed=3)
    assert np.array_equal(env.bits, edges)
    with pytest.raises(ValueError):
        env.bits[0, 0] = False


def test_bernoulli_extremes():
    assert new_env(W, IndependentBernoulli(np.ones((2, 2))), seed=0).bits.all()
    assert not new_env(W, IndependentBernoulli(np.zeros((2, 2))), seed=0).bits.any()


def test_bernoulli_reproducible():
    real = IndependentBernoulli(np.full((2, 2), 0.5))
    draws = [new_env(W, real, seed=s).bits for s in range(40)]
    assert all(np.array_equal(d, new_env(W, real, seed=s).bits) for s, d in enumerate(draws))
    assert len({d.tobytes() for d in draws}) > 1


def test_joint_sampler_reproducible():
    real = perfectly_correlated((2, 2), 0.5)
    for s in range(20):
        a, b = new_env(W, real, seed=s).bits, new_env(W, real, seed=s).bits
        assert np.array_equal(a, b) and (a.all() or not a.any())


def test_probe_present_edge():
    env = new_env(W, Adversarial(np.ones((2, 2), bool)), seed=0)
    assert env.probe(0, 0) is Outcome.MATCHED
    assert env.left_mate[0] == 0 and env.right_mate[0] == 0
    assert final_matching(env).total_weight == 5.0


def test_probe_absent_edge():
    env = new_env(W, Adversarial(np.zeros((2, 2), bool)), seed=0)
    assert env.probe(0, 0) is Outcome.EDGE_ABSENT
    assert env.left_mate[0] == -1 and env.right_mate[0] == -1
    assert env.log[-1].outcome is Outcome.EDGE_ABSENT


def test_probe_matched_vertex_rejected():
    env = new_env(W, Adversarial(np.ones((2, 2), bool)), seed=0)
    env.probe(0, 0)
    with pytest.raises(ProbeOfMatchedVertex):
        env.probe(0, 1)
    with pytest.raises(ProbeOfMatchedVertex):
        env.probe(1, 0)


def test_duplicate_probe_rejected():
    env = new_env(W, Adversarial(np.zeros((2, 2), bool)), seed=0)
    env.probe(1, 1)
    with pytest.raises(DuplicateProbe):
        env.probe(1, 1)


def test_final_matching_empty():
    m = final_matching(new_env(W, Adversarial(np.ones((2, 2), bool)), seed=0))
    assert len(m) == 0 and m.total_weight == 0.0


def test_log_csv():
    env = new_env(W, Adversarial(np.array([[0, 1], [1, 1]], bool)), seed=0)
    env.probe(0, 0)
    env.probe(0, 1)
    buf = io.StringIO()
    write_probe_log(buf, [(4, env.log)])
    assert buf.getvalue() == "trial,step,u,v,outcome\n4,0,0,0,absent\n4,1,0,1,matched\n"


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_random_probing_invariants(nl, nr, seed):
    """Arbitrary legal probe sequences keep a valid, irrevocable matching that
    is maximal over the probed pairs."""
    rng = np.random.default_rng(seed)
    inst = BipartiteInstance(rng.random((nl, nr)))
    env = new_env(inst, Adversarial(rng.random((nl, nr)) < 0.5), seed=seed)
    committed = set()
    for u, v in rng.permutation([(u, v) for u in range(nl) for v in range(nr)]):
        if not env.is_free(u, v):
            continue
        if env.probe(int(u), int(v)) is Outcome.MATCHED:
            committed.add((int(u), int(v)))
        assert committed <= final_matching(env).pairs
    m = final_matching(env)
    assert m.pairs == committed
    assert all(env.bits[u, v] for u, v in m.pairs)
    assert m.total_weight == pytest.approx(sum(inst.weights[u, v] for u, v in m.pairs), abs=1e-9)
    probed = {(r.u, r.v) for r in env.log}
    assert len(probed) == len(env.log)
    for u, v in probed:
        assert not (env.bits[u, v] and env.left_mate[u] < 0 and env.right_mate[v] < 0)
