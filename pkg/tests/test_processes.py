import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import stationary_power_iteration
from stochprod.accumulation import MatrixSequence, accumulate
from stochprod.generators import GeneratorSpec
from stochprod.matrix_core import ergodicity_coefficient
from stochprod.processes import (
    DistributionState,
    OpinionState,
    cluster_opinions,
    consensus_step,
    markov_step,
    run_consensus,
    run_markov,
    weak_ergodicity_estimate,
)

DEGROOT = [[0.5, 0.5], [0.25, 0.75]]
POSITIVE = [[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.25, 0.25, 0.5]]


def test_consensus_step_examples():
    assert consensus_step(OpinionState(np.array([0.0, 1.0])), [[0.5, 0.5], [0.5, 0.5]]).x.tolist() == [0.5, 0.5]
    x = np.array([0.3, -2.0, 7.0])
    s = consensus_step(OpinionState(x, 4), np.eye(3))
    assert np.array_equal(s.x, x) and s.t == 5


def test_markov_step_examples():
    assert markov_step(DistributionState(np.array([1.0, 0.0])), np.eye(2)).p.tolist() == [1, 0]
    assert markov_step(DistributionState(np.array([1.0, 0.0])), [[0.5, 0.5], [0.5, 0.5]]).p.tolist() == [0.5, 0.5]


def test_step_dimension_mismatch():
    with pytest.raises(ValueError):
        consensus_step(OpinionState(np.zeros(3)), np.eye(2))
    with pytest.raises(ValueError):
        markov_step(DistributionState(np.ones(3) / 3), np.eye(2))


def test_degroot_limits():
    pi = stationary_power_iteration(DEGROOT)
    np.testing.assert_allclose(pi, [1 / 3, 2 / 3], atol=1e-12)

    seq = MatrixSequence.constant(DEGROOT, 500)
    run = run_consensus(seq, [0.0, 1.0])
    np.testing.assert_allclose(run.final, [2 / 3, 2 / 3], atol=1e-8)
    assert run.report.converged and len(run.report.clusters) == 1

    mrun = run_markov(seq, [1.0, 0.0])
    np.testing.assert_allclose(mrun.final, [1 / 3, 2 / 3], atol=1e-8)
    assert mrun.converged


def test_constant_positive_matches_matrix_power():
    x0 = np.array([0.1, 0.9, -0.4])
    run = run_consensus(MatrixSequence.constant(POSITIVE, 300), x0, patience=None)
    expected = np.linalg.matrix_power(np.array(POSITIVE), 300) @ x0
    np.testing.assert_allclose(run.final, expected, atol=1e-12)
    assert run.report.converged
    assert run.report.clusters == ((0, 1, 2),)


def test_identity_keeps_everyone_apart():
    x0 = [0.0, 0.5, 1.0]
    run = run_consensus(MatrixSequence.constant(np.eye(3), 100), x0)
    assert run.report.converged
    assert run.report.clusters == ((0,), (1,), (2,))
    assert len(run.trace) == 11  # stops after the patience window
    assert np.array_equal(run.trace[-1], x0)


def test_block_diagonal_two_clusters():
    blk1 = np.array([[0.7, 0.3], [0.4, 0.6]])
    blk2 = np.array([[0.2, 0.8], [0.5, 0.5]])
    a = np.zeros((4, 4))
    a[:2, :2], a[2:, 2:] = blk1, blk2
    x0 = np.array([0.0, 0.3, 0.8, 1.0])
    run = run_consensus(MatrixSequence.constant(a, 400), x0)
    assert run.report.clusters == ((0, 1), (2, 3))
    v1 = stationary_power_iteration(blk1) @ x0[:2]
    v2 = stationary_power_iteration(blk2) @ x0[2:]
    np.testing.assert_allclose(run.report.values, [v1, v2], atol=1e-8)

    plain = run_consensus(MatrixSequence.constant(a, 400), [0, 0, 1, 1])
    assert plain.report.clusters == ((0, 1), (2, 3))
    np.testing.assert_allclose(plain.report.values, [0, 1], atol=1e-12)


def test_inessential_agent_flagged_unsettled_when_still_moving():
    # agent 2 listens to two separate consensus groups and lags behind
    a = [[1, 0, 0], [0, 1, 0], [0.005, 0.005, 0.99]]
    run = run_consensus(MatrixSequence.constant(a, 50), [0.0, 1.0, 5.0])
    assert 2 in run.report.unsettled
    assert not run.report.converged


def test_cluster_single_linkage():
    rep = cluster_opinions([0.0, 5e-7, 1.0, 1.0 + 9e-7, 3.0])
    assert rep.clusters == ((0, 1), (2, 3), (4,))
    assert rep.values[0] == pytest.approx(2.5e-7)


seqs = st.builds(
    lambda seed, n, T: GeneratorSpec("random_positive_diagonal", n, seed=seed, density=0.3).sequence(T),
    st.integers(0, 10**6), st.integers(1, 8), st.integers(1, 150),
)


@settings(max_examples=50, deadline=None)
@given(seqs, st.integers(0, 10**6))
def test_consensus_convexity_and_accumulation_equivalence(seq, seed):
    rng = np.random.default_rng(seed)
    x0 = rng.normal(size=seq.n)
    run = run_consensus(seq, x0, patience=None)
    tr = run.trace
    assert np.all(tr[1:].min(axis=1) >= tr[:-1].min(axis=1) - 1e-12)
    assert np.all(tr[1:].max(axis=1) <= tr[:-1].max(axis=1) + 1e-12)
    for t in rng.integers(0, len(tr), size=5):
        acc = accumulate(seq, "backward", 0, int(t)).value
        np.testing.assert_allclose(tr[t], acc.entries @ x0, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(seqs, st.integers(0, 10**6))
def test_markov_mass_and_forward_equivalence(seq, seed):
    rng = np.random.default_rng(seed)
    p0 = rng.random(seq.n)
    p0 /= p0.sum()
    run = run_markov(seq, p0, patience=None)
    assert np.all(np.abs(run.trace.sum(axis=1) - 1) <= 1e-9)
    assert np.all(run.trace >= 0)
    t = int(rng.integers(0, len(run.trace)))
    np.testing.assert_allclose(run.trace[t], p0 @ accumulate(seq, "forward", 0, t).value.entries, atol=1e-9)


def test_run_markov_rejects_bad_distribution():
    with pytest.raises(ValueError):
        run_markov(MatrixSequence.constant(DEGROOT, 5), [0.7, 0.7])


class TestWeakErgodicity:
    def test_positive_constant_decays_under_envelope(self):
        taus = weak_ergodicity_estimate(MatrixSequence.constant(POSITIVE, 30), range(3))
        tau1 = ergodicity_coefficient(POSITIVE)
        for k, tau in enumerate(taus, start=1):
            assert tau <= tau1 ** k + 1e-12
        head = [t for t in taus if t > 1e-13]
        assert len(head) >= 10
        assert all(b < a for a, b in zip(head, head[1:]))

    def test_singleton(self):
        taus = weak_ergodicity_estimate(MatrixSequence.constant(np.eye(3), 10), [1])
        assert taus == [0.0] * 10

    def test_identity_never_mixes(self):
        taus = weak_ergodicity_estimate(MatrixSequence.constant(np.eye(3), 10), range(3))
        assert taus == [1.0] * 10

    def test_not_closed(self):
        with pytest.raises(ValueError):
            weak_ergodicity_estimate(MatrixSequence.constant(POSITIVE, 10), [0])

    def test_essential_class_of_reducible_chain(self):
        a = [[0.5, 0.5, 0], [0.3, 0.7, 0], [0.2, 0.2, 0.6]]
        taus = weak_ergodicity_estimate(MatrixSequence.constant(a, 40), [0, 1])
        assert taus[-1] < 1e-12
