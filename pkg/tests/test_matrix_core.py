import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import all_positive_diagonal_patterns, product_loops, random_stochastic, tau_definition
from stochprod.matrix_core import (
    EPS_POS,
    StochasticMatrix,
    ZeroPattern,
    block_row_sum_norm,
    column_extrema,
    ergodicity_coefficient,
    is_consensus,
    min_plus,
    multiply,
    pattern_of,
    pattern_product,
)

K = [[0.5, 0.5], [0.5, 0.5]]


@st.composite
def stochastic(draw, positive_diagonal=False, n=None):
    n = n or draw(st.integers(1, 8))
    seed = draw(st.integers(0, 2**32 - 1))
    density = draw(st.floats(0.1, 1.0))
    return random_stochastic(np.random.default_rng(seed), n, positive_diagonal=positive_diagonal,
                             density=density)


@st.composite
def stochastic_pair(draw, positive_diagonal=False):
    n = draw(st.integers(1, 8))
    return (draw(stochastic(positive_diagonal, n)), draw(stochastic(positive_diagonal, n)))


class TestValidation:
    def test_rejects_bad_rows(self):
        with pytest.raises(ValueError):
            StochasticMatrix([[0.5, 0.4], [0, 1]])

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            StochasticMatrix([[1.5, -0.5], [0, 1]])

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            StochasticMatrix([[1.0, 0.0]])

    def test_positive_diagonal_flag(self):
        with pytest.raises(ValueError):
            StochasticMatrix([[0, 1], [0, 1]], positive_diagonal=True)
        StochasticMatrix([[0.5, 0.5], [0, 1]], positive_diagonal=True)

    def test_immutable(self):
        m = StochasticMatrix(K)
        with pytest.raises(ValueError):
            m.entries[0, 0] = 1.0

    def test_input_copied(self):
        src = np.array(K)
        m = StochasticMatrix(src)
        src[0, 0] = 9
        assert m.entries[0, 0] == 0.5


class TestMultiply:
    def test_identity_left(self):
        b = StochasticMatrix([[0.2, 0.8], [0.6, 0.4]])
        assert np.array_equal(multiply(np.eye(2), b).entries, b.entries)

    def test_identity_times_consensus(self):
        assert np.array_equal(multiply(np.eye(2), K).entries, np.array(K))

    def test_hand_product(self):
        got = multiply([[0.5, 0.5], [0, 1]], [[1, 0], [0.5, 0.5]])
        np.testing.assert_allclose(got.entries, [[0.75, 0.25], [0.5, 0.5]], atol=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            multiply(np.eye(2), np.eye(3))

    @given(stochastic_pair())
    def test_matches_loop_product(self, pair):
        a, b = pair
        np.testing.assert_allclose(multiply(a, b).entries, product_loops(a, b), atol=1e-12)

    def test_rows_stay_normalized_over_long_products(self):
        rng = np.random.default_rng(0)
        acc = StochasticMatrix.identity(6)
        for _ in range(5000):
            acc = multiply(random_stochastic(rng, 6, positive_diagonal=True), acc)
        assert np.abs(acc.entries.sum(axis=1) - 1).max() < 1e-14


class TestPatterns:
    def test_identity(self):
        assert pattern_of(np.eye(3)) == ZeroPattern.identity(3)

    def test_all_positive(self):
        assert pattern_of(np.full((3, 3), 1 / 3)) == ZeroPattern.full(3)

    def test_threshold(self):
        m = [[0.5, 0.5], [EPS_POS / 2, 1 - EPS_POS / 2]]
        assert pattern_of(m).to_grid() == [[1, 1], [0, 1]]

    def test_product_identity(self):
        q = ZeroPattern([[1, 0, 1], [0, 1, 0], [1, 1, 1]])
        assert pattern_product(ZeroPattern.identity(3), q) == q

    def test_product_full(self):
        assert pattern_product(ZeroPattern.full(4), ZeroPattern.full(4)) == ZeroPattern.full(4)

    def test_product_dimension_mismatch(self):
        with pytest.raises(ValueError):
            pattern_product(ZeroPattern.identity(2), ZeroPattern.identity(3))

    @pytest.mark.parametrize("n", [2, 3])
    def test_positive_diagonal_absorption_exhaustive(self, n):
        pats = [ZeroPattern(b) for b in all_positive_diagonal_patterns(n)]
        for p in pats:
            for q in pats:
                assert (p | q) <= pattern_product(p, q)

    @given(stochastic_pair())
    def test_pattern_soundness(self, pair):
        a, b = pair
        assert pattern_of(multiply(a, b)) == pattern_product(pattern_of(a), pattern_of(b))

    @given(stochastic_pair(positive_diagonal=True))
    def test_absorption_random(self, pair):
        a, b = pair
        assert (pattern_of(a) | pattern_of(b)) <= pattern_of(multiply(a, b))

    def test_hash_and_eq(self):
        p = ZeroPattern([[1, 0], [1, 1]])
        assert p == ZeroPattern(np.array([[True, False], [True, True]]))
        assert len({p, ZeroPattern([[1, 0], [1, 1]])}) == 1
        assert p != p.T


class TestErgodicityCoefficient:
    def test_consensus(self):
        assert ergodicity_coefficient(K) == 0.0

    def test_identity(self):
        assert ergodicity_coefficient(np.eye(2)) == 1.0

    def test_worked_value(self):
        assert ergodicity_coefficient([[0.8, 0.2], [0.3, 0.7]]) == pytest.approx(0.5, abs=1e-15)

    @given(stochastic())
    def test_matches_definition(self, a):
        assert ergodicity_coefficient(a) == pytest.approx(tau_definition(a), abs=1e-12)

    @settings(max_examples=200)
    @given(stochastic_pair())
    def test_submultiplicative(self, pair):
        a, b = pair
        tau_ab = ergodicity_coefficient(multiply(a, b))
        assert 0.0 <= tau_ab <= 1.0
        assert tau_ab <= ergodicity_coefficient(a) * ergodicity_coefficient(b) + 1e-12

    @given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=8))
    def test_zero_iff_consensus(self, w):
        row = np.array(w) / sum(w)
        m = StochasticMatrix.consensus(row)
        assert ergodicity_coefficient(m) == 0.0
        assert is_consensus(m)

    @given(stochastic())
    def test_zero_exactly_on_equal_rows(self, a):
        assert (ergodicity_coefficient(a) == 0.0) == is_consensus(a, tol=0.0)


class TestMinPlus:
    def test_identity(self):
        assert min_plus(np.eye(3)) == 1.0

    def test_uniform(self):
        assert min_plus(np.full((3, 3), 1 / 3)) == pytest.approx(1 / 3)

    def test_worked_value(self):
        assert min_plus([[0.9, 0.1], [0, 1]]) == pytest.approx(0.1)

    @settings(max_examples=200)
    @given(stochastic_pair(positive_diagonal=True))
    def test_product_bound(self, pair):
        a, b = pair
        assert min_plus(multiply(a, b)) >= min_plus(a) * min_plus(b) - 1e-12


class TestBlockNorm:
    def test_full_index(self):
        a = random_stochastic(np.random.default_rng(1), 5)
        assert block_row_sum_norm(a, range(5), range(5)) == pytest.approx(1.0)

    def test_single_entry(self):
        assert block_row_sum_norm([[1, 0], [0.5, 0.5]], [1], [1]) == 0.5

    def test_zero_block(self):
        assert block_row_sum_norm(np.eye(2), [0], [1]) == 0.0

    def test_empty_index_set(self):
        with pytest.raises(ValueError):
            block_row_sum_norm(np.eye(2), [], [0])


class TestColumnExtrema:
    def test_consensus(self):
        ext = column_extrema([[0.3, 0.7], [0.3, 0.7]])
        assert np.array_equal(ext[:, 0], ext[:, 1])

    def test_identity(self):
        assert column_extrema(np.eye(2)).tolist() == [[0, 1], [0, 1]]

    def test_worked_value(self):
        np.testing.assert_allclose(column_extrema([[0.8, 0.2], [0.3, 0.7]]), [[0.3, 0.8], [0.2, 0.7]])

    @given(stochastic_pair())
    def test_left_multiplication_squeezes_columns(self, pair):
        a, b = pair
        before, after = column_extrema(b), column_extrema(multiply(a, b))
        assert np.all(after[:, 0] >= before[:, 0] - 1e-12)
        assert np.all(after[:, 1] <= before[:, 1] + 1e-12)
