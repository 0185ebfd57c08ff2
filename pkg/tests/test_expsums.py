"""Tests for exponential sums"""

import math
from fractions import Fraction
from unittest.mock import patch

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momentgap.errors import CapacityError, ParameterError, QuadratureError
from momentgap.expsums import (
    ExpSumSet,
    bourgain_diagnostics,
    brute_force_energy,
    corollary_exponent,
    energy,
    exact_even_moment,
    expsum_row,
    exponent_to_q,
    initial_grid,
    moment_table,
    quadrature_norm,
    random_set,
    squares_set,
    theorem_upper_bound,
)

small_sets = st.lists(st.integers(-30, 30), min_size=2, max_size=6, unique=True).map(ExpSumSet.from_elements)


class TestExpSumSet:
    """Tests for ExpSumSet"""

    def test_sorted_on_creation(self):
        S = ExpSumSet.from_elements([9, 1, 4])

        assert S.elements == (1, 4, 9)
        assert S.span == 8
        assert S.offsets.tolist() == [0, 3, 8]

    def test_duplicates_rejected(self):
        with pytest.raises(ParameterError, match="distinct"):
            ExpSumSet.from_elements([1, 2, 2])

    def test_too_small(self):
        with pytest.raises(ParameterError, match="at least 2 elements"):
            ExpSumSet.from_elements([5])

    def test_non_integer(self):
        with pytest.raises(ParameterError, match="must be integers"):
            ExpSumSet.from_elements([1, 2.5])

    def test_squares(self):
        assert squares_set(4).elements == (1, 4, 9, 16)

    @pytest.mark.parametrize("m", [1, 1001])
    def test_squares_range(self, m):
        with pytest.raises(ParameterError, match="m must lie in"):
            squares_set(m)

    def test_random_set(self, rng):
        S = random_set(rng, 10, 50)

        assert S.size == 10
        assert 0 <= S.elements[0] and S.elements[-1] <= 50

    def test_initial_grid(self):
        """Test the first grid is a power of two at least 64 (span + 1)"""
        assert initial_grid(ExpSumSet.from_elements([0, 1])) == 128
        assert initial_grid(squares_set(10)) == 8192


class TestEnergy:
    """Tests for additive energies"""

    def test_two_point_set(self):
        """Test S = {0, 1}: r_1 = 2, r_2 = 6, r_3 = 20"""
        S = ExpSumSet.from_elements([0, 1])
        assert [energy(S, k) for k in (1, 2, 3)] == [2, 6, 20]

    def test_exact_moments_are_fractions(self):
        S = ExpSumSet.from_elements([0, 1])

        assert exact_even_moment(S, 2) == Fraction(3, 2)
        assert exact_even_moment(S, 3) == Fraction(5, 2)

    def test_any_two_squares(self):
        """Test m = 2 squares: ||X||_4^4 = 1.5"""
        assert exact_even_moment(squares_set(2), 2) == Fraction(3, 2)

    def test_sidon_set_minimal_energy(self):
        """Test a Sidon set has r_2 = 2|S|^2 - |S|"""
        S = ExpSumSet.from_elements([0, 1, 3, 7, 12, 20])
        assert energy(S, 2) == 2 * 36 - 6

    @given(small_sets, st.sampled_from([1, 2, 3]))
    @settings(max_examples=100, deadline=None)
    def test_matches_brute_force(self, S, k):
        """
        Property: convolution energy equals direct enumeration
        """
        assert energy(S, k) == brute_force_energy(S, k)

    @given(small_sets, st.integers(-10 ** 6, 10 ** 6))
    @settings(max_examples=100, deadline=None)
    def test_shift_and_reflection_invariant(self, S, t):
        """
        Property: energies are unchanged by translation and reflection
        """
        for k in (2, 3):
            assert energy(S.shifted(t), k) == energy(S, k)
            assert energy(S.reflected(), k) == energy(S, k)

    def test_invalid_k(self):
        with pytest.raises(ParameterError, match="k must be 1, 2 or 3"):
            energy(squares_set(3), 4)

    def test_int64_capacity(self):
        S = ExpSumSet(tuple(range(5000)))
        with pytest.raises(CapacityError, match="may exceed int64"):
            energy(S, 3)

    def test_brute_force_capacity(self):
        with pytest.raises(CapacityError):
            brute_force_energy(squares_set(7), 2)


class TestQuadrature:
    """Tests for quadrature_norm"""

    def test_l1_two_point_set(self):
        """Test ||X||_1 = 2 sqrt2 / pi for S = {0, 1}"""
        value, err = quadrature_norm(ExpSumSet.from_elements([0, 1]), 1.0, 1e-6)

        assert value == pytest.approx(2.0 * math.sqrt(2.0) / math.pi, abs=1e-5)
        assert err <= 1e-6

    def test_even_norm_matches_energy(self, rng):
        """
        Property: the trapezoid rule reproduces exact L4 norms
        """
        for _ in range(20):
            S = random_set(rng, int(rng.integers(2, 12)), 60)
            value, _ = quadrature_norm(S, 4.0)
            assert value ** 4 == pytest.approx(float(exact_even_moment(S, 2)), abs=1e-8)

    def test_l2_is_one(self):
        value, _ = quadrature_norm(squares_set(12), 2.0)
        assert value == pytest.approx(1.0, abs=1e-9)

    def test_l1_below_one(self):
        """Test ||X||_1 < ||X||_2 = 1 for squares"""
        value, _ = quadrature_norm(squares_set(20), 1.0, 1e-6)
        assert 0.0 < value < 1.0

    def test_grid_cap_checked_first(self):
        """Test that a span needing more than 2^27 points fails before any evaluation"""
        S = ExpSumSet.from_elements([0, 10 ** 7])

        with patch("momentgap.expsums._grid_power_sum") as power_sum:
            with pytest.raises(QuadratureError, match="above the cap") as excinfo:
                quadrature_norm(S, 1.0)

        power_sum.assert_not_called()
        assert excinfo.value.diagnostics["points"] == initial_grid(S)

    @pytest.mark.parametrize("p,tol,match", [(0.5, 1e-9, "at least 1"), (1.0, 1e-11, "tol must be")])
    def test_invalid_arguments(self, p, tol, match):
        with pytest.raises(ParameterError, match=match):
            quadrature_norm(squares_set(3), p, tol)


class TestTheoremBound:
    """Tests for theorem_upper_bound and the corollary exponent"""

    def test_two_point_set(self):
        """Test S = {0, 1}, (4, 6), C = 1/3: bound 17/18 above 2 sqrt2 / pi"""
        S = ExpSumSet.from_elements([0, 1])
        bound = theorem_upper_bound(S, 4.0, 6.0, 1.0 / 3.0)

        assert bound == pytest.approx(17.0 / 18.0, rel=1e-14)
        assert 2.0 * math.sqrt(2.0) / math.pi < bound

    @pytest.mark.parametrize("m", [2, 3, 5, 8, 13, 30])
    def test_squares_below_bound(self, m):
        """
        Property: ||X_Q||_1 <= theorem bound for squares
        """
        row = expsum_row(squares_set(m), m=m)
        assert row["gap"] >= -1e-6

    def test_invalid_constant(self):
        with pytest.raises(ParameterError, match="constant C"):
            theorem_upper_bound(squares_set(3), 4.0, 6.0, 0.0)

    def test_corollary_exponent(self):
        assert corollary_exponent(6.0) == pytest.approx(2.0)
        assert exponent_to_q(2.0) == pytest.approx(6.0)

    @given(st.floats(4.01, 100.0))
    @settings(max_examples=100, deadline=None)
    def test_exponent_inverse(self, q):
        """
        Property: exponent_to_q inverts corollary_exponent
        """
        assert exponent_to_q(corollary_exponent(q)) == pytest.approx(q, rel=1e-9)

    @pytest.mark.parametrize("q", [4.0, 3.0, math.inf])
    def test_corollary_needs_q_above_four(self, q):
        with pytest.raises(ParameterError, match="q must exceed 4"):
            corollary_exponent(q)

    def test_exponent_to_q_needs_n_above_one(self):
        with pytest.raises(ParameterError, match="N must exceed 1"):
            exponent_to_q(1.0)


class TestReports:
    """Tests for moment_table, expsum_row and bourgain_diagnostics"""

    def test_moment_table(self):
        table = moment_table(ExpSumSet.from_elements([0, 1]), p_values=(4.0,))
        data = table.to_dict()

        assert data["exact_even"] == {"1": 1.0, "2": 1.5, "3": 2.5}
        assert data["quadrature"]["4"]["value"] ** 4 == pytest.approx(1.5, abs=1e-8)

    def test_row_columns(self):
        row = expsum_row(squares_set(10), m=10)

        assert row["m"] == 10
        assert row["l6_6_over_m"] == pytest.approx(row["l6_6_exact"] / 10)
        assert row["l4_4_over_log_m"] == pytest.approx(row["l4_4_exact"] / math.log(10))
        assert row["gap"] == pytest.approx(row["theorem_bound"] - row["l1"])

    def test_diagnostics_rows(self):
        rows = bourgain_diagnostics([2, 5, 10])
        assert [r["m"] for r in rows] == [2, 5, 10]

    def test_diagnostics_m_cap(self):
        with pytest.raises(ParameterError, match="m must lie in"):
            bourgain_diagnostics([501])
