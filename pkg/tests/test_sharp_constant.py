"""Tests for the sharp constant C(p, q)"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from momentgap.errors import DomainError, ParameterError
from momentgap.rv_core import main_inequality_rhs
from momentgap.sharp_constant import (
    b_func,
    b_numerator,
    boundary_b,
    c46_identity_residual,
    c46_rational,
    c_lower_bound,
    closure_objective,
    compute_c,
    extremal_two_point,
    lemma_bounds,
    lemma_sandwich,
    log_c_lower_bound,
    objective,
    remark_product_form,
    richardson_limit,
    torsion_minors,
)

interior = st.floats(0.01, 0.99)


class TestBFunction:
    """Tests for B(a, c, p)"""

    def test_known_value(self):
        """Test a = c = 1/2, p = 4 gives 135/48"""
        assert b_func(0.5, 0.5, 4.0) == pytest.approx(135.0 / 48.0, rel=1e-14)

    def test_matches_expanded_quotient(self):
        """Test the factored evaluation against the quotient as written"""
        for a, c, p in [(0.3, 0.7, 3.0), (0.5, 0.5, 4.0), (0.9, 0.2, 7.3), (0.1, 0.95, 2.5)]:
            expanded = float(b_numerator(a, c, p)) / ((1 - c) * (1 - a) * (1 - a * c))
            assert b_func(a, c, p) == pytest.approx(expanded, rel=1e-12)

    @pytest.mark.parametrize("a,c", [(0.0, 0.5), (0.5, 1.0), (1e-10, 0.5), (0.5, 1.0 - 1e-10)])
    def test_boundary_rejected(self, a, c):
        with pytest.raises(DomainError, match="use closure_objective"):
            b_func(a, c, 4.0)

    def test_p_must_exceed_two(self):
        with pytest.raises(ParameterError):
            b_func(0.5, 0.5, 2.0)

    @pytest.mark.parametrize("p", [2.1, 2.5, 3.0, 4.0, 7.3, 12.0])
    def test_lemma_sandwich_grid(self, p):
        """
        Property: min{1, p - 2} <= B(a, c, p) <= p^2 on a 500 x 500 grid
        """
        assert lemma_sandwich(p, n=500) <= 0.0

    def test_lemma_bounds(self):
        assert lemma_bounds(4.0) == (1.0, 16.0)
        assert lemma_bounds(2.5) == (0.5, 6.25)

    @given(interior, interior, st.floats(2.05, 20.0))
    @settings(max_examples=300, deadline=None)
    def test_lemma_sandwich_random(self, a, c, p):
        """
        Property: the lemma bounds hold at random interior points
        """
        lo, hi = lemma_bounds(p)
        value = b_func(a, c, p)
        assert lo * (1.0 - 1e-12) <= value <= hi * (1.0 + 1e-12)


class TestObjective:
    """Tests for the objective and its closure"""

    def test_near_boundary_minimum(self):
        """Test p=4, q=6 at a -> 1, c = 1/2 approaches 1/3"""
        assert objective(0.9999, 0.5, 4.0, 6.0) == pytest.approx(1.0 / 3.0, abs=1e-4)

    def test_interior_above_one_third(self):
        assert objective(0.5, 0.5, 4.0, 6.0) > 1.0 / 3.0

    @given(interior, interior)
    @settings(max_examples=200, deadline=None)
    def test_product_form_agrees(self, a, c):
        """
        Property: objective equals the product form with expanded numerators
        """
        for p, q in [(4.0, 6.0), (3.0, 5.0)]:
            assert remark_product_form(a, c, p, q) == pytest.approx(objective(a, c, p, q), rel=1e-9)

    def test_log_domain_for_close_exponents(self):
        """Test that theta > 30 still gives a finite positive value"""
        value = objective(0.5, 0.5, 4.0, 4.01)
        assert math.isfinite(value) and value > 0.0

    def test_closure_on_a_equals_one(self):
        """Test the (4,6) edge a=1: 1/3 + (2c-1)^2 / (6 (1+c)^2)"""
        for c in (0.0, 0.25, 0.5, 0.75):
            expected = 1.0 / 3.0 + (2 * c - 1) ** 2 / (6 * (1 + c) ** 2)
            assert closure_objective(1.0, c, 4.0, 6.0) == pytest.approx(expected, rel=1e-12)

    def test_closure_continuous(self):
        """Test that closure values match nearby interior values"""
        for a, c in [(1.0, 0.3), (0.4, 1.0), (0.0, 0.6), (0.7, 0.0)]:
            a_in = min(max(a, 1e-7), 1 - 1e-7)
            c_in = min(max(c, 1e-7), 1 - 1e-7)
            assert closure_objective(a, c, 3.0, 5.0) == pytest.approx(objective(a_in, c_in, 3.0, 5.0), rel=1e-5)

    def test_corner_limit(self):
        """Test B(1, 1, p) = p(p - 2)"""
        assert boundary_b(1.0, 1.0, 4.0) == pytest.approx(8.0, rel=1e-8)
        assert boundary_b(1.0, 1.0, 5.5) == pytest.approx(5.5 * 3.5, rel=1e-8)

    def test_closure_rejects_outside(self):
        with pytest.raises(DomainError):
            closure_objective(1.5, 0.5, 4.0, 6.0)


class TestRichardson:
    """Tests for richardson_limit"""

    def test_polynomial_limit(self):
        """Test that a smooth expansion is extrapolated to its constant term"""
        est = richardson_limit(lambda e: 2.0 + 3.0 * e - 5.0 * e * e + e ** 3)
        assert est.value == pytest.approx(2.0, abs=1e-12)

    def test_removable_singularity(self):
        """Test sin(e)/e -> 1"""
        est = richardson_limit(lambda e: math.sin(e) / e)
        assert est.value == pytest.approx(1.0, abs=1e-12)


class TestLowerBound:
    """Tests for c_lower_bound"""

    def test_four_six(self):
        assert c_lower_bound(4.0, 6.0) == pytest.approx(1.0 / 256.0, rel=1e-14)

    def test_three_five(self):
        assert c_lower_bound(3.0, 5.0) == pytest.approx(1.0 / 27.0, rel=1e-14)

    def test_close_exponents_finite(self):
        """Test q = p + 1e-3: the bound is positive in the log domain"""
        log_value = log_c_lower_bound(4.0, 4.001)
        assert math.isfinite(log_value)
        # exp(log_value) is below the smallest float64 subnormal, so c_lower_bound returns 0.0
        assert log_value < math.log(5e-324)
        assert c_lower_bound(4.0, 4.001) == 0.0

    def test_invalid(self):
        with pytest.raises(ParameterError):
            c_lower_bound(6.0, 4.0)


class TestComputeC:
    """Tests for compute_c"""

    def test_four_six(self, c46):
        """Test C(4,6) = 1/3 at a -> 1, c = 1/2"""
        assert c46.c_value == pytest.approx(1.0 / 3.0, abs=1e-6)
        assert c46.a_star == pytest.approx(1.0, abs=1e-3)
        assert c46.c_star == pytest.approx(0.5, abs=1e-3)
        assert c46.c_value >= c46.lower_bound

    def test_three_five_above_bound(self):
        result = compute_c(3.0, 5.0)
        assert result.c_value >= 1.0 / 27.0 - 1e-9
        assert result.c_value <= 0.5 + 1e-9

    def test_three_four_bounded(self):
        """Test the corner (1, 0) caps every constant at 1/2"""
        result = compute_c(3.0, 4.0)
        assert c_lower_bound(3.0, 4.0) - 1e-9 <= result.c_value <= 0.5 + 1e-9

    @pytest.mark.parametrize("tol", [1e-11, 1e-2])
    def test_tol_range(self, tol):
        with pytest.raises(ParameterError, match="tol must lie in"):
            compute_c(4.0, 6.0, tol)

    def test_deterministic(self, c46):
        """Test that repeated runs give the same argmin"""
        again = compute_c(4.0, 6.0)
        assert again.to_dict() == c46.to_dict()

    def test_thread_count_independent(self, c46, monkeypatch):
        """Test that MOMENTGAP_THREADS does not change the result"""
        monkeypatch.setenv("MOMENTGAP_THREADS", "1")
        assert compute_c(4.0, 6.0).to_dict() == c46.to_dict()

    @pytest.mark.slow
    @pytest.mark.parametrize("p,q", [
        (2.1, 2.5), (2.1, 12.0), (2.5, 3.0), (2.5, 6.0), (3.0, 3.5),
        (3.0, 4.0), (3.0, 5.0), (3.5, 12.0), (4.0, 4.5), (4.0, 8.0),
        (4.5, 6.0), (5.0, 7.0), (5.0, 9.0), (6.0, 7.0), (6.0, 10.0),
        (7.3, 9.0), (8.0, 12.0), (9.0, 11.0), (10.0, 11.5), (11.0, 12.0),
    ])
    def test_lower_bound_grid(self, p, q):
        """
        Property: C(p, q) >= closed-form lower bound - 1e-9
        """
        result = compute_c(p, q)
        assert result.c_value >= c_lower_bound(p, q) - 1e-9

    @pytest.mark.parametrize("p,q", [(4.0, 6.0), (3.0, 5.0), (5.0, 9.0)])
    def test_sharpness(self, p, q, c46):
        """
        Property: the two-point variable at the argmin attains equality within 1e-4
        """
        result = c46 if (p, q) == (4.0, 6.0) else compute_c(p, q)
        report = main_inequality_rhs(extremal_two_point(result).to_rv(), p, q, result.c_value)
        assert abs(report.gap) <= 1e-4
        assert report.effective_constant == pytest.approx(result.c_value, rel=1e-4)

    @pytest.mark.parametrize("factor", [5.0, 0.01])
    def test_wrong_constant_not_sharp(self, factor, c46):
        """Test that the extremal variable tolerates C(4,6) itself, not a multiple of it"""
        wrong = factor * c46.c_value
        report = main_inequality_rhs(extremal_two_point(c46).to_rv(), 4.0, 6.0, wrong)

        assert report.effective_constant == pytest.approx(c46.c_value, rel=1e-4)
        assert abs(report.effective_constant - wrong) / wrong > 1e-4


class TestC46Identity:
    """Tests for the closed form of objective(a, c, 4, 6) - 1/3"""

    def test_zero_at_extremal_limit(self):
        assert c46_identity_residual(1.0, 0.5) == pytest.approx(0.0, abs=1e-15)

    def test_corner_value(self):
        """Test a = c = 0: numerator 2, residual 2/3"""
        assert c46_identity_residual(0.0, 0.0) == pytest.approx(2.0 / 3.0)

    def test_outside_square(self):
        with pytest.raises(DomainError):
            c46_identity_residual(1.2, 0.5)

    @given(interior, interior)
    @settings(max_examples=500, deadline=None)
    def test_identity_and_sign(self, a, c):
        """
        Property: objective - 1/3 equals the rational form and is nonnegative
        """
        residual = c46_identity_residual(a, c)
        assert residual == pytest.approx(c46_rational(a, c), rel=1e-9, abs=1e-14)
        assert residual >= -1e-15


class TestTorsion:
    """Tests for the torsion minors of the moment curve"""

    def test_known_values(self):
        """Test t = 1/2, p = 4, q = 6: A11 = 1 and A33 = 12"""
        report = torsion_minors(0.5, 4.0, 6.0)

        assert report.closed_forms[0] == pytest.approx(1.0)
        assert report.closed_forms[2] == pytest.approx(12.0)
        assert report.max_rel_err <= 1e-8
        assert report.all_positive

    def test_displayed_a22_differs(self):
        """Test that 2p(p-1) t^(p-1) is not the determinant; 2p(p-2) t^(p-1) is"""
        report = torsion_minors(0.5, 4.0, 6.0)

        assert report.minors[1] == pytest.approx(2 * 4 * 2 * 0.5 ** 3)
        assert report.displayed_a22 == pytest.approx(2 * 4 * 3 * 0.5 ** 3)

    def test_random_minors(self, rng):
        """
        Property: all minors positive and matching the closed forms
        """
        for _ in range(100):
            t = rng.uniform(0.1, 0.9)
            p = rng.uniform(2.2, 6.0)
            q = p + rng.uniform(0.2, 4.0)
            report = torsion_minors(t, p, q)
            assert report.all_positive
            assert report.max_rel_err <= 1e-8

    @pytest.mark.parametrize("t", [0.0, 1.0, -0.5])
    def test_t_out_of_range(self, t):
        with pytest.raises(DomainError):
            torsion_minors(t, 4.0, 6.0)
