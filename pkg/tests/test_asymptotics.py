import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icicd.analytic import CoverageCurve, coverage_curve, coverage_icd, coverage_icic
from icicd.asymptotics import (AsymptoticCoefficient, coefficient_table, coeff_a_K, coeff_a_M,
                               coeff_b_K, coeff_b_M, diversity_order_estimate,
                               empirical_reliability_coefficient, faa_di_bruno_coeff,
                               pochhammer_identity)
from icicd.errors import DomainError, InsufficientRangeError
from icicd.specfun import c_kappa

from conftest import A_M_ORACLE, B_K_ORACLE


class TestCoordinationCoefficients:
    """a_K and b_K for K-BS coordination."""

    def test_a_K_values(self):
        assert coeff_a_K(1, 1.0, 0.5) == pytest.approx(1.0)
        assert coeff_a_K(2, 1.0, 0.5) == pytest.approx(2.0 / 3.0)
        assert coeff_a_K(3, 2.0, 0.5) == pytest.approx(6.0 / 12.0 / 2.0)

    @pytest.mark.parametrize("key", sorted(B_K_ORACLE))
    def test_b_K_oracle(self, key):
        K, kappa = key
        assert coeff_b_K(K, kappa, 0.5) == pytest.approx(B_K_ORACLE[key], rel=1e-8)

    def test_b_K_needs_two(self):
        with pytest.raises(DomainError):
            coeff_b_K(1, 1.0, 0.5)

    @pytest.mark.parametrize("K", [1, 2, 4])
    def test_a_K_limit(self, K):
        theta = 1e-5
        outage = 1.0 - coverage_icic(theta, K, 1.5, 0.5) if K > 1 else \
            1.0 - coverage_icd(theta, 1, 0.5, 1.5)
        assert outage / theta == pytest.approx(coeff_a_K(K, 1.5, 0.5), rel=1e-3)

    @pytest.mark.parametrize("K", [2, 3])
    def test_b_K_limit(self, K):
        theta = 1e6
        assert coverage_icic(theta, K, 1.0, 0.5) * theta**0.5 == pytest.approx(
            coeff_b_K(K, 1.0, 0.5), rel=5e-3)


class TestDiversityCoefficients:
    """a_M and b_M for M-RB selection combining."""

    @pytest.mark.parametrize("M", sorted(A_M_ORACLE))
    @pytest.mark.parametrize("method", ["bell", "partition"])
    def test_a_M_oracle(self, M, method):
        assert coeff_a_M(M, 0.5, method) == pytest.approx(A_M_ORACLE[M], rel=1e-12)

    @pytest.mark.parametrize("M", [1, 3, 5])
    def test_a_M_finite_difference(self, M):
        assert coeff_a_M(M, 0.5, "finite_difference") == pytest.approx(A_M_ORACLE[M], rel=1e-9)

    @settings(max_examples=20, deadline=None)
    @given(M=st.integers(1, 8), d=st.floats(0.1, 0.9))
    def test_a_M_routes_agree(self, M, d):
        assert coeff_a_M(M, d, "bell") == pytest.approx(coeff_a_M(M, d, "partition"), rel=1e-11)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            coeff_a_M(2, 0.5, "spline")

    def test_b_M_closed_forms(self):
        assert coeff_b_M(1, 0.5) == pytest.approx(2.0 / math.pi, rel=1e-14)
        assert coeff_b_M(2, 0.5) == pytest.approx(8.0 / (3.0 * math.pi), rel=1e-14)

    @pytest.mark.parametrize("M", [1, 2, 3])
    def test_b_M_limit(self, M):
        theta = 1e6
        assert coverage_icd(theta, M, 0.5) * theta**0.5 == pytest.approx(coeff_b_M(M, 0.5),
                                                                         rel=1e-3)

    @pytest.mark.parametrize("M", [1, 2, 3])
    def test_a_M_limit(self, M):
        theta = 1e-3
        ratio = (1.0 - coverage_icd(theta, M, 0.5)) / theta**M
        assert ratio == pytest.approx(coeff_a_M(M, 0.5), rel=0.01)


class TestFaaDiBruno:
    """Derivatives of 1 / C_1(x, m) at the origin."""

    @pytest.mark.parametrize("m,expected", [(1, -1.0), (2, -2.0)])
    def test_first_derivative(self, m, expected):
        assert faa_di_bruno_coeff(1, m, 0.5) == pytest.approx(expected)

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_taylor_reconstruction(self, m):
        x = 0.01
        series = 1.0 + sum(faa_di_bruno_coeff(n, m, 0.5) * x**n / math.factorial(n)
                           for n in range(1, 9))
        assert series == pytest.approx(1.0 / c_kappa(x, m, 1.0, 0.5), abs=1e-9)

    @pytest.mark.parametrize("n", [1, 2, 4])
    def test_against_mpmath_derivative(self, n):
        mpmath.mp.dps = 30
        f = lambda x: 1 / mpmath.hyp2f1(2, -0.5, 0.5, -x)
        assert faa_di_bruno_coeff(n, 2, 0.5) == pytest.approx(float(mpmath.diff(f, 0, n)),
                                                               rel=1e-10)

    def test_order_limit(self):
        with pytest.raises(DomainError):
            faa_di_bruno_coeff(13, 1, 0.5)


class TestPochhammerIdentity:
    """Alternating binomial sums of rising factorial products."""

    @settings(max_examples=60, deadline=None)
    @given(M=st.integers(1, 8), k=st.lists(st.integers(0, 4), min_size=1, max_size=4))
    def test_identity(self, M, k):
        if sum(k) < 1:
            return
        value = pochhammer_identity(M, k)
        if sum(k) < M:
            assert value == 0
        elif sum(k) == M:
            assert value == math.factorial(M)

    def test_zero_order(self):
        with pytest.raises(DomainError):
            pochhammer_identity(2, [0, 0])


class TestEstimators:
    """Slope and coefficient estimators on computed curves."""

    @pytest.mark.parametrize("K,M", [(1, 1), (1, 2), (3, 2)])
    def test_slope(self, K, M):
        curve = coverage_curve(np.logspace(-4, -3, 11), K, M, 1.0, 0.5)
        assert diversity_order_estimate(curve) == pytest.approx(M, abs=0.01)

    def test_short_range(self):
        curve = CoverageCurve([1e-4, 5e-4], [0.999, 0.99])
        with pytest.raises(InsufficientRangeError):
            diversity_order_estimate(curve)

    def test_floor(self):
        curve = CoverageCurve([1e-4, 1e-3], [1.0, 1.0])
        with pytest.raises(InsufficientRangeError):
            diversity_order_estimate(curve)

    def test_empirical_coefficient(self):
        coef = empirical_reliability_coefficient(1, 2, 1.0, 0.5)
        assert isinstance(coef, AsymptoticCoefficient) and coef.numerical
        assert coef.value == pytest.approx(coeff_a_M(2, 0.5), rel=0.01)

    def test_coefficient_validation(self):
        with pytest.raises(DomainError):
            AsymptoticCoefficient("low", "K", 1, 1, 1.0, 0.5, 1.0, 1)


class TestTable:
    def test_hr_rows(self):
        rows = coefficient_table([4.0], range(1, 3))
        assert [(r["regime"], r["K_or_M"]) for r in rows] == [
            ("a_K", 1), ("a_M", 1), ("a_K", 2), ("a_M", 2)]

    def test_hse_rows(self):
        rows = coefficient_table([4.0], range(1, 3), regime="hse")
        assert [(r["regime"], r["K_or_M"]) for r in rows] == [
            ("b_M", 1), ("b_K", 2), ("b_M", 2)]
        assert rows[0]["value"] == pytest.approx(2 / math.pi)

    def test_unknown_regime(self):
        with pytest.raises(DomainError):
            coefficient_table([4.0], regime="mid")
