import math

import numpy as np
import pytest
import scipy.special
from hypothesis import given
from hypothesis import strategies as st

from abflux import special_functions as sf
from abflux.errors import ConvergenceError, DomainError, NearIntegerOrderError


def j_half(z):
    return math.sqrt(2.0 / (math.pi * z)) * math.sin(z)


def j_three_half(z):
    return math.sqrt(2.0 / (math.pi * z)) * (math.sin(z) / z - math.cos(z))


def h1_half(z):
    return -1j * math.sqrt(2.0 / (math.pi * z)) * np.exp(1j * z)


def series_j(nu, z, terms=80):
    """Independent brute-force partial sum (test oracle)."""
    acc = 0.0j
    for k in range(terms):
        acc += (-(z * z) / 4.0) ** k / math.factorial(k) * sf.recip_gamma(nu + k + 1.0)
    return (z / 2.0) ** nu * acc


def series_j_prime(nu, z, terms=80):
    """Termwise-differentiated series for J_nu'(z) (test oracle)."""
    acc = 0.0
    for k in range(terms):
        c = (-1.0) ** k / math.factorial(k) * sf.recip_gamma(nu + k + 1.0)
        acc += c * (nu + 2 * k) * (z / 2.0) ** (nu + 2 * k - 1) * 0.5
    return acc


class TestGamma:
    def test_classical_values(self):
        assert sf.gamma_fn(1.0) == pytest.approx(1.0, rel=1e-14)
        assert sf.gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)

    def test_recurrence_value(self):
        # Gamma(4.5) = 3.5*2.5*1.5*0.5*sqrt(pi), frozen from the recurrence
        assert sf.gamma_fn(4.5) == pytest.approx(11.631728396567448, rel=1e-13)

    def test_reflection_identity(self):
        for nu in np.linspace(0.01, 0.99, 50):
            lhs = sf.gamma_fn(nu) * sf.gamma_fn(1.0 - nu)
            rhs = math.pi / math.sin(math.pi * nu)
            assert abs(lhs - rhs) <= 1e-11 * abs(rhs)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            sf.gamma_fn(0.0)
        with pytest.raises(DomainError):
            sf.gamma_fn(-1.3)

    @given(st.floats(min_value=0.05, max_value=30.0))
    def test_against_stdlib(self, x):
        assert sf.gamma_fn(x) == pytest.approx(math.gamma(x), rel=1e-13)

    def test_recip_gamma_poles(self):
        assert sf.recip_gamma(0.0) == 0.0
        assert sf.recip_gamma(-3.0) == 0.0
        assert sf.recip_gamma(-0.5) == pytest.approx(1.0 / math.gamma(-0.5), rel=1e-13)


class TestBesselJ:
    def test_half_integer_golden(self):
        assert sf.bessel_j(0.5, 1.0) == pytest.approx(j_half(1.0), rel=1e-12)
        assert sf.bessel_j(0.5, 1.0).real == pytest.approx(0.6713967071418031, rel=1e-10)
        assert sf.bessel_j(1.5, 2.0) == pytest.approx(j_three_half(2.0), rel=1e-12)

    def test_zero_argument(self):
        assert sf.bessel_j(0.7, 0.0) == 0.0
        assert sf.bessel_j(0.0, 0.0) == 1.0

    def test_scaled_at_zero(self):
        for nu in (0.25, 0.5, 1.3):
            assert sf.scaled_j(nu, 0.0) == pytest.approx(1.0 / math.gamma(nu + 1.0), rel=1e-14)

    def test_scaled_consistency(self):
        z = 1.0
        assert sf.scaled_j(0.5, z) == pytest.approx(
            sf.bessel_j(0.5, z) / (z / 2.0) ** 0.5, rel=1e-13
        )

    def test_scaled_brute_force(self):
        got = sf.scaled_j(0.25, 0.3)
        want = series_j(0.25, 0.3, terms=20) / (0.3 / 2.0) ** 0.25
        assert abs(got - want) <= 1e-14 * abs(want)

    def test_scaled_even_bitwise(self):
        for z in (0.7, 1.0 + 0.3j, -2.5 + 1j):
            a = sf.scaled_j(0.35, z)
            b = sf.scaled_j(0.35, -z)
            assert a == b

    def test_small_argument_law(self):
        for nu in (0.1, 0.45, 0.9):
            for z in (0.1, 0.05, 0.01):
                ratio = sf.bessel_j(nu, z) / (z / 2.0) ** nu * math.gamma(nu + 1.0)
                assert abs(ratio - 1.0) <= z * z

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            sf.bessel_j(0.5, 31.0)
        with pytest.raises(DomainError):
            sf.bessel_j(-0.5, 1.0)
        with pytest.raises(DomainError):
            sf.bessel_j(0.5, 1.0, eps=1e-16)

    @given(
        st.floats(min_value=0.05, max_value=6.0),
        st.floats(min_value=0.01, max_value=20.0),
    )
    def test_against_scipy(self, nu, z):
        got = sf.bessel_j(nu, z)
        want = scipy.special.jv(nu, z)
        # rounding in the alternating series scales with its largest term
        noise = 5e-15 * math.exp(z) / math.sqrt(2.0 * math.pi * max(z, 0.5))
        assert abs(got.real - want) <= 2e-10 * abs(want) + noise
        assert abs(got.imag) <= 1e-12 * (1.0 + abs(want)) + noise

    def test_complex_argument_against_scipy(self):
        for z in (0.5 + 0.5j, 2.0j, 1.5 - 0.2j):
            got = sf.bessel_j(0.3, z)
            want = scipy.special.jv(0.3, z)
            assert abs(got - want) <= 1e-10 * abs(want)


class TestHankel1:
    def test_half_order_golden(self):
        got = sf.hankel1(0.5, 1.0)
        assert got == pytest.approx(h1_half(1.0), rel=1e-12)

    def test_real_part_is_j(self):
        # for real z and real nu both J terms are real, so Re H1 = J_nu + cot*0...
        # check against the defining combination computed independently
        nu, z = 0.25, 0.1
        jp = series_j(nu, z)
        jm = series_j(-nu, z)
        want = (1 + 1j / math.tan(nu * math.pi)) * jp - 1j / math.sin(nu * math.pi) * jm
        got = sf.hankel1(nu, z)
        assert got == pytest.approx(want, rel=1e-12)
        assert got.real == pytest.approx(jp.real, rel=1e-12)

    def test_near_integer_rejected(self):
        with pytest.raises(NearIntegerOrderError):
            sf.hankel1(1.0 + 5e-9, 1.0)
        with pytest.raises(NearIntegerOrderError):
            sf.hankel1(2.0, 1.0)

    def test_zero_rejected(self):
        with pytest.raises(DomainError):
            sf.hankel1(0.5, 0.0)

    @pytest.mark.parametrize("nu", [0.1, 0.3, 0.5, 0.7, 0.9])
    @pytest.mark.parametrize("z", [0.05, 0.8, 3.0, 10.0])
    def test_against_scipy(self, nu, z):
        got = sf.hankel1(nu, z)
        want = scipy.special.hankel1(nu, z)
        assert abs(got - want) <= 1e-9 * abs(want)


class TestWronskian:
    @pytest.mark.parametrize("nu", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    def test_j_pair_wronskian(self, nu):
        for z in (0.3, 1.7, 5.0, 10.0):
            lhs = sf._bessel_j_signed(nu, z) * series_j_prime(-nu, z) - series_j_prime(
                nu, z
            ) * sf._bessel_j_signed(-nu, z)
            rhs = -2.0 * math.sin(nu * math.pi) / (math.pi * z)
            assert abs(lhs - rhs) <= 1e-9 * abs(rhs)

    def test_hankel_wronskian_cross_check(self):
        # W(J_nu, H1_nu) = 2i/(pi z); independent route to validate hankel1
        nu, z = 0.25, 0.1
        h = 1e-6
        dh = (sf.hankel1(nu, z + h) - sf.hankel1(nu, z - h)) / (2 * h)
        dj = (sf.bessel_j(nu, z + h) - sf.bessel_j(nu, z - h)) / (2 * h)
        w = sf.bessel_j(nu, z) * dh - dj * sf.hankel1(nu, z)
        assert abs(w - 2j / (math.pi * z)) <= 1e-7 * abs(2 / (math.pi * z))


class TestVectorized:
    def test_matches_scalar(self):
        z = np.array([0.1, 0.5, 2.0, 7.0])
        got = sf.scaled_series_array(0.3, z * z)
        for i, zi in enumerate(z):
            assert got[i] == pytest.approx(sf.scaled_j(0.3, zi).real, rel=1e-13)

    def test_complex_matches_scalar(self):
        z = np.array([0.1 + 0.2j, 1.0j, 2.0 - 1.0j])
        got = sf.scaled_series_array(-0.6, z * z)
        for i, zi in enumerate(z):
            want = sf._scaled_j_any(-0.6, zi)
            assert abs(got[i] - want) <= 1e-13 * abs(want)

    def test_domain(self):
        with pytest.raises(DomainError):
            sf.scaled_series_array(0.5, np.array([31.0**2]))


def test_convergence_error_is_raised():
    with pytest.raises((ConvergenceError, DomainError)):
        sf.bessel_j(0.5, 30.0 + 30.0j)
