import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from gl_voronoi.errors import PoleError
from gl_voronoi.special_functions import (MAX_BESSEL_ORDER, bessel_j, bessel_j_neg_half,
                                          bessel_j_series, e_of, gamma, log_gamma)


class TestLogGamma:
    @pytest.mark.parametrize("z, expected", [
        (1.0, 0.0),
        (0.5, math.log(math.sqrt(math.pi))),
        (4.0, math.log(6.0)),
    ])
    def test_known_values(self, z, expected):
        assert abs(log_gamma(z) - expected) < 1e-14

    def test_matches_mpmath_principal_branch(self):
        rng = np.random.default_rng(1)
        z = rng.uniform(-30, 30, 200) + 1j * rng.uniform(-60, 60, 200)
        ours = log_gamma(z)
        ref = np.array([complex(mp.loggamma(complex(v))) for v in z])
        assert np.max(np.abs(ours - ref)) < 1e-11

    def test_vectorized_matches_scalar(self):
        z = np.array([0.3 + 2j, 7.5 - 40j, -3.5 + 0.25j])
        assert np.allclose(log_gamma(z), [log_gamma(v) for v in z], rtol=0, atol=0)

    @pytest.mark.parametrize("z", [0.0, -1.0, -7.0, -3.0 + 1e-13])
    def test_poles_raise(self, z):
        with pytest.raises(PoleError):
            log_gamma(z)

    def test_near_pole_but_outside_guard(self):
        z = -2.0 + 1e-6
        assert np.isfinite(log_gamma(z))


def _away_from_poles(z):
    return min(abs(z - k) for k in range(-60, 1)) >= 0.1


complex_points = st.builds(
    complex,
    st.floats(-50, 50, allow_nan=False),
    st.floats(-50, 50, allow_nan=False),
).filter(lambda z: abs(z) <= 50 and _away_from_poles(z) and _away_from_poles(z + 1))


@settings(max_examples=300, deadline=None)
@given(complex_points)
def test_gamma_recurrence(z):
    lhs = log_gamma(z + 1)
    rhs = np.log(z) + log_gamma(z)
    # compare values modulo the 2 pi i branch offset
    d = lhs - rhs
    d -= 2j * math.pi * round(d.imag / (2 * math.pi))
    assert abs(d) < 1e-10


@settings(max_examples=300, deadline=None)
@given(st.floats(-20, 20, allow_nan=False), st.floats(-3, 3, allow_nan=False))
def test_gamma_reflection(x, y):
    z = complex(x, y)
    if min(abs(z - k) for k in range(-25, 26)) < 0.1:
        return
    val = gamma(z) * gamma(1 - z) * np.sin(np.pi * z) / np.pi
    assert abs(val - 1) < 1e-10


class TestBessel:
    def test_order_zero_at_origin(self):
        assert bessel_j(0.0, 1e-12) == pytest.approx(1.0, abs=1e-15)

    def test_minus_half_at_pi(self):
        assert bessel_j(-0.5, math.pi) == pytest.approx(-math.sqrt(2) / math.pi, rel=1e-13)

    def test_minus_three_halves_closed_form_matches_series(self):
        # mpmath value of J_{-3/2}(1)
        ref = -1.10249557516017916993688497934
        assert bessel_j_neg_half(1, 1.0) == pytest.approx(ref, rel=1e-13)
        series, _ = bessel_j_series(-1.5, 1.0)
        assert series == pytest.approx(ref, rel=1e-13)

    @pytest.mark.parametrize("z", np.linspace(1, 50, 50))
    def test_minus_half_closed_form(self, z):
        ref = math.sqrt(2 / (math.pi * z)) * math.cos(z)
        assert abs(bessel_j(-0.5, z) - ref) <= 1e-10 * max(abs(ref), 1e-300) + 1e-15

    @staticmethod
    def _series_50_digits(nu, z):
        # the defining power series summed in 50-digit arithmetic; in double
        # precision its terms cancel by ~e^z at z = 50
        with mp.workdps(50):
            half = mp.mpf(z) / 2
            total = mp.mpf(0)
            for k in range(200):
                total += (-1) ** k * half ** (2 * k + nu) / (mp.factorial(k) * mp.gamma(k + nu + 1))
            return float(total)

    @pytest.mark.parametrize("q", [1, 2, 3])
    def test_half_integer_closed_form_against_series(self, q):
        for z in np.linspace(5, 50, 19):
            closed = bessel_j_neg_half(q, z)
            series = self._series_50_digits(-(q + 0.5), z)
            assert abs(closed - series) <= 1e-8 * abs(series)

    def test_double_precision_series_reports_its_own_error(self):
        value, err = bessel_j_series(-1.5, 22.5)
        assert abs(value - self._series_50_digits(-1.5, 22.5)) <= err

    def test_random_against_scipy(self):
        rng = np.random.default_rng(7)
        nus = rng.uniform(-30, 30, 3000)
        zs = np.exp(rng.uniform(np.log(1e-2), np.log(1e4), 3000))
        for nu, z in zip(nus, zs):
            ref = special.jv(nu, z)
            scale = max(abs(ref), math.sqrt(2 / (math.pi * z)) if z >= abs(nu) else abs(ref))
            if scale < 1e-250:
                continue
            assert abs(bessel_j(nu, z) - ref) <= 1e-9 * scale, (nu, z)

    def test_integer_negative_order_symmetry(self):
        for n in range(1, 8):
            assert bessel_j(-n, 13.7) == pytest.approx((-1) ** n * bessel_j(n, 13.7), rel=1e-11)

    def test_order_guard(self):
        with pytest.raises(ValueError):
            bessel_j(MAX_BESSEL_ORDER + 1, 3.0)

    def test_crossover_is_respected(self):
        a = bessel_j(2.3, 20.0)
        b = bessel_j(2.3, 20.0, crossover=30.0)
        assert a == pytest.approx(b, rel=1e-10)

    def test_nonpositive_argument_rejected(self):
        with pytest.raises(ValueError):
            bessel_j(1.0, 0.0)


class TestE:
    def test_roots_of_unity(self):
        assert e_of(0.0) == 1
        assert abs(e_of(0.5) + 1) < 1e-15
        assert abs(e_of(1 / 3) - complex(-0.5, math.sqrt(3) / 2)) < 1e-15

    @settings(max_examples=200, deadline=None)
    @given(st.floats(-1e6, 1e6, allow_nan=False))
    def test_unit_modulus_and_period(self, x):
        v = e_of(x)
        assert abs(abs(v) - 1) < 1e-15
        assert abs(e_of(x + 1) - v) < 1e-9 * max(1.0, abs(x)) * 1e-4 + 1e-14
