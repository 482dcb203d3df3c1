import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gl_voronoi.quadrature import integrate_smooth
from gl_voronoi.weights import (MAX_ENVELOPE_ORDER, BumpFunction, MellinCache,
                                combined_decay_envelope, eval_bump, mellin,
                                mellin_decay_envelope, mellin_on_line, mollifier,
                                mollifier_derivatives, sharpened_bump, standard_bump)

# 1e6-point midpoint sum of the standard bump over [1, 2]
BUMP_INTEGRAL = 0.6034501612189379


class TestBump:
    def test_outside_support(self):
        assert eval_bump(standard_bump(), 0.5) == 0.0
        assert eval_bump(standard_bump(), 2.0) == 0.0

    def test_plateau(self):
        assert eval_bump(sharpened_bump(10.0), 1.5) == 1.0
        x = np.linspace(1.0, 2.0, 101)
        assert np.all(sharpened_bump(10.0)(x) == 1.0)

    def test_midpoint_peak_and_symmetry(self):
        b = BumpFunction(1.0, 3.0)
        assert eval_bump(b, 2.0) == pytest.approx(1.0, abs=1e-15)
        u = np.linspace(0.0, 1.0, 37)
        assert np.allclose(b(2.0 - u), b(2.0 + u), rtol=0, atol=1e-15)

    def test_values_in_unit_interval(self):
        for b in (standard_bump(), sharpened_bump(5.0), sharpened_bump(1e3)):
            v = b(np.linspace(0, 3, 3001))
            assert np.all((v >= 0) & (v <= 1))

    def test_sharpened_support(self):
        b = sharpened_bump(10.0)
        assert b.support == pytest.approx((0.9, 2.1))
        assert b(0.9) == 0 and b(2.1) == 0 and 0 < b(0.95) < 1

    def test_sharp_limit(self):
        d = 1e3
        b = sharpened_bump(d)
        x = np.linspace(0.0, 3.0, 30001)
        ind = ((x >= 1) & (x <= 2)).astype(float)
        ramps = ((x >= 1 - 1 / d) & (x <= 1)) | ((x >= 2) & (x <= 2 + 1 / d))
        assert np.all(b(x)[~ramps] == ind[~ramps])

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            BumpFunction(2.0, 1.0)
        with pytest.raises(ValueError):
            BumpFunction(kind="sharpened", delta=0.5)
        with pytest.raises(ValueError):
            BumpFunction(delta=3.0)
        with pytest.raises(ValueError):
            BumpFunction(kind="tent")

    def test_zero_amplitude(self):
        b = BumpFunction(amplitude=0.0)
        assert b.is_zero and b(1.5) == 0.0

    def test_central_differences_converge_at_second_order(self):
        for b in (standard_bump(), sharpened_bump(4.0)):
            lo, hi = b.support
            x = np.linspace(lo, hi, 52)[1:-1]
            exact = b.derivatives(x, 1)[1]
            e1 = np.abs((b(x + 1e-3) - b(x - 1e-3)) / 2e-3 - exact)
            e2 = np.abs((b(x + 5e-4) - b(x - 5e-4)) / 1e-3 - exact)
            big = e1 > 1e-9
            assert np.all(e2[big] / e1[big] < 0.3)

    def test_derivatives_match_finite_differences(self):
        b = standard_bump()
        x = np.linspace(1.05, 1.95, 19)
        d = b.derivatives(x, 3)
        h = 1e-4
        fd2 = (b(x + h) - 2 * b(x) + b(x - h)) / h ** 2
        assert np.allclose(d[2], fd2, rtol=1e-5, atol=1e-5)

    def test_mollifier_derivative_recurrence(self):
        u = np.linspace(0.1, 0.9, 9)
        d = mollifier_derivatives(u, 2)
        h = 1e-5
        assert np.allclose(d[1], (mollifier(u + h) - mollifier(u - h)) / (2 * h), rtol=1e-7)


class TestMellin:
    def test_zero_bump(self):
        assert mellin(BumpFunction(amplitude=0.0), 10.0, 1 + 2j) == 0

    def test_scaling(self):
        b = standard_bump()
        s = 1 + 1j
        assert mellin(b, 100.0, s) / mellin(b, 1.0, s) == pytest.approx(100.0 ** s, rel=1e-12)

    def test_s_equal_one_is_the_integral(self):
        assert mellin(standard_bump(), 1.0, 1.0).real == pytest.approx(BUMP_INTEGRAL, rel=1e-11)

    def test_against_adaptive_quadrature(self):
        b = sharpened_bump(6.0)
        s = 0.3 + 17j
        lo, hi = b.support
        ref = integrate_smooth(lambda y: b(y) * y ** (s - 1), lo, hi, tol=1e-14).value
        assert abs(mellin(b, 1.0, s) - ref) < 1e-11

    def test_chirp_z_line_agrees_with_direct(self):
        b = standard_bump()
        t = 0.5 * np.arange(200) - 30.0
        line = mellin_on_line(b, 7.0, 0.2, -30.0, 0.5, 200)
        direct = mellin(b, 7.0, 0.2 + 1j * t)
        assert np.max(np.abs(line - direct)) < 1e-11

    def test_cache(self):
        c = MellinCache(standard_bump(), 3.0)
        v = c(0.5 + 2j)
        assert c(0.5 + 2j) == v and len(c) == 1
        assert v == mellin(standard_bump(), 3.0, 0.5 + 2j)

    def test_cache_concurrent_writes(self):
        c = MellinCache(standard_bump(), 3.0)
        pts = [0.1 * k + 1j for k in range(20)]
        threads = [threading.Thread(target=lambda: [c(p) for p in pts]) for _ in range(4)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
        assert len(c) == 20
        assert all(c(p) == mellin(standard_bump(), 3.0, p) for p in pts)


class TestEnvelope:
    def test_order_zero_is_the_absolute_moment(self):
        b = standard_bump()
        env = mellin_decay_envelope(b, 5.0, 0.3, 0)
        c0 = integrate_smooth(lambda y: b(y) * y ** (0.3 - 1), 1, 2, tol=1e-14).value.real
        assert env(123.0) == pytest.approx(c0 * 5.0 ** 0.3, rel=1e-10)

    def test_order_two_dominates(self):
        b = standard_bump()
        env = mellin_decay_envelope(b, 10.0, 0.5, 2)
        for t in (10.0, 100.0):
            assert abs(mellin(b, 10.0, 0.5 + 1j * t)) <= env(t)

    @pytest.mark.parametrize("j", range(0, 9))
    def test_dominates_on_a_line(self, j):
        b = standard_bump()
        env = mellin_decay_envelope(b, 2.0, -0.3, j)
        t = np.linspace(-300, 300, 100)
        assert np.all(np.abs(mellin(b, 2.0, -0.3 + 1j * t)) <= env(np.abs(t)))

    def test_sharpened_constant_grows_like_delta_power(self):
        j = 3
        c = [mellin_decay_envelope(sharpened_bump(d), 1.0, 0.5, j).constant for d in (10.0, 20.0, 40.0)]
        r1, r2 = c[1] / c[0], c[2] / c[1]
        # ramp derivatives scale as delta^j times ramp width delta^-1
        assert r1 == pytest.approx(2.0 ** (j - 1), rel=0.1)
        assert r2 == pytest.approx(2.0 ** (j - 1), rel=0.1)

    def test_order_guard(self):
        with pytest.raises(ValueError):
            mellin_decay_envelope(standard_bump(), 1.0, 0.5, MAX_ENVELOPE_ORDER + 1)

    def test_combined_envelope_is_pointwise_minimum(self):
        b = standard_bump()
        comb = combined_decay_envelope(b, 1.0, 0.4)
        t = np.array([0.0, 5.0, 50.0, 500.0])
        parts = np.array([mellin_decay_envelope(b, 1.0, 0.4, j)(t) for j in range(MAX_ENVELOPE_ORDER + 1)])
        assert np.allclose(comb(t), parts.min(axis=0))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(-0.9, 0.9), st.floats(-200, 200))
def test_mellin_under_envelope(a_width, sigma, t):
    b = BumpFunction(1.0, 1.0 + a_width)
    env = combined_decay_envelope(b, 1.0, sigma, 8)
    assert abs(mellin(b, 1.0, sigma + 1j * t)) <= env(abs(t)) * (1 + 1e-9)
