import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gl_voronoi import (CacheError, CapacityError, ConstantSource, DivisibilityError, PrePostError,
                        RangeError, SymPowerSource, SyntheticSource, build_table, cached_table,
                        hyper_kloosterman, kloosterman, rankin_selberg_stat, sym_power_local,
                        tau_table)
from gl_voronoi.coefficients import MAX_N, load_table, save_table


def _poly_mul(a, b, order):
    out = [0] * (order + 1)
    for i, x in enumerate(a[: order + 1]):
        if x:
            for j, y in enumerate(b[: order + 1 - i]):
                out[i + j] += x * y
    return out


def _tau_by_hand(order):
    """q prod (1 - q^j)^24 by plain polynomial multiplication, truncated."""
    poly = [1] + [0] * order
    for j in range(1, order + 1):
        factor = [0] * (order + 1)
        factor[0], factor[j] = 1, -1
        for _ in range(24):
            poly = _poly_mul(poly, factor, order)
    return {n: poly[n - 1] for n in range(1, order + 1)}


def _primes_upto(n):
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.nonzero(sieve)[0].tolist()


def _h_generating(lam, k):
    """h_k(alpha^2, 1, alpha^-2) by summing every monomial of degree k."""
    alpha = complex(lam, math.sqrt(max(0.0, 4 - lam * lam))) / 2
    a2, b2 = alpha ** 2, alpha ** -2
    total = sum(a2 ** i * b2 ** (k - i - j) for i in range(k + 1) for j in range(k + 1 - i))
    return total.real


@pytest.fixture(scope="module")
def hecke():
    return tau_table(10_000)


class TestTau:
    def test_small_values_against_hand_expansion(self):
        ref = _tau_by_hand(8)
        table = tau_table(8)
        assert table.tau[1] == 1
        assert table.tau[2] == -24 and table.tau[3] == 252
        assert [table.tau[n] for n in range(1, 9)] == [ref[n] for n in range(1, 9)]

    def test_multiplicative_example(self, hecke):
        assert hecke.tau[6] == hecke.tau[2] * hecke.tau[3] == -6048

    def test_methods_agree(self):
        assert tau_table(3000, "pentagonal").tau == tau_table(3000, "jacobi").tau

    def test_hecke_recursion_rebuilds_table(self, hecke):
        N = hecke.N
        tau = hecke.tau
        rebuilt = [0, 1] + [1] * (N - 1)
        for p in _primes_upto(N):
            powers = [1, tau[p]]
            while p ** len(powers) <= N:
                powers.append(tau[p] * powers[-1] - p ** 11 * powers[-2])
            for e in range(1, len(powers)):
                pe = p ** e
                for n in range(pe, N + 1, pe):
                    if (n // pe) % p:
                        rebuilt[n] *= powers[e]
        assert rebuilt[1:] == list(tau[1:])

    def test_deligne_bound(self, hecke):
        primes = _primes_upto(1000)
        assert np.all(np.abs(hecke.lam[primes]) <= 2.0)

    def test_lambda_normalization(self, hecke):
        assert hecke.lam[2] == pytest.approx(-24 / 2 ** 5.5, rel=1e-15)
        assert hecke.weight == 12

    def test_capacity_guard(self):
        with pytest.raises(CapacityError):
            tau_table(MAX_N + 1)


class TestSymPowerLocal:
    def test_k_zero(self):
        assert sym_power_local(0.7, 3, 0) == 1.0

    @given(st.floats(-2.0, 2.0))
    def test_first_two_against_generating_function(self, lam):
        x = lam * lam - 1
        assert sym_power_local(lam, 3, 1) == pytest.approx(x, abs=1e-12)
        assert sym_power_local(lam, 3, 2) == pytest.approx(x * x - x, abs=1e-12)
        assert sym_power_local(lam, 3, 2) == pytest.approx(_h_generating(lam, 2), abs=1e-12)

    @settings(max_examples=40)
    @given(st.floats(-2.0, 2.0), st.integers(0, 12))
    def test_matches_monomial_expansion(self, lam, k):
        assert sym_power_local(lam, 3, k) == pytest.approx(_h_generating(lam, k), abs=1e-9 * (k + 1) ** 2)

    @settings(max_examples=60)
    @given(st.floats(-2.0, 2.0))
    def test_order_three_recurrence(self, lam):
        h = [sym_power_local(lam, 3, k) for k in range(31)]
        x = lam * lam - 1
        for k in range(3, 31):
            rhs = x * (h[k - 1] - h[k - 2]) + h[k - 3]
            scale = max(1.0, abs(h[k]), abs(x * h[k - 1]), abs(x * h[k - 2]))
            assert abs(h[k] - rhs) <= 1e-12 * scale

    def test_gl2_case_is_hecke_recursion(self):
        lam = 0.37
        h = [sym_power_local(lam, 2, k) for k in range(6)]
        for k in range(2, 6):
            assert h[k] == pytest.approx(lam * h[k - 1] - h[k - 2], abs=1e-14)

    def test_rejects_out_of_range_lambda(self):
        with pytest.raises(PrePostError):
            sym_power_local(2.1, 3, 1)


class TestBuildTable:
    def test_first_values(self, sym2_table):
        lam2 = -24 / 2 ** 5.5
        assert lam2 == pytest.approx(-0.530330, abs=1e-6)
        assert sym2_table(1) == 1.0
        assert sym2_table(2) == pytest.approx(lam2 ** 2 - 1, rel=1e-14)
        assert sym2_table(4) == pytest.approx(sym_power_local(lam2, 3, 2), rel=1e-14)

    def test_multiplicative_on_coprime_pairs(self, sym2_table):
        rng = np.random.default_rng(5)
        checked = 0
        while checked < 300:
            a, b = (int(v) for v in rng.integers(2, 300, 2))
            if math.gcd(a, b) != 1:
                continue
            assert sym2_table(a * b) == pytest.approx(sym2_table(a) * sym2_table(b), rel=1e-11, abs=1e-13)
            checked += 1

    def test_negative_index_convention(self, sym2_table):
        assert sym2_table(-5) == sym2_table(5)
        flipped = sym2_table.with_negative_sign(-1)
        assert flipped(-5) == -sym2_table(5)
        assert flipped.symmetric(5) == 0.0

    def test_out_of_range_lookup(self, sym2_table):
        with pytest.raises(RangeError):
            sym2_table(sym2_table.N + 1)
        with pytest.raises(RangeError):
            sym2_table(0)

    def test_values_are_read_only(self, sym2_table):
        with pytest.raises(ValueError):
            sym2_table.values[1] = 2.0

    def test_synthetic_is_deterministic(self):
        a = build_table(SyntheticSource(seed=7), 5000)
        b = build_table(SyntheticSource(seed=7), 5000)
        c = build_table(SyntheticSource(seed=8), 5000)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)
        assert not a.automorphic and a.source == "synthetic(seed=7)"

    def test_synthetic_is_bounded_with_unit_mean_square(self):
        t = build_table(SyntheticSource(seed=1), 100_000)
        assert t(1) == 1.0
        assert np.max(np.abs(t.values)) <= math.sqrt(3)
        assert rankin_selberg_stat(t, 1e5) == pytest.approx(1.0, abs=0.02)

    def test_capacity_guard(self):
        with pytest.raises(CapacityError):
            build_table(ConstantSource(), MAX_N + 1)


class TestRankinSelberg:
    @pytest.mark.parametrize("X", [1.0, 10.5, 999.9])
    def test_constant_table(self, X):
        t = build_table(ConstantSource(), 1000)
        assert rankin_selberg_stat(t, X) == pytest.approx(math.floor(X) / X, rel=1e-15)

    def test_first_term(self, sym2_table):
        assert rankin_selberg_stat(sym2_table, 1) == 1.0

    def test_ratio_between_scales(self, sym2_table):
        ratio = rankin_selberg_stat(sym2_table, 1e3) / rankin_selberg_stat(sym2_table, 1e4)
        assert 0.5 <= ratio <= 2.0

    @pytest.mark.parametrize("X", [1e3, 1e4, 1e5])
    def test_bounded(self, sym2_table, X):
        assert 0.05 <= rankin_selberg_stat(sym2_table, X) <= 20

    def test_range(self, sym2_table):
        with pytest.raises(RangeError):
            rankin_selberg_stat(sym2_table, sym2_table.N + 1)


class TestCache:
    def test_round_trip_is_exact(self, tmp_path):
        t = build_table(SymPowerSource(m=3), 500, negative_sign=-1)
        path = save_table(t, tmp_path / "t.csv")
        back = load_table(path)
        assert np.array_equal(back.values, t.values)
        assert (back.source, back.m, back.N, back.negative_sign) == (t.source, 3, 500, -1)

    def test_cached_table_builds_then_reads(self, tmp_path):
        a = cached_table(SymPowerSource(m=3), 300, directory=tmp_path)
        files = list(tmp_path.iterdir())
        assert len(files) == 1
        b = cached_table(SymPowerSource(m=3), 300, directory=tmp_path)
        assert np.array_equal(a.values, b.values)

    def test_environment_directory(self, tmp_path, monkeypatch):
        monkeypatch.setenv("VORONOI_CACHE_DIR", str(tmp_path))
        cached_table(ConstantSource(), 10)
        assert len(list(tmp_path.iterdir())) == 1

    def test_corrupted_body(self, tmp_path):
        path = save_table(build_table(ConstantSource(), 20), tmp_path / "c.csv")
        path.write_text(path.read_text().replace("\n7,1\n", "\n7,2\n"))
        with pytest.raises(CacheError):
            load_table(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("# version=1\nn,A\n1,1\n")
        with pytest.raises(CacheError):
            load_table(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CacheError):
            load_table(tmp_path / "absent.csv")


class TestKloosterman:
    def test_small_moduli(self):
        assert kloosterman(1, 1, 2) == pytest.approx(1.0, abs=1e-12)
        assert kloosterman(1, 1, 3) == pytest.approx(-1.0, abs=1e-12)

    @pytest.mark.parametrize("c", [1, 2, 9, 12, 35])
    def test_zero_arguments_count_units(self, c):
        phi = sum(1 for x in range(c) if math.gcd(x, c) == 1)
        assert kloosterman(0, 0, c) == pytest.approx(phi, abs=1e-9)

    @pytest.mark.parametrize("p", [5, 7, 11, 13])
    def test_weil_bound(self, p):
        for a in range(1, p):
            for b in range(1, p):
                assert abs(kloosterman(a, b, p)) <= 2 * math.sqrt(p) + 1e-12

    @given(st.integers(-50, 50), st.integers(-50, 50), st.integers(1, 40))
    def test_symmetric_in_arguments(self, a, b, c):
        assert kloosterman(a, b, c) == pytest.approx(kloosterman(b, a, c), abs=1e-9)


class TestHyperKloosterman:
    def test_trivial_modulus(self):
        assert hyper_kloosterman(3, 5, (1,), 1) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("p", [5, 7, 11])
    def test_reduces_to_classical(self, p):
        for h in range(1, p):
            for n in (1, 2, p - 1):
                assert hyper_kloosterman(h, n, (1,), p) == pytest.approx(kloosterman(h, n, p), abs=1e-12)

    @pytest.mark.parametrize("h,n", [(1, 1), (1, 2), (3, 4), (2, 7)])
    def test_two_term_example(self, h, n):
        # q = 4, d = (2): only t = 1 mod 2 survives, giving e(h/2) e(n/2)
        assert hyper_kloosterman(h, n, (2,), 4) == pytest.approx((-1) ** (h + n), abs=1e-12)

    def test_nested_sum_matches_direct_enumeration(self):
        h, n, d, q = 2, 3, (1, 1), 5

        def e(x):
            return np.exp(2j * np.pi * x)

        direct = sum(e(h * t1 / 5) * e(pow(t1, -1, 5) * t2 / 5) * e(n * pow(t2, -1, 5) / 5)
                     for t1 in range(1, 5) for t2 in range(1, 5))
        assert hyper_kloosterman(h, n, d, q) == pytest.approx(direct, abs=1e-11)

    def test_broken_chain(self):
        with pytest.raises(DivisibilityError):
            hyper_kloosterman(1, 1, (3,), 4)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            hyper_kloosterman(1, 1, (1,), 1009 * 1013)
