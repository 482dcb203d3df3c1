"""Twisted coefficient sums and their stationary-phase main terms.

Direct sums ``sum_{n != 0} A(n) e(±alpha |n|^beta) w(|n|)`` are computed
literally from a coefficient table. The predicted main terms come from the
Voronoi expansion. A sum with ``e(+alpha ...)`` picks up the factor
``(-i)^{k+(m-1)/2}`` and the integrals ``I_k(n; -)``; the ``-`` twist is the
complex conjugate.

Kernel sign
-----------
The expansion constants ``c_k`` (with ``c_0 = -1/sqrt(m)``) describe the
contour form of Psi. The summation identity itself pairs the coefficients
with the Mellin-Barnes kernel, which is the negative of that contour form.
The predictors therefore multiply every ``c_k`` by ``DUAL_KERNEL_SIGN = -1``
by default. Pass ``kernel_sign=+1`` to get the constants exactly as printed.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import find_peaks

from .coefficients import CoefficientTable
from .errors import DomainError, PrePostError, RangeError
from .quadrature import OscillatorySpec, integrate_oscillatory, integrate_smooth
from .special_functions import e_of
from .voronoi import ExpansionCoefficients
from .weights import BumpFunction, sharpened_bump

__all__ = [
    "DUAL_KERNEL_SIGN",
    "VALIDITY_EPSILON",
    "DEFAULT_THETA",
    "RAPID_DECAY",
    "RESONANT",
    "SumSpec",
    "ResonancePrediction",
    "ScanRow",
    "ScanResult",
    "smooth_sum",
    "sharp_sum",
    "sharpening_gap_bound",
    "regime",
    "resonance_window",
    "n_alpha",
    "stationary_integral_Ik",
    "predict_theorem12",
    "predict_corollary11",
    "predict_theorem14",
    "predict_window_sum",
    "theorem14_integral",
    "alpha_scan",
    "find_scan_peaks",
]

DUAL_KERNEL_SIGN = -1
VALIDITY_EPSILON = 0.01
DEFAULT_THETA = 5.0 / 14.0
RAPID_DECAY = "RapidDecay"
RESONANT = "Resonant"
_BOUNDARY_SLACK = 1e-12


@dataclass(frozen=True)
class SumSpec:
    """One twisted sum: ``e(sign * alpha |n|^beta)`` against ``weight(|n| / X)``.

    ``weight`` is a :class:`BumpFunction` or the string ``"sharp"`` for the
    cut ``X < |n| <= 2X``.
    """
    alpha: float
    beta: float
    X: float
    sign: int = 1
    weight: BumpFunction | str = field(default_factory=BumpFunction)

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise PrePostError("alpha and beta must be non-negative")
        if not self.X > 1:
            raise PrePostError("X must exceed 1")
        if self.sign not in (1, -1):
            raise PrePostError("sign must be +1 or -1")
        if isinstance(self.weight, str) and self.weight != "sharp":
            raise PrePostError(f"unknown weight {self.weight!r}")

    @classmethod
    def sharpened(cls, alpha, beta, X, delta, sign=1) -> "SumSpec":
        return cls(alpha, beta, X, sign, sharpened_bump(delta))


# ----------------------------------------------------------------------------
# Direct sums
# ----------------------------------------------------------------------------

def _twist(n: np.ndarray, alpha: float, beta: float, sign: int) -> np.ndarray:
    return e_of(sign * alpha * n.astype(float) ** beta)


def smooth_sum(table: CoefficientTable, spec: SumSpec) -> complex:
    """``sum_{n != 0} A(n) e(±alpha |n|^beta) phi(|n|/X)`` by direct summation.

    Both signs of ``n`` are folded using the table's ``negative_sign``.
    """
    if isinstance(spec.weight, str):
        return sharp_sum(table, spec.alpha, spec.beta, spec.X, spec.sign)
    lo, hi = spec.weight.support
    n_lo = max(1, int(math.floor(lo * spec.X)))
    n_hi = int(math.ceil(hi * spec.X))
    if n_hi > table.N:
        raise RangeError(f"weight support reaches n={n_hi} beyond table size {table.N}")
    n = np.arange(n_lo, n_hi + 1)
    w = spec.weight(n / spec.X)
    terms = table.values[n] * w * _twist(n, spec.alpha, spec.beta, spec.sign)
    return complex((1 + table.negative_sign) * np.sum(terms))


def sharp_sum(table: CoefficientTable, alpha: float, beta: float, X: float, sign: int = 1) -> complex:
    """``sum_{X < |n| <= 2X} A(n) e(±alpha |n|^beta)``."""
    n_lo = int(math.floor(X)) + 1
    n_hi = int(math.floor(2 * X))
    if n_hi > table.N:
        raise RangeError(f"2X = {2 * X} exceeds table size {table.N}")
    if n_hi < n_lo:
        return 0j
    n = np.arange(n_lo, n_hi + 1)
    terms = table.values[n] * _twist(n, alpha, beta, sign)
    return complex((1 + table.negative_sign) * np.sum(terms))


def sharpening_gap_bound(table: CoefficientTable, X: float, delta: float) -> float:
    """Crude bound on ``|sharp_sum - smooth_sum(sharpened delta)|``.

    The two weights differ only on the strips ``[X - X/delta, X]`` and
    ``(2X, 2X + X/delta]``, where they differ by at most 1. The bound is the
    number of terms there (both signs of n) times the largest ``|A(n)|``.
    """
    w = X / delta
    strips = [np.arange(max(1, math.ceil(X - w)), math.floor(X) + 1),
              np.arange(math.floor(2 * X) + 1, math.floor(2 * X + w) + 1)]
    n = np.concatenate(strips)
    if n.size == 0:
        return 0.0
    if n[-1] > table.N:
        raise RangeError("sharpening strips exceed the table")
    return float(2 * n.size * np.max(np.abs(table.values[n])))


# ----------------------------------------------------------------------------
# Regimes and windows
# ----------------------------------------------------------------------------

def _regime_lhs(alpha: float, beta: float, m: int) -> float:
    if alpha == 0 or beta == 0:
        return 0.0
    return 2.0 * max(1.0, 2.0 ** (beta - 1.0 / m)) * (alpha * beta) ** m


def regime(alpha: float, beta: float, X: float, m: int) -> str:
    """RapidDecay iff ``2 max{1, 2^{beta-1/m}} (alpha beta)^m <= X^{1 - beta m}``.

    The comparison allows a relative 1e-12 so that boundary cases such as
    ``alpha = m 2^{-1/m}`` at ``beta = 1/m`` (exact equality) stay inclusive.
    """
    rhs = X ** (1.0 - beta * m)
    return RAPID_DECAY if _regime_lhs(alpha, beta, m) <= rhs * (1.0 + _BOUNDARY_SLACK) else RESONANT


def resonance_window(alpha: float, beta: float, X: float, m: int) -> tuple[float, float]:
    """``(n0, n1)`` with
    ``n0 = min{1, 2^{beta-1/m}} (alpha beta X^beta)^m / (2X)`` and
    ``n1 = 2 max{1, 2^{beta-1/m}} (alpha beta X^beta)^m / X``.
    """
    if alpha == 0 or beta == 0:
        return (0.0, 0.0)
    core = (alpha * beta * X ** beta) ** m / X
    factor = 2.0 ** (beta - 1.0 / m)
    return (0.5 * min(1.0, factor) * core, 2.0 * max(1.0, factor) * core)


def n_alpha(alpha: float, m: int) -> int:
    """The integer with ``(alpha/m)^m - n in (-1/2, 1/2]``."""
    v = (alpha / m) ** m
    if not v > 0.5:
        raise DomainError(f"(alpha/m)^m = {v} <= 1/2 has no positive n_alpha")
    n = math.ceil(v - 0.5)
    # guard the half-open bracket against rounding of v
    if v - n > 0.5:
        n += 1
    elif v - n <= -0.5:
        n -= 1
    return int(n)


# ----------------------------------------------------------------------------
# Stationary-phase integrals
# ----------------------------------------------------------------------------

def stationary_integral_Ik(n: int, k: int, spec: SumSpec, m: int, pm: int = -1,
                           tol: float = 1e-10) -> complex:
    """``I_k(n; ±) = ∫ t^{m/2-k-1/2} phi(t^m) e(alpha X^beta t^{m beta} ± m (nX)^{1/m} t) dt``."""
    weight = spec.weight
    if isinstance(weight, str):
        raise PrePostError("I_k needs a smooth weight")
    if weight.is_zero:
        return 0j
    lo, hi = weight.support
    a, b = lo ** (1.0 / m), hi ** (1.0 / m)
    ax = spec.alpha * spec.X ** spec.beta
    lin = pm * m * (n * spec.X) ** (1.0 / m)
    mb = m * spec.beta
    ispec = OscillatorySpec(
        amplitude=lambda t: t ** (m / 2.0 - k - 0.5) * weight(t ** m),
        phase=lambda t: ax * t ** mb + lin * t,
        phase_derivative=lambda t: ax * mb * t ** (mb - 1.0) + lin,
        a=a, b=b, tol=tol,
    )
    return integrate_oscillatory(ispec).value


def _moment(weight: BumpFunction, power: float) -> float:
    """∫ x^power phi(x) dx."""
    lo, hi = weight.support
    return integrate_smooth(lambda x: x ** power * weight(x), lo, hi, tol=1e-14).value.real


# ----------------------------------------------------------------------------
# Predictions
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ResonancePrediction:
    n_alpha: int
    main_term: complex
    per_k_terms: tuple
    error_scale: float
    regime: str
    valid: bool = True
    kernel_sign: int = DUAL_KERNEL_SIGN
    note: str = ""

    def __post_init__(self):
        if not self.error_scale > 0:
            raise ValueError("error_scale must be positive")


def _coefficients(coeffs: ExpansionCoefficients | None, m: int, r: int | None):
    if coeffs is None:
        coeffs = ExpansionCoefficients.analytic_leading(m)
    if coeffs.m != m:
        raise PrePostError("coefficient m does not match")
    c = list(coeffs.c)
    if r is not None:
        if r > len(c) - 1:
            raise PrePostError(f"r={r} needs {r + 1} coefficients, have {len(c)}")
        c = c[: r + 1]
    return c


def _conj_pair(plus_terms: list[complex], sign: int) -> list[complex]:
    return plus_terms if sign > 0 else [complex(np.conj(v)) for v in plus_terms]


def predict_theorem12(table: CoefficientTable, alpha: float, X: float, m: int,
                      r: int | None = None, coeffs: ExpansionCoefficients | None = None,
                      *, weight: BumpFunction | None = None, sign: int = 1,
                      kernel_sign: int = DUAL_KERNEL_SIGN) -> ResonancePrediction:
    """Main term ``m (A(n_a) + A(-n_a)) sum_k rho_±(k) X^{1/(2m)+1/2-k/m}`` at ``beta = 1/m``.

    ``rho_+(k) = (-i)^{k+(m-1)/2} c~_k n_a^{1/(2m)-1/2-k/m} I_k(n_a; -)``.
    The ``-`` twist is the conjugate of the ``+`` prediction made with
    ``conj(c~_k)``.
    """
    weight = weight or BumpFunction()
    beta = 1.0 / m
    n_a = n_alpha(alpha, m)
    c = _coefficients(coeffs, m, r)
    reg = regime(alpha, beta, X, m)
    sym = table.symmetric(n_a)
    spec = SumSpec(alpha, beta, X, 1, weight)
    terms = []
    for k, ck in enumerate(c):
        ct = kernel_sign * (ck if sign > 0 else np.conj(ck))
        p = k + (m - 1) / 2.0
        rho = (-1j) ** p * ct * n_a ** (1.0 / (2 * m) - 0.5 - k / m) * \
            stationary_integral_Ik(n_a, k, spec, m, -1)
        terms.append(m * sym * rho * X ** (1.0 / (2 * m) + 0.5 - k / m))
    terms = _conj_pair(terms, sign)
    rr = len(c) - 1
    valid = X > alpha ** (m * (m - 1) / (1.0 - m * VALIDITY_EPSILON))
    return ResonancePrediction(n_a, complex(sum(terms)), tuple(terms),
                               X ** (-rr / m + 0.5 + VALIDITY_EPSILON), reg, bool(valid), kernel_sign)


def predict_corollary11(table: CoefficientTable, q: int, X: float, m: int,
                        r: int | None = None, coeffs: ExpansionCoefficients | None = None,
                        *, weight: BumpFunction | None = None, sign: int = 1,
                        kernel_sign: int = DUAL_KERNEL_SIGN) -> ResonancePrediction:
    """Main term at ``alpha = m q^{1/m}``:
    ``(A(q) + A(-q)) sum_k omega_±(k) X^{1/(2m)+1/2-k/m}`` with
    ``omega_±(k) = (∓i)^{k+(m-1)/2} c~_k q^{a_k} ∫ x^{a_k} phi(x) dx``
    and ``a_k = 1/(2m) - 1/2 - k/m``.
    """
    weight = weight or BumpFunction()
    if q < 1:
        raise PrePostError("q must be a positive integer")
    c = _coefficients(coeffs, m, r)
    sym = table.symmetric(q)
    terms = []
    for k, ck in enumerate(c):
        a_k = 1.0 / (2 * m) - 0.5 - k / m
        p = k + (m - 1) / 2.0
        ct = kernel_sign * ck
        omega = (-1j) ** p * ct * q ** a_k * _moment(weight, a_k)
        terms.append(sym * omega * X ** (1.0 / (2 * m) + 0.5 - k / m))
    terms = _conj_pair(terms, sign)
    rr = len(c) - 1
    alpha = m * q ** (1.0 / m)
    valid = X > (m ** m * q) ** ((m - 1) / (1.0 - m * VALIDITY_EPSILON))
    return ResonancePrediction(q, complex(sum(terms)), tuple(terms),
                               X ** (-rr / m + 0.5 + VALIDITY_EPSILON),
                               regime(alpha, 1.0 / m, X, m), bool(valid), kernel_sign)


def theorem14_integral(alpha: float, X: float, m: int) -> complex:
    """``I(m, alpha, X) = ∫_1^{2^{1/m}} t^{m/2-1/2} e((alpha - m n_a^{1/m}) X^{1/m} t) dt``."""
    n_a = n_alpha(alpha, m)
    freq = (alpha - m * n_a ** (1.0 / m)) * X ** (1.0 / m)
    spec = OscillatorySpec(
        amplitude=lambda t: t ** (m / 2.0 - 0.5),
        phase=lambda t: freq * t,
        phase_derivative=lambda t: freq + 0.0 * t,
        a=1.0, b=2.0 ** (1.0 / m), tol=1e-12,
    )
    return integrate_oscillatory(spec).value


def predict_theorem14(table: CoefficientTable, alpha: float, X: float, m: int,
                      *, theta: float = DEFAULT_THETA, sign: int = 1,
                      kernel_sign: int = DUAL_KERNEL_SIGN) -> ResonancePrediction:
    """Sharp-cut main term
    ``-sqrt(m) X^{1/(2m)+1/2} (-i)^{(m-1)/2} I(m, alpha, X) (A(n_a) + A(-n_a)) / n_a^{1/2-1/(2m)}``.

    The leading ``-sqrt(m)`` is ``m c_0`` and takes the kernel sign.
    ``error_scale = alpha^{m-1/2} X^{1/2-1/(2m)} + X^{(m-1)(1+theta)/(m+1)}``.
    """
    n_a = n_alpha(alpha, m)
    sym = table.symmetric(n_a)
    main = kernel_sign * (-math.sqrt(m)) * X ** (1.0 / (2 * m) + 0.5) * (-1j) ** ((m - 1) / 2.0) \
        * theorem14_integral(alpha, X, m) * sym / n_a ** (0.5 - 1.0 / (2 * m))
    if sign < 0:
        main = np.conj(main)
    err = alpha ** (m - 0.5) * X ** (0.5 - 1.0 / (2 * m)) + X ** ((m - 1) * (1 + theta) / (m + 1))
    return ResonancePrediction(n_a, complex(main), (complex(main),), float(err),
                               regime(alpha, 1.0 / m, X, m), True, kernel_sign,
                               f"theta={theta!r} used for error_scale only")


def predict_window_sum(table: CoefficientTable, spec: SumSpec, m: int,
                       coeffs: ExpansionCoefficients | None = None, r: int | None = None,
                       *, kernel_sign: int = DUAL_KERNEL_SIGN) -> ResonancePrediction:
    """Main term over the stationary window for general ``beta``:
    ``m sum_k c~_k (-i)^{k+(m-1)/2} X^{1/(2m)+1/2-k/m}
    sum_{n0 < n < n1} (A(n) + A(-n)) n^{-(1/2 + k/m - 1/(2m))} I_k(n; -)``.
    """
    if isinstance(spec.weight, str):
        raise PrePostError("window decomposition needs a smooth weight")
    c = _coefficients(coeffs, m, r)
    n0, n1 = resonance_window(spec.alpha, spec.beta, spec.X, m)
    ns = [n for n in range(max(1, math.floor(n0) + 1), math.ceil(n1)) if n0 < n < n1]
    if ns and ns[-1] > table.N:
        raise RangeError("resonance window exceeds the table")
    plus = SumSpec(spec.alpha, spec.beta, spec.X, 1, spec.weight)
    terms = []
    for k, ck in enumerate(c):
        ct = kernel_sign * (ck if spec.sign > 0 else np.conj(ck))
        inner = sum(table.symmetric(n) * n ** (-(0.5 + k / m - 1.0 / (2 * m)))
                    * stationary_integral_Ik(n, k, plus, m, -1) for n in ns)
        terms.append(m * ct * (-1j) ** (k + (m - 1) / 2.0)
                     * spec.X ** (1.0 / (2 * m) + 0.5 - k / m) * inner)
    terms = _conj_pair([complex(t) for t in terms], spec.sign)
    rr = len(c) - 1
    n_rep = ns[0] if ns else 0
    return ResonancePrediction(max(n_rep, 1), complex(sum(terms)), tuple(terms),
                               spec.X ** (-rr / m + 0.5 + VALIDITY_EPSILON),
                               regime(spec.alpha, spec.beta, spec.X, m), True, kernel_sign,
                               f"window=({n0!r}, {n1!r}), terms={len(ns)}")


# ----------------------------------------------------------------------------
# Scans
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ScanRow:
    alpha: float
    beta: float
    X: float
    value: complex
    regime: str
    prediction: complex | None
    valid: bool

    @property
    def abs_sum(self) -> float:
        return abs(self.value)


@dataclass(frozen=True)
class ScanResult:
    rows: tuple
    peaks: tuple
    peak_rule: str
    negative_sign: int
    automorphic: bool

    CSV_COLUMNS = ("alpha", "beta", "X", "re_sum", "im_sum", "abs_sum", "regime",
                   "re_pred", "im_pred", "validity_flag")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.CSV_COLUMNS)
            for r in self.rows:
                pred = r.prediction
                w.writerow([_fmt(r.alpha), _fmt(r.beta), _fmt(r.X), _fmt(r.value.real),
                            _fmt(r.value.imag), _fmt(abs(r.value)), r.regime,
                            "" if pred is None else _fmt(pred.real),
                            "" if pred is None else _fmt(pred.imag), int(r.valid)])

    def summary(self) -> dict:
        return {
            "points": len(self.rows),
            "peaks": [_fmt_float(p) for p in self.peaks],
            "peak_rule": self.peak_rule,
            "negative_sign": self.negative_sign,
            "automorphic": self.automorphic,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _fmt_float(x: float) -> float:
    return float(f"{float(x):.17g}")


def find_scan_peaks(values: Sequence[float], rule: str = "prominence", factor: float = 3.0) -> list[int]:
    """Indices of peaks in ``values``.

    ``rule="prominence"``: local maxima at least ``factor`` times the higher
    of the two valleys that bound them (height over prominence base).
    ``rule="median"``: local maxima above ``factor`` times the median.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return []
    idx, props = find_peaks(v, prominence=0.0)
    if rule == "median":
        keep = v[idx] > factor * np.median(v)
    elif rule == "prominence":
        base = v[idx] - props["prominences"]
        keep = v[idx] >= factor * np.maximum(base, 1e-300)
    else:
        raise ValueError(f"unknown peak rule {rule!r}")
    return [int(i) for i in idx[keep]]


def alpha_scan(table: CoefficientTable, alpha_grid: Sequence[float], beta: float, X: float,
               m: int, weight: BumpFunction | str | None = None, *, sign: int = 1,
               peak_rule: str = "prominence", coeffs: ExpansionCoefficients | None = None,
               threads: int = 1, kernel_sign: int = DUAL_KERNEL_SIGN) -> ScanResult:
    """Evaluate the twisted sum over a sorted α grid and locate peaks of |sum|.

    Rows at ``beta = 1/m`` with ``(alpha/m)^m > 1/2`` carry the resonance
    prediction. Rows are assembled in grid order whatever ``threads`` is.
    """
    grid = [float(a) for a in alpha_grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise PrePostError("alpha grid must be sorted ascending")
    weight = BumpFunction() if weight is None else weight
    on_line = abs(beta - 1.0 / m) < 1e-12

    def row(alpha: float) -> ScanRow:
        spec = SumSpec(alpha, beta, X, sign, weight)
        value = smooth_sum(table, spec)
        pred, valid = None, True
        if on_line and not isinstance(weight, str) and (alpha / m) ** m > 0.5:
            p = predict_theorem12(table, alpha, X, m, coeffs=coeffs, weight=weight, sign=sign,
                                  kernel_sign=kernel_sign)
            pred, valid = p.main_term, p.valid
        return ScanRow(alpha, beta, X, value, regime(alpha, beta, X, m), pred, valid)

    if threads > 1 and grid:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, grid))
    else:
        rows = [row(a) for a in grid]
    peaks = find_scan_peaks([r.abs_sum for r in rows], peak_rule)
    return ScanResult(tuple(rows), tuple(grid[i] for i in peaks), peak_rule,
                      table.negative_sign, table.automorphic)
