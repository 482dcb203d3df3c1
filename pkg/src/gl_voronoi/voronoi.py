"""The GL(m) Voronoi kernel and the integral transform Psi.

``Psi(x)`` is computed two ways:

* ``psi_contour``: the exact transform as a vertical-line integral
  ``Psi(x) = i pi^{-m/2-1} ∫_{Re s = sigma} (pi^m x)^{1-2s} psi~(1-2s) G(s) ds``
  with ``G(s) = prod_j Gamma(s - conj(mu_j)/2) / Gamma(-s + (1 - mu_j)/2)``.
* ``psi_asymptotic``: the oscillatory expansion
  ``x sum_k c_k ∫ (xy)^{1/(2m)-1/2-k/m} psi(y) {i^p e(m(xy)^{1/m}) + (-i)^p e(-m(xy)^{1/m})} dy``
  with ``p = k + (m-1)/2`` and ``c_0 = -1/sqrt(m)``.

Since ``psi~(s) = X^s phi~(s)`` both depend on ``x`` and ``X`` only through
``xX``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import IllConditionedError, PoleError, PrePostError
from .quadrature import OscillatorySpec, integrate_oscillatory, truncation_height
from .quadrature import _tail_bound  # shared envelope-tail integral
from .special_functions import log_gamma
from .weights import BumpFunction, combined_decay_envelope, mellin_on_line

__all__ = [
    "LanglandsParams",
    "PsiEvaluation",
    "ExpansionCoefficients",
    "kernel_G",
    "stirling_leading_G",
    "psi_contour",
    "psi_contour_many",
    "oscillatory_basis",
    "psi_asymptotic",
    "calibrate_ck",
    "default_sigma",
    "write_psi_csv",
    "ASYMPTOTIC_FLOOR",
    "LEADING_REMAINDER_CONSTANT",
]

ASYMPTOTIC_FLOOR = 10.0
_POLE_GUARD = 1e-10
_COND_LIMIT = 1e12

# Measured max |Psi - main term| / (xX)^{1/2} for r = 0, standard bump on [1, 2],
# xX in [1e2, 1e5], mu = (i/2, 0, -i/2): 1.7e-4 at xX ~ 180, rounded up about 3x.
LEADING_REMAINDER_CONSTANT = 5e-4


# ----------------------------------------------------------------------------
# Parameters
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class LanglandsParams:
    """Archimedean parameters ``mu_f(1..m)`` of a GL(m) cusp form.

    ``strict`` enforces ``sum mu = 0`` and the Luo-Rudnick-Sarnak bound
    ``|Re mu_j| <= 1/2 - 1/(m^2+1)``. Non-strict parameters are allowed for
    forms given in a shifted normalization such as the symmetric-square lift
    of a holomorphic form.
    """
    mu: tuple
    strict: bool = True
    label: str = ""

    def __post_init__(self):
        mu = tuple(complex(v) for v in self.mu)
        object.__setattr__(self, "mu", mu)
        if len(mu) < 3:
            raise PrePostError("need m >= 3 Langlands parameters")
        if self.strict:
            if abs(sum(mu)) > 1e-12:
                raise PrePostError("Langlands parameters must sum to zero")
            bound = 0.5 - 1.0 / (self.m ** 2 + 1)
            if any(abs(v.real) > bound + 1e-15 for v in mu):
                raise PrePostError(f"|Re mu_j| exceeds the bound {bound:.4f}")

    @property
    def m(self) -> int:
        return len(self.mu)

    @property
    def dual_mu(self) -> tuple:
        return tuple(v.conjugate() for v in self.mu)

    def dual(self) -> "LanglandsParams":
        return LanglandsParams(self.dual_mu, self.strict, self.label + "~" if self.label else "")

    @property
    def conjugation_closed(self) -> bool:
        """True when ``{conj mu_j}`` equals ``{mu_j}`` as a multiset."""
        rest = list(self.mu)
        for v in self.dual_mu:
            hit = next((i for i, w in enumerate(rest) if abs(w - v) < 1e-12), None)
            if hit is None:
                return False
            rest.pop(hit)
        return True

    @classmethod
    def tempered_example(cls) -> "LanglandsParams":
        """The m = 3 example ``mu = (i/2, 0, -i/2)``."""
        return cls((0.5j, 0.0, -0.5j), label="mu=(i/2,0,-i/2)")

    @classmethod
    def sym2_lift(cls, weight: int = 12) -> "LanglandsParams":
        """Parameters of the symmetric-square lift of a weight-``weight`` form.

        Its gamma factor is ``Gamma_R(s+1) Gamma_R(s+k-1) Gamma_R(s+k)``, so
        in the convention ``Gamma((s - mu)/2)`` the parameters are
        ``(-1, -(k-1), -k)``. These sum to ``-(2k)`` rather than 0 and are not
        tempered in the unitary normalization, hence ``strict=False``.
        """
        k = weight
        return cls((-1.0, -(k - 1.0), -float(k)), strict=False, label=f"sym2(weight {k})")


def default_sigma(params: LanglandsParams) -> float:
    """0.35, or higher when needed to clear the numerator poles."""
    m = params.m
    lower = 0.25 - 1.0 / (2.0 * (m * m + 1))
    numer = max(v.real for v in params.dual_mu) / 2.0 + 0.05
    return max(0.35, lower + 0.05, numer)


def _check_sigma(sigma: float, params: LanglandsParams) -> None:
    m = params.m
    lower = 0.25 - 1.0 / (2.0 * (m * m + 1))
    if not sigma > lower:
        raise PrePostError(f"sigma={sigma} must exceed {lower:.4f}")
    numer = max(v.real for v in params.dual_mu) / 2.0 + 0.05
    if sigma < numer:
        raise PrePostError(f"sigma={sigma} is within 0.05 of a numerator pole line")


# ----------------------------------------------------------------------------
# Gamma kernels
# ----------------------------------------------------------------------------

def _near_pole(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return (z.real < 0.5) & (np.abs(z - np.round(z.real)) < _POLE_GUARD)


def kernel_G(s, params: LanglandsParams):
    """G(s) = prod_j Gamma(s - conj(mu_j)/2) / Gamma(-s + (1 - mu_j)/2).

    Evaluated in log space. A denominator pole makes the product exactly 0.
    Raises :class:`PoleError` within 1e-10 of a numerator pole.
    """
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    num_args = [s - v / 2.0 for v in params.dual_mu]
    den_args = [-s + (1.0 - v) / 2.0 for v in params.mu]
    if any(np.any(_near_pole(z)) for z in num_args):
        raise PoleError("kernel_G evaluated at a numerator pole")
    zero = np.zeros(s.shape, dtype=bool)
    for z in den_args:
        zero |= _near_pole(z)
    ok = ~zero
    logg = np.zeros(s.shape, dtype=complex)
    for z in num_args:
        logg[ok] += log_gamma(z[ok])
    for z in den_args:
        logg[ok] -= log_gamma(z[ok])
    out = np.where(ok, np.exp(logg), 0.0)
    return out[0] if scalar else out


def stirling_leading_G(s, params: LanglandsParams):
    """Leading Stirling surrogate ``m^{-2ms+m/2} Gamma(ms-(m-1)/2) / Gamma(-ms+1/2)``.

    Diagnostic only: the correction series ``1 + h_1/s + ...`` is dropped.
    """
    m = params.m
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    num = m * s - (m - 1) / 2.0
    den = -m * s + 0.5
    if np.any(_near_pole(num)) or np.any(_near_pole(den)):
        raise PoleError("stirling_leading_G evaluated at a gamma pole")
    out = np.exp((-2.0 * m * s + m / 2.0) * math.log(m) + log_gamma(num) - log_gamma(den))
    return out[0] if scalar else out


# ----------------------------------------------------------------------------
# Psi by contour integration
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class PsiEvaluation:
    x: float
    X: float
    value: complex
    method: str
    error_estimate: float

    def __post_init__(self):
        if not self.error_estimate >= 0:
            raise ValueError("error_estimate must be non-negative")
        if self.method.startswith("asymptotic") and self.x * self.X < 1:
            raise ValueError("asymptotic evaluation needs xX >= 1")

    def row(self) -> dict:
        return {"x": self.x, "X": self.X, "re": self.value.real, "im": self.value.imag,
                "method": self.method, "error_estimate": self.error_estimate}


def write_psi_csv(rows: Iterable[PsiEvaluation], path) -> None:
    """Write evaluations as CSV with columns x, X, re, im, method, error_estimate."""
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["x", "X", "re", "im", "method", "error_estimate"])
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in r.row().items()})


def _contour_envelope(bump: BumpFunction, params: LanglandsParams, sigma: float, xX_max: float):
    """Bound on |integrand| of the contour integral at height t (prefactor included)."""
    m = params.m
    mel = combined_decay_envelope(bump, 1.0, 1.0 - 2.0 * sigma)
    pref = math.pi ** (-m / 2.0 - 1.0) * (math.pi ** m * xX_max) ** (1.0 - 2.0 * sigma)

    def envelope(t):
        t = np.abs(np.asarray(t, dtype=float))
        return pref * mel(2.0 * t) * np.abs(kernel_G(sigma + 1j * t, params))

    return envelope


def psi_contour_many(xs: Sequence[float], bump: BumpFunction, X: float, params: LanglandsParams,
                     sigma: float | None = None, tol: float = 1e-8,
                     *, max_halvings: int = 8) -> list[PsiEvaluation]:
    """Psi at several ``x`` sharing one contour discretization.

    The line is cut at the envelope height ``T`` (two-sided tail below
    ``tol/2``). The trapezoid step starts at 0.1 and is halved until two
    successive steps agree to ``tol/2`` at every ``x``, or until
    the differences stop shrinking. ``psi~`` on the line
    comes from one chirp-z transform per step size.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if np.any(xs <= 0) or not X > 0:
        raise PrePostError("x and X must be positive")
    if sigma is None:
        sigma = default_sigma(params)
    _check_sigma(sigma, params)
    m = params.m
    if bump.is_zero:
        return [PsiEvaluation(float(x), float(X), 0j, "contour", 0.0) for x in xs]

    xX = xs * X
    envelope = _contour_envelope(bump, params, sigma, float(xX.max()))
    # one-sided tail < tol/4 so both tails together stay below tol/2
    T = truncation_height(envelope, 0.5 * tol)
    tail = 2.0 * _tail_bound(envelope, T)
    symmetric = params.conjugation_closed
    log_scale = np.log(math.pi ** m * xX)
    pref = 1j * math.pi ** (-m / 2.0 - 1.0)

    def line_sum(h: float) -> np.ndarray:
        n = int(math.ceil(T / h))
        if symmetric:
            t = h * np.arange(n + 1)
            w = np.full(n + 1, h)
            w[0] = w[-1] = 0.5 * h
        else:
            t = h * np.arange(-n, n + 1)
            w = np.full(2 * n + 1, h)
            w[0] = w[-1] = 0.5 * h
        s = sigma + 1j * t
        # phi~(1 - 2s) on the line Re = 1 - 2 sigma at heights -2t
        mel = mellin_on_line(bump, 1.0, 1.0 - 2.0 * sigma, -2.0 * t[0], -2.0 * h, t.size)
        core = w * mel * kernel_G(s, params)
        out = np.empty(xs.size, dtype=complex)
        for i, ls in enumerate(log_scale):
            f = np.exp((1.0 - 2.0 * sigma) * ls) * np.sum(core * np.exp(-2j * t * ls))
            # ds = i dt
            out[i] = 1j * 2.0 * f.real if symmetric else 1j * f
        return pref * out

    h = 0.1
    prev = line_sum(h)
    best, best_diff = prev, np.full(xs.size, np.inf)
    for _ in range(max_halvings):
        h *= 0.5
        cur = line_sum(h)
        diff = np.abs(cur - prev)
        if diff.max() < best_diff.max():
            best, best_diff = cur, diff
        elif diff.max() > 0.5 * best_diff.max():
            # rounding floor reached: halving further only costs memory
            break
        if np.all(diff <= 0.5 * tol):
            break
        prev = cur
    return [PsiEvaluation(float(x), float(X), complex(v), "contour", float(d + tail))
            for x, v, d in zip(xs, best, best_diff)]


def psi_contour(x: float, bump: BumpFunction, X: float, params: LanglandsParams,
                sigma: float | None = None, tol: float = 1e-8) -> PsiEvaluation:
    """Psi(x) by the vertical-line integral (see :func:`psi_contour_many`)."""
    return psi_contour_many([x], bump, X, params, sigma, tol)[0]


# ----------------------------------------------------------------------------
# Asymptotic expansion
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpansionCoefficients:
    m: int
    c: tuple
    source: str = "calibrated"
    residual: float = float("nan")
    condition: float = float("nan")
    remainder_constant: float = LEADING_REMAINDER_CONSTANT
    fit_points: int = 0

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(complex(v) for v in self.c))
        if self.source not in ("analytic_leading", "calibrated"):
            raise ValueError(f"unknown coefficient source {self.source!r}")
        if self.source == "analytic_leading" and self.c[0] != -1.0 / math.sqrt(self.m):
            raise ValueError("analytic_leading requires c0 = -1/sqrt(m)")

    @property
    def r(self) -> int:
        return len(self.c) - 1

    @classmethod
    def analytic_leading(cls, m: int) -> "ExpansionCoefficients":
        return cls(m, (-1.0 / math.sqrt(m),), "analytic_leading")

    def c0_deviation(self) -> float:
        """|c0 + 1/sqrt(m)| in units of 1/sqrt(m)."""
        return abs(self.c[0] + 1.0 / math.sqrt(self.m)) * math.sqrt(self.m)


def oscillatory_basis(x: float, bump: BumpFunction, X: float, m: int, k: int,
                      tol: float = 1e-11) -> complex:
    """``x ∫ (xy)^{a_k} psi(y) {i^p e(m(xy)^{1/m}) + (-i)^p e(-m(xy)^{1/m})} dy``.

    Here ``a_k = 1/(2m) - 1/2 - k/m`` and ``p = k + (m-1)/2``. With ``y = Xu``
    the second term is the conjugate of the first, so the result is
    ``2 x Re(i^p J)`` with ``J = X ∫ (xXu)^{a_k} phi(u) e(m(xXu)^{1/m}) du``.
    """
    if bump.is_zero:
        return 0j
    xX = x * X
    a_k = 1.0 / (2 * m) - 0.5 - k / m
    lo, hi = bump.support
    root = xX ** (1.0 / m)
    spec = OscillatorySpec(
        amplitude=lambda u: X * (xX * u) ** a_k * bump(u),
        phase=lambda u: m * root * u ** (1.0 / m),
        phase_derivative=lambda u: root * u ** (1.0 / m - 1.0),
        a=lo, b=hi, tol=tol,
    )
    J = integrate_oscillatory(spec).value
    phase = np.exp(0.5j * math.pi * (k + (m - 1) / 2.0))
    return complex(2.0 * x * (phase * J).real)


def psi_asymptotic(x: float, bump: BumpFunction, X: float, params: LanglandsParams,
                   coeffs: ExpansionCoefficients) -> PsiEvaluation:
    """The k <= r main terms of the oscillatory expansion of Psi(x).

    ``error_estimate`` is ``remainder_constant * (xX)^{1/2 - r/m}``.
    """
    if coeffs.m != params.m:
        raise PrePostError("coefficient m does not match the parameters")
    xX = x * X
    if xX < ASYMPTOTIC_FLOOR:
        raise PrePostError(f"asymptotic method needs xX >= {ASYMPTOTIC_FLOOR}")
    m = params.m
    value = sum(c * oscillatory_basis(x, bump, X, m, k) for k, c in enumerate(coeffs.c))
    err = 0.0 if bump.is_zero else coeffs.remainder_constant * xX ** (0.5 - coeffs.r / m)
    return PsiEvaluation(float(x), float(X), complex(value), f"asymptotic({coeffs.r})", err)


def calibrate_ck(params: LanglandsParams, bump: BumpFunction, X: float,
                 x_grid: Sequence[float], r: int, *, fix_c0: bool = False,
                 sigma: float | None = None, tol: float = 1e-8,
                 contour: Sequence[PsiEvaluation] | None = None) -> ExpansionCoefficients:
    """Least-squares fit of ``c_0..c_r`` against contour values of Psi.

    ``fix_c0`` pins ``c_0 = -1/sqrt(m)`` and fits the rest to the residual.
    Raises :class:`IllConditionedError` if the column-normalized Gram matrix
    of the basis has condition number above 1e12.
    """
    xs = np.asarray(list(x_grid), dtype=float)
    m = params.m
    if r < 0:
        raise PrePostError("r must be non-negative")
    if xs.size < 4 * (r + 1):
        raise PrePostError(f"need at least {4 * (r + 1)} grid points for r={r}")
    if np.any(xs * X < 100.0):
        raise PrePostError("calibration grid needs xX >= 100")
    if contour is None:
        contour = psi_contour_many(xs, bump, X, params, sigma, tol)
    target = np.array([p.value for p in contour])
    basis = np.array([[oscillatory_basis(x, bump, X, m, k) for k in range(r + 1)] for x in xs])
    c0 = -1.0 / math.sqrt(m)
    if fix_c0:
        target = target - c0 * basis[:, 0]
        fit_cols = basis[:, 1:]
    else:
        fit_cols = basis
    # weight rows so every xX counts equally in relative terms
    wts = 1.0 / np.maximum(np.abs(basis[:, 0]), 1e-300)
    A = fit_cols * wts[:, None]
    b = target * wts
    if A.shape[1]:
        norms = np.linalg.norm(A, axis=0)
        An = A / norms
        cond = float(np.linalg.cond(An.conj().T @ An))
        if not cond <= _COND_LIMIT:
            raise IllConditionedError(f"basis Gram condition number {cond:.3g} exceeds 1e12")
        sol, *_ = np.linalg.lstsq(An, b, rcond=None)
        sol = sol / norms
    else:
        cond, sol = 1.0, np.zeros(0)
    c = np.concatenate([[c0], sol]) if fix_c0 else sol
    model = basis @ c
    resid = float(np.linalg.norm(model - np.array([p.value for p in contour]))
                  / np.linalg.norm([p.value for p in contour]))
    scale = np.max(np.abs(model - np.array([p.value for p in contour]))
                   / (xs * X) ** (0.5 - r / m))
    return ExpansionCoefficients(m, tuple(c), "calibrated", resid, cond, float(scale), int(xs.size))
