"""Complex log-gamma, real-order Bessel J and the additive character e(x).

Everything here is a pure function of its arguments and vectorizes over
numpy arrays where that is cheap to do.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import AccuracyError, DomainError, PoleError

__all__ = [
    "log_gamma",
    "gamma",
    "bessel_j",
    "bessel_j_series",
    "bessel_j_hankel",
    "bessel_j_neg_half",
    "e_of",
    "MAX_BESSEL_ORDER",
]

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# B_{2k} / (2k (2k-1)) for k = 1..10
_STIRLING = np.array([
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
])

# Stirling is applied once |Re z| has been shifted past this point.
_SHIFT_TO = 16.0
_POLE_TOL = 1e-12
_MAX_SHIFT = 100_000


def _stirling(z):
    inv = 1.0 / z
    inv2 = inv * inv
    corr = np.zeros_like(z)
    for c in _STIRLING[::-1]:
        corr = corr * inv2 + c
    return (z - 0.5) * np.log(z) - z + _HALF_LOG_2PI + corr * inv


def log_gamma(z):
    """Principal branch of log Gamma(z) for complex (or real) ``z``.

    Arguments left of ``Re z = 16`` are shifted up with the recurrence
    ``log G(z) = log G(z + n) - sum log(z + k)`` using principal logs, which
    fixes the branch (continuous in ``Im z`` off the negative real axis, same
    convention as ``scipy.special.loggamma``). Raises :class:`PoleError` within
    1e-12 of a non-positive integer.
    """
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    near_int = np.abs(z - np.round(z.real))
    if np.any((z.real < 0.5) & (near_int < _POLE_TOL)):
        raise PoleError("log_gamma evaluated at a pole (non-positive integer)")
    # Stirling is accurate directly once |z| >= 16 away from the negative axis
    needs = (np.abs(z) < _SHIFT_TO) | ((z.real < 0) & (np.abs(z.imag) < -z.real))
    out = np.empty_like(z)
    out[~needs] = _stirling(z[~needs])
    if np.any(needs):
        zs = z[needs]
        nshift = np.ceil(np.maximum(_SHIFT_TO - zs.real, 0.0)).astype(np.int64)
        top = int(nshift.max())
        if top > _MAX_SHIFT:
            raise DomainError("log_gamma argument too far into the left half-plane")
        acc = np.zeros_like(zs)
        w = zs.copy()
        for k in range(top):
            active = nshift > k
            acc[active] += np.log(w[active])
            w[active] += 1.0
        out[needs] = _stirling(w) - acc
    return out[0] if scalar else out


def gamma(z):
    """Gamma(z) as ``exp(log_gamma(z))`` (complex dtype)."""
    return np.exp(log_gamma(z))


def e_of(x):
    """The additive character e(x) = exp(2 pi i x)."""
    x = np.asarray(x, dtype=float)
    # reduce first so huge arguments keep full phase accuracy
    frac = x - np.round(x)
    out = np.exp(2j * np.pi * frac)
    return out[()] if out.ndim == 0 else out


# ----------------------------------------------------------------------------
# Bessel functions of real order and positive real argument
# ----------------------------------------------------------------------------

MAX_BESSEL_ORDER = 60.0
_BESSEL_RTOL = 1e-10
_EPS = np.finfo(float).eps


def _rgamma(x: float) -> float:
    """1/Gamma(x) for real x, zero at the poles."""
    if x <= 0 and x == math.floor(x):
        return 0.0
    return 1.0 / math.gamma(x) if x < 171 else math.exp(-math.lgamma(x)) * (
        1.0 if x > 0 or math.floor(x) % 2 == 0 else -1.0)


def bessel_j_series(nu: float, z: float, max_terms: int = 500) -> tuple[float, float]:
    """Power series for J_nu(z); returns ``(value, absolute_error_estimate)``."""
    half = 0.5 * z
    log_half = math.log(half)
    # leading terms vanish identically for negative integer order
    k0 = int(-nu) if nu < 0 and nu == math.floor(nu) else 0
    # first term in log space, the rest by the ratio -(z/2)^2 / ((k+1)(k+nu+1))
    lead = (2 * k0 + nu) * log_half - math.lgamma(k0 + 1.0)
    if lead > 700.0:
        return math.nan, math.inf
    term = (-1.0) ** k0 * math.exp(lead) * _rgamma(k0 + nu + 1.0)
    ratio = -half * half
    terms = []
    biggest = 0.0
    for k in range(k0, k0 + max_terms):
        terms.append(term)
        biggest = max(biggest, abs(term))
        if k > half and abs(term) <= _EPS * 1e-3 * biggest:
            break
        if not math.isfinite(biggest):
            return math.nan, math.inf
        term *= ratio / ((k + 1.0) * (k + nu + 1.0))
    # fsum removes accumulation error; what remains is per-term rounding
    return math.fsum(terms), 8.0 * _EPS * biggest


def bessel_j_hankel(nu: float, z: float) -> tuple[float, float]:
    """Hankel asymptotic expansion, summed up to its smallest term.

    Terminates (and is exact) for half-integer ``nu``. Returns
    ``(value, absolute_error_estimate)``.
    """
    mu4 = 4.0 * nu * nu
    omega = z - 0.5 * nu * math.pi - 0.25 * math.pi
    p = 0.0
    q = 0.0
    term = 1.0
    biggest = 1.0
    err = 0.0
    exact = False
    # terms may grow while (2k+1)^2 < 4 nu^2; truncate at the smallest term after that
    turn = max(0, int(abs(nu)))
    for k in range(400):
        if k % 4 == 0:
            p += term
        elif k % 4 == 1:
            q += term
        elif k % 4 == 2:
            p -= term
        else:
            q -= term
        biggest = max(biggest, abs(term))
        factor = (mu4 - (2 * k + 1) ** 2) / ((k + 1) * 8.0 * z)
        if factor == 0.0:
            exact = True
            break
        nxt = term * factor
        if k >= turn and abs(nxt) >= abs(term):
            err = abs(term)
            break
        term = nxt
        if abs(term) < _EPS * 1e-3 * max(1.0, abs(p) + abs(q)):
            err = abs(term)
            break
    else:
        err = abs(term)
    amp = math.sqrt(2.0 / (math.pi * z))
    value = amp * (p * math.cos(omega) - q * math.sin(omega))
    rounding = 8.0 * _EPS * amp * biggest
    return value, (0.0 if exact else amp * err) + rounding


def bessel_j_neg_half(q: int, z):
    """Elementary closed form of J_{-q-1/2}(z) for integer ``q >= 0``.

    J_{-q-1/2}(z) = (2 pi z)^{-1/2} sum_{j=0}^{q} (q+j)!/(j!(q-j)!(2z)^j)
                    * (i^{j+q} e^{iz} + (-i)^{j+q} e^{-iz})
    The bracket equals 2 Re(i^{j+q} e^{iz}).
    """
    z = np.asarray(z, dtype=float)
    total = np.zeros_like(z)
    for j in range(q + 1):
        coef = math.factorial(q + j) / (math.factorial(j) * math.factorial(q - j))
        phase = (1j) ** ((j + q) % 4)
        total = total + coef / (2.0 * z) ** j * 2.0 * np.real(phase * np.exp(1j * z))
    out = total / np.sqrt(2.0 * np.pi * z)
    return out[()] if out.ndim == 0 else out


def _is_half_integer(nu: float) -> bool:
    return abs(2.0 * nu - round(2.0 * nu)) < 1e-14 and round(2.0 * nu) % 2 != 0


def _recurrence(nu: float, z: float) -> tuple[float, float]:
    """J_nu(z) for z > 12 from Hankel values at orders of size <= 1.

    Forward recurrence is used while the order stays below ``z``, Miller's
    backward recurrence above it, and downward recurrence for negative orders.
    """
    if nu < 0 and nu == math.floor(nu):
        v, e = _recurrence(-nu, z)
        return (-v if int(-nu) % 2 else v), e
    base = nu - math.floor(nu)  # in [0, 1)
    j0, e0 = bessel_j_hankel(base, z)
    if nu < 0:
        j_hi, j_lo = j0, None
        j_lo, e1 = bessel_j_hankel(base - 1.0, z)
        order = base - 1.0
        biggest = max(abs(j_hi), abs(j_lo))
        while order > nu + 0.5:
            j_hi, j_lo = j_lo, (2.0 * order / z) * j_lo - j_hi
            order -= 1.0
            biggest = max(biggest, abs(j_lo))
        amp = math.sqrt(2.0 / (math.pi * z))
        rel = (e0 + e1) / amp + 64 * _EPS
        return j_lo, rel * max(biggest, amp) * 4.0
    n_nu = int(round(nu - base))
    j1, e1 = bessel_j_hankel(base + 1.0, z)
    amp = math.sqrt(2.0 / (math.pi * z))
    if nu <= z:
        lo, hi = j0, j1
        for k in range(1, n_nu):
            lo, hi = hi, (2.0 * (base + k) / z) * hi - lo
        value = j0 if n_nu == 0 else hi
        return value, 4.0 * (e0 + e1 + 64 * _EPS * amp)
    # Miller: unnormalized minimal solution from far above, scaled to the base values
    start = n_nu + 40 + int(math.sqrt(40.0 * n_nu))
    f_next, f_cur = 0.0, 1e-280
    target = 0.0
    for k in range(start, 0, -1):
        f_prev = (2.0 * (base + k) / z) * f_cur - f_next
        f_next, f_cur = f_cur, f_prev
        if k - 1 == n_nu:
            target = f_cur
        if abs(f_cur) > 1e250:
            f_cur *= 1e-250
            f_next *= 1e-250
            target *= 1e-250
    # f_cur ~ order base, f_next ~ order base + 1
    if abs(j0) >= abs(j1):
        value = target / f_cur * j0
    else:
        value = target / f_next * j1
    return value, abs(value) * (2.0 * (e0 + e1) / max(abs(j0), abs(j1)) + 64 * _EPS)


def bessel_j(nu: float, z: float, *, crossover: float | None = None) -> float:
    """J_nu(z) for real order and real ``z > 0``.

    Small arguments use the power series; large ones the Hankel expansion
    (exact for half-integer orders), with order recurrence when the order is
    large compared with ``z``. Negative half-integer orders use the
    elementary closed form throughout. Raises :class:`AccuracyError` when the
    error estimate of the selected regime exceeds ``1e-10`` relative to the
    local amplitude.
    """
    nu = float(nu)
    z = float(z)
    if not z > 0:
        raise DomainError("bessel_j requires z > 0")
    if abs(nu) > MAX_BESSEL_ORDER:
        raise DomainError(f"|nu| = {abs(nu)} exceeds supported order {MAX_BESSEL_ORDER}")
    if crossover is None:
        crossover = max(12.0, 2.0 * abs(nu))

    if _is_half_integer(nu) and nu < 0:
        q = int(round(-nu - 0.5))
        value = float(bessel_j_neg_half(q, z))
        spread = sum(math.comb(q + j, 2 * j) * math.factorial(2 * j) / math.factorial(j)
                     / (2.0 * z) ** j for j in range(q + 1))
        if 16.0 * _EPS * spread * 2.0 / math.sqrt(2.0 * math.pi * z) <= _BESSEL_RTOL * abs(value):
            return value

    if z <= 12.0:
        regimes = [bessel_j_series]
    elif z >= crossover:
        regimes = [bessel_j_hankel, _recurrence]
    else:
        regimes = [_recurrence, bessel_j_hankel]
    if 12.0 < z <= 40.0:
        regimes.append(bessel_j_series)

    amp = math.sqrt(2.0 / (math.pi * z)) if z >= abs(nu) else 0.0
    best_err = math.inf
    for regime in regimes:
        value, err = regime(nu, z)
        if err <= _BESSEL_RTOL * max(abs(value), amp, 1e-300):
            return value
        best_err = min(best_err, err)
    raise AccuracyError(
        f"J_{nu}({z}): error estimate {best_err:.3g} exceeds tolerance in every regime")
