"""Deterministic quadrature for smooth, oscillatory and vertical-line integrals.

All routines evaluate integrands on numpy arrays of nodes. A callable that
only accepts scalars is wrapped with :func:`numpy.vectorize` automatically.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, TruncationError

__all__ = [
    "QuadratureResult",
    "OscillatorySpec",
    "integrate_smooth",
    "integrate_oscillatory",
    "integrate_vertical_line",
    "truncation_height",
    "DEFAULT_PANEL_CAP",
    "MAX_TRUNCATION_HEIGHT",
]

DEFAULT_PANEL_CAP = 2**16
MAX_TRUNCATION_HEIGHT = 1e5
_EPS = np.finfo(float).eps

# Gauss-Kronrod 7/15 on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS = np.zeros(15)
_GAUSS[1:7:2] = _WG[:3]
_GAUSS[7] = _WG[3]
_GAUSS[9:15:2] = _WG[2::-1]


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error_estimate: float
    panels_used: int
    stationary_point: bool = False

    def __post_init__(self):
        if not self.error_estimate >= 0:
            raise ValueError("error_estimate must be non-negative")
        if self.panels_used < 1:
            raise ValueError("panels_used must be at least 1")


@dataclass(frozen=True)
class OscillatorySpec:
    """Integrand ``amplitude(t) * e(phase(t))`` on ``[a, b]``.

    ``tol`` is a relative tolerance.
    """
    amplitude: Callable
    phase: Callable
    phase_derivative: Callable
    a: float
    b: float
    tol: float = 1e-10

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("OscillatorySpec requires a < b")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


def _as_vectorized(f: Callable) -> Callable:
    probe = np.array([0.25, 0.5, 0.75])
    try:
        out = np.asarray(f(probe))
        if out.shape == probe.shape:
            return f
    except Exception:
        pass
    return np.vectorize(f, otypes=[complex])


def _gk_panels(f, lo: np.ndarray, hi: np.ndarray):
    """Kronrod values, error estimates and L1 estimates on many panels at once."""
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=complex).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        raise ConvergenceError("integrand returned a non-finite value")
    k = half * (fx @ _KRONROD)
    g = half * (fx @ _GAUSS)
    l1 = np.abs(half) * (np.abs(fx) @ _KRONROD)
    return k, np.abs(k - g), l1


def _adaptive(f, breaks, abs_tol: float, rel_tol: float, cap: int,
              l1_tol: float = 0.0) -> QuadratureResult:
    breaks = np.asarray(breaks, dtype=float)
    lo, hi = breaks[:-1], breaks[1:]
    vals, errs, l1s = _gk_panels(f, lo, hi)
    # heap of (-err, serial) keeps ties in creation order
    panels = {}
    heap = []
    for i in range(len(lo)):
        panels[i] = (lo[i], hi[i], vals[i], errs[i], l1s[i])
        heap.append((-errs[i], i))
    heapq.heapify(heap)
    serial = len(lo)
    total = complex(np.sum(vals))
    err = float(np.sum(errs))
    l1 = float(np.sum(l1s))
    best = (err, total, len(panels))

    def done(err_now, total_now, l1_now):
        target = max(abs_tol, rel_tol * abs(total_now), l1_tol * l1_now)
        # roundoff in the panel sums grows like the square root of their number
        floor = 50.0 * _EPS * l1_now * math.sqrt(len(panels))
        return err_now <= target or err_now <= floor

    while not done(err, total, l1):
        if len(panels) >= cap:
            raise ConvergenceError(
                f"panel cap {cap} reached with error estimate {err:.3g}")
        _, key = heapq.heappop(heap)
        a, b, v, e, w = panels.pop(key)
        m = 0.5 * (a + b)
        cv, ce, cw = _gk_panels(f, np.array([a, m]), np.array([m, b]))
        for j, (pa, pb) in enumerate(((a, m), (m, b))):
            panels[serial] = (pa, pb, cv[j], ce[j], cw[j])
            heapq.heappush(heap, (-ce[j], serial))
            serial += 1
        total += complex(cv[0] + cv[1] - v)
        err += float(ce[0] + ce[1] - e)
        l1 += float(cw[0] + cw[1] - w)
        if len(panels) % 256 == 0:
            # resum to shed drift from the running totals
            total = complex(sum(p[1][2] for p in sorted(panels.items())))
            err = math.fsum(p[1][3] for p in sorted(panels.items()))
        if err < best[0]:
            best = (err, total, len(panels))
    err_final, total_final, n_final = best
    if err < err_final:
        err_final, total_final, n_final = err, total, len(panels)
    return QuadratureResult(complex(total_final), max(float(err_final), 0.0), n_final)


def integrate_smooth(f: Callable, a: float, b: float, tol: float = 1e-10,
                     *, cap: int = DEFAULT_PANEL_CAP, rel_tol: float = 0.0) -> QuadratureResult:
    """Adaptive 15-point Gauss-Kronrod quadrature of ``f`` over ``[a, b]``.

    The reported error estimate is the smallest total estimate seen during
    refinement, paired with the value at that stage, so asking for a tighter
    ``tol`` can only lower it.
    """
    if not a < b:
        raise ValueError("integrate_smooth requires a < b")
    if not tol > 0:
        raise ValueError("tol must be positive")
    return _adaptive(_as_vectorized(f), [a, b], tol, rel_tol, cap)


def _period_breaks(dphase: Callable, a: float, b: float, cap: int) -> list[float]:
    width_cap = (b - a) / 8.0
    breaks = [a]
    t = a
    while t < b:
        slope = abs(float(dphase(t)))
        w = width_cap if slope == 0 else min(width_cap, 0.25 / slope)
        # tighten if the phase speeds up inside the panel
        for _ in range(4):
            ahead = abs(float(dphase(min(t + w, b))))
            if ahead * w <= 0.25 or w <= 1e-12 * (b - a):
                break
            w = 0.25 / ahead
        t = min(t + w, b)
        if b - t < 1e-12 * (b - a):
            t = b
        breaks.append(t)
        if len(breaks) > cap:
            raise ConvergenceError("oscillatory panel count exceeds the cap")
    return breaks


def _stationary_points(dphase: Callable, a: float, b: float, samples: int = 257) -> list[float]:
    ts = np.linspace(a, b, samples)
    d = np.array([float(dphase(t)) for t in ts])
    roots = [float(t) for t, v in zip(ts, d) if v == 0.0]
    for i in range(samples - 1):
        if d[i] * d[i + 1] < 0:
            roots.append(brentq(lambda s: float(dphase(s)), ts[i], ts[i + 1], xtol=1e-14))
    return sorted(set(roots))


def integrate_oscillatory(spec: OscillatorySpec, *, cap: int = DEFAULT_PANEL_CAP) -> QuadratureResult:
    """Integrate ``amplitude(t) e(phase(t))`` with panels of at most a quarter period.

    Interior zeros of ``phase'`` are added as breakpoints and reported
    through ``stationary_point``. Panels are then refined adaptively until the
    relative tolerance is met.
    """
    amp = _as_vectorized(spec.amplitude)
    phase = _as_vectorized(spec.phase)

    def integrand(t):
        # reduce the phase mod 1 before exponentiating
        ph = np.asarray(phase(t), dtype=float)
        return amp(t) * np.exp(2j * np.pi * (ph - np.round(ph)))

    stationary = _stationary_points(spec.phase_derivative, spec.a, spec.b)
    breaks = _period_breaks(spec.phase_derivative, spec.a, spec.b, cap)
    # a phase that is flat everywhere needs no extra breakpoints
    if 0 < len(stationary) <= 16:
        breaks = sorted(set(breaks) | set(stationary))
    # the l1 floor keeps integrals that cancel to ~0 from chasing roundoff
    res = _adaptive(integrand, breaks, 0.0, spec.tol, cap, l1_tol=1e-6 * spec.tol)
    return QuadratureResult(res.value, res.error_estimate, res.panels_used, bool(stationary))


def _tail_bound(envelope: Callable, T: float) -> float:
    """Integral of the envelope over [T, inf), via t = T / w on (0, 1].

    An envelope whose tail the rule cannot resolve counts as infinite.
    """
    def g(w):
        w = np.maximum(w, 1e-300)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return np.where(w > 1e-300, envelope(T / w) * T / w ** 2, 0.0)

    try:
        res = integrate_smooth(g, 0.0, 1.0, tol=1e-300, rel_tol=1e-6, cap=4096)
    except ConvergenceError:
        return math.inf
    return abs(res.value) + res.error_estimate


def truncation_height(envelope: Callable, tol: float, *, start: float = 16.0,
                      limit: float = MAX_TRUNCATION_HEIGHT) -> float:
    """Smallest T (to 1%) with envelope tail beyond T below ``tol / 2``.

    Doubling from ``start`` brackets the height, and bisection refines it.
    """
    env = _as_vectorized(envelope)
    target = 0.5 * tol
    if _tail_bound(env, start) < target:
        lo, hi = 0.0, start
    else:
        hi = start
        while _tail_bound(env, hi) >= target:
            if hi >= limit:
                raise TruncationError(f"no truncation height <= {limit:g} meets the tail bound")
            hi = min(2.0 * hi, limit)
        lo = hi / 2.0
    while hi - lo > 0.01 * hi:
        mid = 0.5 * (lo + hi)
        if mid > 0 and _tail_bound(env, mid) < target:
            hi = mid
        else:
            lo = mid
    return hi


def integrate_vertical_line(F: Callable, sigma: float, decay_envelope: Callable,
                            tol: float = 1e-10, *, conjugate_symmetric: bool = False,
                            max_halvings: int = 20) -> QuadratureResult:
    """Integrate ``F(s) ds`` along ``Re s = sigma`` (so ``ds = i dt``).

    The line is cut at the height from :func:`truncation_height`, and the
    segment is integrated by the trapezoid rule with step halving until two
    successive steps agree to ``tol / 2``. Analytic integrands make the
    trapezoid rule converge geometrically. With ``conjugate_symmetric`` set,
    ``F(conj s) = conj F(s)`` is assumed and only ``t >= 0`` is sampled.
    """
    # both tails together stay below tol / 2
    T = truncation_height(decay_envelope, 0.5 * tol)
    Fv = _as_vectorized(F)
    tail = 2.0 * _tail_bound(_as_vectorized(decay_envelope), T)

    def trapezoid(n: int) -> complex:
        if conjugate_symmetric:
            t = np.linspace(0.0, T, n + 1)
            v = np.asarray(Fv(sigma + 1j * t), dtype=complex)
            w = np.full(n + 1, T / n)
            w[0] = w[-1] = 0.5 * T / n
            half = np.sum(w * v)
            return 1j * 2.0 * half.real
        t = np.linspace(-T, T, 2 * n + 1)
        v = np.asarray(Fv(sigma + 1j * t), dtype=complex)
        w = np.full(2 * n + 1, T / n)
        w[0] = w[-1] = 0.5 * T / n
        return 1j * np.sum(w * v)

    if np.all(np.asarray(Fv(sigma + 1j * np.linspace(-T, T, 33))) == 0):
        return QuadratureResult(0j, 0.0, 1)
    n = max(32, int(math.ceil(T)))
    prev = trapezoid(n)
    best = None
    for _ in range(max_halvings):
        n *= 2
        cur = trapezoid(n)
        diff = abs(cur - prev)
        if best is None or diff < best[0]:
            best = (diff, cur, n)
        if diff <= 0.5 * tol:
            break
        prev = cur
    else:
        raise ConvergenceError("vertical-line trapezoid did not converge")
    diff, value, n = best
    return QuadratureResult(complex(value), float(diff + tail), n)
