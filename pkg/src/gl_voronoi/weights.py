"""Compactly supported smooth weights and their Mellin transforms.

A :class:`BumpFunction` is either the classical bump
``g(u) = exp(1 - 1/(4u(1-u)))`` stretched over ``[a, b]``, or a sharpened
weight equal to 1 on ``[a, b]`` with smooth ramps of width ``1/delta`` on
both sides. With ``psi(y) = phi(y / X)`` the Mellin transform is
``psi~(s) = X^s phi~(s)``.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError
from .quadrature import integrate_smooth

__all__ = [
    "BumpFunction",
    "standard_bump",
    "sharpened_bump",
    "eval_bump",
    "mollifier",
    "mollifier_derivatives",
    "mellin",
    "mellin_on_line",
    "mellin_decay_envelope",
    "combined_decay_envelope",
    "MellinCache",
    "MAX_ENVELOPE_ORDER",
]

MAX_ENVELOPE_ORDER = 12

# Gauss-Legendre rule for the smoothstep integral; g is flat at 0 so this converges fast
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(80)


def mollifier(u):
    """g(u) = exp(1 - 1/(4u(1-u))) on (0, 1), zero elsewhere; g(1/2) = 1."""
    u = np.asarray(u, dtype=float)
    inside = (u > 0) & (u < 1)
    uu = np.where(inside, u, 0.5)
    out = np.where(inside, np.exp(1.0 - 0.25 / (uu * (1.0 - uu))), 0.0)
    return out[()] if out.ndim == 0 else out


def mollifier_derivatives(u, order: int) -> np.ndarray:
    """Rows ``g, g', ..., g^(order)`` at the points ``u``.

    With ``g = exp(h)`` and ``h = 1 - (1/u + 1/(1-u))/4`` the derivatives obey
    ``g^(n) = sum_k C(n-1, k) h^(k+1) g^(n-1-k)``.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.zeros((order + 1, u.size))
    g = mollifier(u)
    live = g > 1e-300
    if not np.any(live):
        return out
    v = u[live]
    hder = [None]
    for k in range(1, order + 1):
        fk = math.factorial(k)
        hder.append(-0.25 * ((-1.0) ** k * fk / v ** (k + 1) + fk / (1.0 - v) ** (k + 1)))
    gs = [g[live]]
    for n in range(1, order + 1):
        acc = np.zeros_like(v)
        for k in range(n):
            acc += math.comb(n - 1, k) * hder[k + 1] * gs[n - 1 - k]
        gs.append(acc)
    out[:, live] = np.array(gs)
    return out


def _mollifier_cumulative(v):
    """∫_0^v g for v in [0, 1/2], by Gauss-Legendre on [0, v]."""
    v = np.asarray(v, dtype=float)
    nodes = 0.5 * v[..., None] * (_GL_NODES + 1.0)
    return 0.5 * v * np.sum(_GL_WEIGHTS * mollifier(nodes), axis=-1)


_G_TOTAL = float(2.0 * _mollifier_cumulative(np.array(0.5)))


def _smoothstep(v):
    """S(v) = ∫_0^v g / ∫_0^1 g, using S(v) = 1 - S(1 - v) above 1/2."""
    v = np.clip(np.asarray(v, dtype=float), 0.0, 1.0)
    low = np.minimum(v, 1.0 - v)
    part = _mollifier_cumulative(low) / _G_TOTAL
    return np.where(v <= 0.5, part, 1.0 - part)


@dataclass(frozen=True)
class BumpFunction:
    """Smooth compactly supported weight.

    For ``kind="standard"`` the support is ``[a, b]``. For
    ``kind="sharpened"`` the weight is 1 on ``[a, b]`` and the support is
    ``[a - 1/delta, b + 1/delta]``.
    """
    a: float = 1.0
    b: float = 2.0
    kind: str = "standard"
    delta: float | None = None
    amplitude: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > self.a):
            raise ValueError("BumpFunction needs 0 < a < b")
        if self.kind not in ("standard", "sharpened"):
            raise ValueError(f"unknown bump kind {self.kind!r}")
        if self.kind == "sharpened":
            if self.delta is None or not self.delta > 1:
                raise ValueError("sharpened bump needs delta > 1")
            if self.a - 1.0 / self.delta <= 0:
                raise ValueError("sharpened support must stay in (0, inf)")
        elif self.delta is not None:
            raise ValueError("delta applies to the sharpened kind only")

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == "standard":
            return (self.a, self.b)
        w = 1.0 / self.delta
        return (self.a - w, self.b + w)

    @property
    def is_zero(self) -> bool:
        return self.amplitude == 0

    def __call__(self, x):
        return eval_bump(self, x)

    def derivatives(self, x, order: int) -> np.ndarray:
        """Rows ``phi, phi', ..., phi^(order)`` at ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros((order + 1, x.size))
        if self.is_zero:
            return out
        if self.kind == "standard":
            L = self.b - self.a
            d = mollifier_derivatives((x - self.a) / L, order)
            scale = L ** -np.arange(order + 1, dtype=float)
            return self.amplitude * d * scale[:, None]
        w = 1.0 / self.delta
        out[0] = eval_bump(self, x)
        if order == 0:
            return out
        lo, hi = self.support
        left = (x > lo) & (x < self.a)
        right = (x > self.b) & (x < hi)
        # S^(j) = g^(j-1) / ∫g; the right ramp runs backwards
        dl = mollifier_derivatives((x[left] - lo) / w, order - 1)
        dr = mollifier_derivatives((hi - x[right]) / w, order - 1)
        for j in range(1, order + 1):
            out[j, left] = dl[j - 1] / _G_TOTAL * w ** -j
            out[j, right] = (-1.0) ** j * dr[j - 1] / _G_TOTAL * w ** -j
        return self.amplitude * out


def standard_bump(a: float = 1.0, b: float = 2.0) -> BumpFunction:
    return BumpFunction(a, b, "standard")


def sharpened_bump(delta: float, a: float = 1.0, b: float = 2.0) -> BumpFunction:
    return BumpFunction(a, b, "sharpened", float(delta))


def eval_bump(bump: BumpFunction, x):
    """Value of the weight at ``x`` (vectorized); always in [0, amplitude]."""
    x = np.asarray(x, dtype=float)
    if bump.kind == "standard":
        out = mollifier((x - bump.a) / (bump.b - bump.a))
    else:
        w = 1.0 / bump.delta
        lo, hi = bump.support
        out = np.where((x >= bump.a) & (x <= bump.b), 1.0, 0.0)
        out = np.where((x > lo) & (x < bump.a), _smoothstep((x - lo) / w), out)
        out = np.where((x > bump.b) & (x < hi), _smoothstep((hi - x) / w), out)
    out = bump.amplitude * out
    return out[()] if np.ndim(out) == 0 else out


# ----------------------------------------------------------------------------
# Mellin transform
# ----------------------------------------------------------------------------

def _log_grid(bump: BumpFunction, n: int):
    lo, hi = bump.support
    v0, v1 = math.log(lo), math.log(hi)
    v = np.linspace(v0, v1, n + 1)
    # endpoints carry zero weight: the integrand is flat there
    return v, (v1 - v0) / n


def _log_nodes_needed(bump: BumpFunction, tmax: float) -> int:
    lo, hi = bump.support
    L = math.log(hi / lo)
    # resolve the oscillation e^{itv} and the ramps of width 1/delta
    ramp = 1.0 if bump.kind == "standard" else bump.delta
    return int(max(256, 3.0 * (tmax + 40.0 * ramp) * L / math.pi))


def mellin(bump: BumpFunction, X: float, s, *, rtol: float = 1e-12):
    """psi~(s) = ∫ phi(y/X) y^{s-1} dy = X^s ∫ phi(u) u^{s-1} du.

    Trapezoid rule in ``v = log u``: the integrand and all its derivatives
    vanish at the ends of the support, so the rule converges faster than any
    power. The node count is doubled until two rules agree to ``rtol``
    (relative to ∫|phi| u^{Re s - 1}).
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
    if bump.is_zero:
        out = np.zeros_like(s_arr)
        return out[0] if np.ndim(s) == 0 else out
    tmax = float(np.max(np.abs(s_arr.imag))) if s_arr.size else 0.0
    n = _log_nodes_needed(bump, tmax)

    def rule(n):
        v, h = _log_grid(bump, n)
        f = eval_bump(bump, np.exp(v)) * h
        out = np.empty_like(s_arr)
        # chunk to bound memory
        for i in range(0, s_arr.size, 256):
            sl = s_arr[i:i + 256]
            out[i:i + 256] = np.exp(np.outer(sl, v)) @ f
        scale = np.exp(np.outer(s_arr.real, v)) @ np.abs(f)
        return out, scale

    prev, scale = rule(n)
    for _ in range(8):
        n *= 2
        cur, scale = rule(n)
        if np.all(np.abs(cur - prev) <= rtol * scale):
            break
        prev = cur
    else:
        raise ConvergenceError("Mellin trapezoid did not converge")
    out = cur * np.exp(s_arr * math.log(X))
    return out[0] if np.ndim(s) == 0 else out


_CZT_BLOCK = 1 << 14


def _chirp_sum(x: np.ndarray, base: float, step: float, m: int) -> np.ndarray:
    """``sum_j x_j exp(i (base + k step) j)`` for k < m (Bluestein).

    Unlike ``scipy.signal.czt`` every chirp phase is formed directly rather
    than as a power of a rounded unit complex number, whose modulus drifts.
    """
    n = x.size
    j = np.arange(n, dtype=float)
    k = np.arange(m, dtype=float)
    lag = np.arange(-(n - 1), m, dtype=float)
    size = 1 << int(n + m - 1).bit_length()
    pre = x * np.exp(1j * (base * j + 0.5 * step * j * j))
    kernel = np.exp(-0.5j * step * lag * lag)
    conv = np.fft.ifft(np.fft.fft(pre, size) * np.fft.fft(kernel, size))
    return np.exp(0.5j * step * k * k) * conv[n - 1:n - 1 + m]


def mellin_on_line(bump: BumpFunction, X: float, sigma: float, t0: float, dt: float,
                   count: int) -> np.ndarray:
    """psi~(sigma + i t_k) for ``t_k = t0 + k dt``, k < count, via a chirp-z (Bluestein) sum.

    Same trapezoid rule as :func:`mellin`, but all heights at once in
    ``O((n + count) log(n + count))``.
    """
    if bump.is_zero:
        return np.zeros(count, dtype=complex)
    tmax = max(abs(t0), abs(t0 + dt * (count - 1)))
    n = 2 * _log_nodes_needed(bump, tmax)
    v, h = _log_grid(bump, n)
    x = eval_bump(bump, np.exp(v)) * np.exp(sigma * v) * h
    # sum_j x_j e^{i t_k (v0 + j h)}, in blocks so the chirp phases stay small.
    raw = np.empty(count, dtype=complex)
    for start in range(0, count, _CZT_BLOCK):
        size = min(_CZT_BLOCK, count - start)
        raw[start:start + size] = _chirp_sum(x, (t0 + start * dt) * h, dt * h, size)
    t = t0 + dt * np.arange(count)
    return raw * np.exp(1j * t * v[0]) * np.exp((sigma + 1j * t) * math.log(X))


# ----------------------------------------------------------------------------
# Decay envelopes
# ----------------------------------------------------------------------------

def _derivative_moment(bump: BumpFunction, sigma: float, j: int) -> float:
    """∫ |phi^(j)(y)| y^{sigma + j - 1} dy over the support."""
    lo, hi = bump.support
    if bump.kind == "standard":
        pieces = [(lo, hi)]
    else:
        pieces = [(lo, bump.a), (bump.b, hi)] if j > 0 else [(lo, hi)]

    def f(y):
        return np.abs(bump.derivatives(y, j)[j]) * y ** (sigma + j - 1.0)

    total = 0.0
    for p, q in pieces:
        # split so the adaptive rule sees the bulk of each ramp
        edges = np.linspace(p, q, 9)
        for u, w in zip(edges[:-1], edges[1:]):
            total += integrate_smooth(f, u, w, tol=1e-300, rel_tol=1e-8, cap=1 << 14).value.real
    return total


def mellin_decay_envelope(bump: BumpFunction, X: float, sigma: float, j: int) -> Callable:
    """Bound ``t -> C_j X^sigma (1+|t|)^{-j}`` for ``|psi~(sigma + it)|``.

    Integrating by parts ``j`` times gives
    ``phi~(s) = (-1)^j ∫ phi^(j)(y) y^{s+j-1} dy / (s (s+1) ... (s+j-1))``,
    and ``|s + k| >= (1+|t|) min(1, |sigma+k|) / 2``. ``C_0`` is exactly
    ``∫ |phi| y^{sigma-1} dy``. A 1% margin covers the quadrature of the
    moment for ``j >= 1``.
    """
    if not 0 <= j <= MAX_ENVELOPE_ORDER:
        raise ValueError(f"envelope order must be in [0, {MAX_ENVELOPE_ORDER}]")
    if bump.is_zero:
        return lambda t: np.zeros_like(np.asarray(t, dtype=float))
    moment = _derivative_moment(bump, sigma, j)
    factor = 1.0
    for k in range(j):
        d = min(1.0, abs(sigma + k))
        factor = math.inf if d == 0 else factor * 2.0 / d
    const = moment * factor * (1.01 if j else 1.0) * X ** sigma

    def envelope(t):
        return const * (1.0 + np.abs(np.asarray(t, dtype=float))) ** (-j)

    envelope.constant = const
    envelope.order = j
    return envelope


def combined_decay_envelope(bump: BumpFunction, X: float, sigma: float,
                            max_order: int = MAX_ENVELOPE_ORDER) -> Callable:
    """Pointwise minimum of the envelopes of order ``0..max_order``."""
    parts = [mellin_decay_envelope(bump, X, sigma, j) for j in range(max_order + 1)]
    finite = [e for e in parts if math.isfinite(e.constant)]

    def envelope(t):
        t = np.asarray(t, dtype=float)
        return np.min([e(t) for e in finite], axis=0)

    return envelope


class MellinCache:
    """Memo of ``psi~(s)`` for one bump and scale ``X``.

    Keys are the exact ``(Re s, Im s)`` pairs. Reads are lock-free and
    writes are serialized; values depend only on ``(bump, X, s)``.
    """

    def __init__(self, bump: BumpFunction, X: float):
        self.bump = bump
        self.X = float(X)
        self._memo: dict[tuple[float, float], complex] = {}
        self._lock = threading.Lock()

    def __call__(self, s) -> complex:
        key = (float(np.real(s)), float(np.imag(s)))
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        value = complex(mellin(self.bump, self.X, complex(*key)))
        with self._lock:
            self._memo.setdefault(key, value)
        return self._memo[key]

    def __len__(self):
        return len(self._memo)
