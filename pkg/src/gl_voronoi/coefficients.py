"""Fourier-coefficient sources and Kloosterman sums.

The automorphic source is the symmetric-power lift of the discriminant form
``Delta = q prod (1 - q^j)^24``. Its Hecke eigenvalues
``lambda(p) = tau(p) / p^{11/2}`` feed local factors
``A(p^k) = h_k(alpha^{m-1}, alpha^{m-3}, ..., alpha^{1-m})``, which are
complete homogeneous symmetric polynomials in the Satake values.
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CacheError, CapacityError, DivisibilityError, PrePostError, RangeError

__all__ = [
    "MAX_N",
    "HeckeEigenvalues",
    "tau_table",
    "sym_power_local",
    "SymPowerSource",
    "SyntheticSource",
    "ConstantSource",
    "CoefficientTable",
    "build_table",
    "rankin_selberg_stat",
    "cache_dir",
    "save_table",
    "load_table",
    "cached_table",
    "kloosterman",
    "hyper_kloosterman",
    "CACHE_ENV",
]

MAX_N = 10**7
CACHE_ENV = "VORONOI_CACHE_DIR"
_CACHE_VERSION = 1

# Pentagonal passes add up to ~5200 terms of size < p with unit coefficients,
# so primes below 2^50 keep int64 sums exact for N <= 1e7.
_PRIMES_50 = (
    1125899906842597,
    1125899906842589,
    1125899906842573,
    1125899906842553,
)
# Jacobi terms carry coefficients up to 2 sqrt(2N) + 1, hence primes below 2^31.
_PRIMES_31 = (
    2147483647,
    2147483629,
    2147483587,
    2147483579,
    2147483563,
    2147483549,
)


# ----------------------------------------------------------------------------
# Ramanujan tau
# ----------------------------------------------------------------------------

def _pentagonal_terms(N: int) -> list[tuple[int, int]]:
    """(exponent, sign) of prod (1 - q^j) = sum (-1)^k q^{k(3k-1)/2}, k in Z."""
    out = [(0, 1)]
    k = 1
    while True:
        e1 = k * (3 * k - 1) // 2
        if e1 > N:
            break
        sign = -1 if k % 2 else 1
        out.append((e1, sign))
        e2 = k * (3 * k + 1) // 2
        if e2 <= N:
            out.append((e2, sign))
        k += 1
    return out


def _jacobi_terms(N: int) -> list[tuple[int, int]]:
    """(exponent, coefficient) of prod (1 - q^j)^3 = sum (-1)^k (2k+1) q^{k(k+1)/2}."""
    out = []
    k = 0
    while k * (k + 1) // 2 <= N:
        out.append((k * (k + 1) // 2, (-1) ** k * (2 * k + 1)))
        k += 1
    return out


def _power_series_mod(N: int, terms, passes: int, p: int) -> np.ndarray:
    """Coefficients of (sum c q^e)^passes mod p, up to q^(N-1)."""
    a = np.zeros(N, dtype=np.int64)
    a[0] = 1
    for _ in range(passes):
        new = np.zeros(N, dtype=np.int64)
        for e, c in terms:
            if e >= N:
                continue
            if c == 1:
                new[e:] += a[: N - e]
            elif c == -1:
                new[e:] -= a[: N - e]
            else:
                new[e:] += c * a[: N - e]
        a = new % p
    return a


@dataclass(frozen=True)
class HeckeEigenvalues:
    """tau(n) and lambda(n) = tau(n)/n^{11/2} for 1 <= n <= N (index 0 unused)."""
    N: int
    tau: tuple
    lam: np.ndarray = field(repr=False)
    weight: int = 12


def tau_table(N: int, method: str = "pentagonal") -> HeckeEigenvalues:
    """Exact tau(n), n <= N, from the q-expansion of Delta.

    ``method="pentagonal"`` raises Euler's pentagonal series to the 24th power
    (24 sparse passes). ``method="jacobi"`` uses Jacobi's series for
    ``prod (1-q^j)^3`` and 8 passes. Both run in int64 modulo a few large
    primes and recombine by the Chinese remainder theorem into exact integers.
    """
    if N > MAX_N:
        raise CapacityError(f"N={N} exceeds the table cap {MAX_N}")
    if N < 1:
        raise PrePostError("N must be at least 1")
    if method == "pentagonal":
        terms, passes, pool = _pentagonal_terms(N), 24, _PRIMES_50
    elif method == "jacobi":
        terms, passes, pool = _jacobi_terms(N), 8, _PRIMES_31
    else:
        raise ValueError(f"unknown tau method {method!r}")
    # |tau(n)| <= d(n) n^{11/2} < 2 n^6; the CRT modulus must exceed twice that
    need = math.log2(4.0 * float(N) ** 6) + 2
    primes, bits = [], 0.0
    for p in pool:
        primes.append(p)
        bits += math.log2(p)
        if bits > need:
            break
    residues = [_power_series_mod(N, terms, passes, p) for p in primes]
    M = math.prod(primes)
    weights = [(M // p) * pow(M // p, -1, p) for p in primes]
    half = M // 2
    tau = [0] * (N + 1)
    cols = [r.tolist() for r in residues]
    for j in range(N):
        v = sum(c[j] * w for c, w in zip(cols, weights)) % M
        tau[j + 1] = v - M if v > half else v
    n = np.arange(N + 1, dtype=float)
    lam = np.zeros(N + 1)
    lam[1:] = np.array([float(t) for t in tau[1:]]) / n[1:] ** 5.5
    lam.setflags(write=False)
    return HeckeEigenvalues(N, tuple(tau), lam)


# ----------------------------------------------------------------------------
# Symmetric-power local factors
# ----------------------------------------------------------------------------

def _satake_polynomial(lambda_p: float, m: int) -> np.ndarray:
    """Coefficients of prod_v (1 - v x) over the Satake values alpha^{m-1-2i}.

    Pairs alpha^d, alpha^{-d} give ``1 - V_d x + x^2`` with ``V_d = alpha^d +
    alpha^{-d}`` from ``V_{d+1} = lambda V_d - V_{d-1}``; odd ``m`` adds the
    middle value 1.
    """
    V = [2.0, float(lambda_p)]
    for _ in range(m):
        V.append(lambda_p * V[-1] - V[-2])
    poly = np.array([1.0])
    for d in range(m - 1, 0, -2):
        poly = np.convolve(poly, [1.0, -V[d], 1.0])
    if m % 2:
        poly = np.convolve(poly, [1.0, -1.0])
    return poly


def sym_power_local(lambda_p: float, m: int, k: int) -> float:
    """A(p^k) for the sym^{m-1} lift: ``h_k`` of the Satake values.

    Uses ``h_k = -sum_{i>=1} P_i h_{k-i}`` where ``P`` is the Satake
    polynomial. For m = 3 this is
    ``h_k = (lambda^2 - 1)(h_{k-1} - h_{k-2}) + h_{k-3}``.
    """
    if abs(lambda_p) > 2.0 + 1e-9:
        raise PrePostError(f"|lambda_p| = {abs(lambda_p)} exceeds 2")
    if m < 2 or k < 0:
        raise PrePostError("need m >= 2 and k >= 0")
    poly = _satake_polynomial(lambda_p, m)
    h = [1.0]
    for j in range(1, k + 1):
        h.append(-sum(poly[i] * h[j - i] for i in range(1, min(j, m) + 1)))
    return h[k]


# ----------------------------------------------------------------------------
# Coefficient tables
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SymPowerSource:
    """sym^{m-1} lift of Delta (m = 3 is the symmetric square)."""
    m: int = 3
    tau_method: str = "pentagonal"

    @property
    def label(self) -> str:
        return f"sym_power(delta,m={self.m})"

    @property
    def automorphic(self) -> bool:
        return True


@dataclass(frozen=True)
class SyntheticSource:
    """Deterministic pseudo-random values in [-sqrt 3, sqrt 3]; not automorphic."""
    seed: int = 0
    m: int = 3

    @property
    def label(self) -> str:
        return f"synthetic(seed={self.seed})"

    @property
    def automorphic(self) -> bool:
        return False


@dataclass(frozen=True)
class ConstantSource:
    """A(n) = value for every n >= 1; for plumbing checks."""
    value: float = 1.0
    m: int = 3

    @property
    def label(self) -> str:
        return f"constant({self.value!r})"

    @property
    def automorphic(self) -> bool:
        return False


@dataclass(frozen=True)
class CoefficientTable:
    """A(n) for 1 <= n <= N (``values[0]`` is unused) with A(-n) = sign A(n)."""
    source: str
    m: int
    N: int
    values: np.ndarray = field(repr=False)
    negative_sign: int = 1
    automorphic: bool = True

    def __post_init__(self):
        if self.negative_sign not in (1, -1):
            raise PrePostError("negative_sign must be +1 or -1")
        if self.values.shape != (self.N + 1,):
            raise PrePostError("values must have length N + 1")
        if not np.all(np.isfinite(self.values)):
            raise PrePostError("coefficient values must be finite")
        self.values.setflags(write=False)

    def __call__(self, n: int) -> float:
        if n == 0 or abs(n) > self.N:
            raise RangeError(f"n={n} outside the table range 1..{self.N}")
        v = float(self.values[abs(n)])
        return v if n > 0 else self.negative_sign * v

    def symmetric(self, n: int) -> float:
        """A(n) + A(-n)."""
        return (1 + self.negative_sign) * float(self.values[n])

    def with_negative_sign(self, sign: int) -> "CoefficientTable":
        return CoefficientTable(self.source, self.m, self.N, self.values, sign, self.automorphic)


def _smallest_prime_factor(N: int) -> np.ndarray:
    spf = np.zeros(N + 1, dtype=np.int64)
    for p in range(2, math.isqrt(N) + 1):
        if spf[p] == 0:
            block = spf[p * p :: p]
            block[block == 0] = p
    idx = np.arange(N + 1)
    spf[spf == 0] = idx[spf == 0]
    return spf


def _multiplicative(N: int, local) -> np.ndarray:
    """A(n) = prod over p^e || n of local(p, e)."""
    A = np.ones(N + 1)
    A[0] = 0.0
    spf = _smallest_prime_factor(N)
    primes = np.nonzero(spf[2:] == np.arange(2, N + 1))[0] + 2
    for p in primes.tolist():
        pk, e = p, 1
        while pk <= N:
            idx = np.arange(pk, N + 1, pk)
            idx = idx[(idx // pk) % p != 0]
            A[idx] *= local(p, e)
            pk *= p
            e += 1
    return A


def build_table(source, N: int, negative_sign: int = 1) -> CoefficientTable:
    """Tabulate A(1..N) for a coefficient source."""
    if N > MAX_N:
        raise CapacityError(f"N={N} exceeds the table cap {MAX_N}")
    if N < 1:
        raise PrePostError("N must be at least 1")
    if isinstance(source, SymPowerSource):
        hecke = tau_table(N, source.tau_method)
        lam = hecke.lam
        m = source.m
        memo: dict[int, list[float]] = {}

        def local(p, e):
            hs = memo.get(p)
            if hs is None or len(hs) <= e:
                hs = [sym_power_local(lam[p], m, k) for k in range(e + 1)]
                memo[p] = hs
            return hs[e]

        values = _multiplicative(N, local)
    elif isinstance(source, SyntheticSource):
        rng = np.random.Generator(np.random.Philox(source.seed))
        values = np.concatenate([[0.0], rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), N)])
        values[1] = 1.0
    elif isinstance(source, ConstantSource):
        values = np.full(N + 1, float(source.value))
        values[0] = 0.0
    else:
        raise PrePostError(f"unknown coefficient source {source!r}")
    return CoefficientTable(source.label, source.m, N, values, negative_sign, source.automorphic)


def rankin_selberg_stat(table: CoefficientTable, X: float) -> float:
    """(1/X) sum_{n <= X} |A(n)|^2 over positive n."""
    if X > table.N:
        raise RangeError(f"X={X} exceeds table size {table.N}")
    if X < 1:
        raise PrePostError("X must be at least 1")
    top = int(math.floor(X))
    return float(np.sum(table.values[1 : top + 1] ** 2)) / X


# ----------------------------------------------------------------------------
# Cache
# ----------------------------------------------------------------------------

def cache_dir(override=None) -> Path:
    """Cache directory: explicit override, else ``$VORONOI_CACHE_DIR``, else ~/.cache/gl_voronoi."""
    if override:
        return Path(override)
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "gl_voronoi"


def _table_body(table: CoefficientTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "A"])
    for n in range(1, table.N + 1):
        w.writerow([n, f"{table.values[n]:.17g}"])
    return buf.getvalue()


def save_table(table: CoefficientTable, path) -> Path:
    """CSV with ``#`` header lines (version, source, m, N, sign, sha256 of the body)."""
    path = Path(path)
    body = _table_body(table)
    digest = hashlib.sha256(body.encode()).hexdigest()
    header = (
        f"# version={_CACHE_VERSION}\n# source={table.source}\n# m={table.m}\n"
        f"# N={table.N}\n# negative_sign={table.negative_sign}\n"
        f"# automorphic={int(table.automorphic)}\n# sha256={digest}\n"
    )
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(header + body)
        tmp.replace(path)
    except OSError as exc:
        raise CacheError(f"cannot write {path}: {exc}") from exc
    return path


def load_table(path) -> CoefficientTable:
    """Read a cache file written by :func:`save_table`, verifying its checksum."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CacheError(f"cannot read {path}: {exc}") from exc
    meta = {}
    lines = text.splitlines(keepends=True)
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        key, _, val = lines[i][1:].strip().partition("=")
        meta[key] = val
        i += 1
    body = "".join(lines[i:])
    try:
        if int(meta["version"]) != _CACHE_VERSION:
            raise CacheError(f"unsupported cache version {meta['version']}")
        if hashlib.sha256(body.encode()).hexdigest() != meta["sha256"]:
            raise CacheError(f"checksum mismatch in {path}")
        N = int(meta["N"])
        rows = list(csv.reader(io.StringIO(body)))[1:]
        if len(rows) != N:
            raise CacheError(f"{path} has {len(rows)} rows, header says {N}")
        values = np.zeros(N + 1)
        for n, (idx, val) in enumerate(rows, start=1):
            if int(idx) != n:
                raise CacheError(f"row order broken at n={n}")
            values[n] = float(val)
        return CoefficientTable(meta["source"], int(meta["m"]), N, values,
                                int(meta["negative_sign"]), bool(int(meta.get("automorphic", "1"))))
    except CacheError:
        raise
    except (KeyError, ValueError) as exc:
        raise CacheError(f"malformed cache file {path}: {exc}") from exc


def _cache_name(source, N: int, negative_sign: int) -> str:
    safe = "".join(ch if ch.isalnum() else "_" for ch in source.label)
    return f"{safe}_N{N}_s{'p' if negative_sign > 0 else 'm'}.csv"


def cached_table(source, N: int, negative_sign: int = 1, directory=None) -> CoefficientTable:
    """Load the table from the cache, building and saving it on a miss."""
    path = cache_dir(directory) / _cache_name(source, N, negative_sign)
    if path.exists():
        return load_table(path)
    table = build_table(source, N, negative_sign)
    save_table(table, path)
    return table


# ----------------------------------------------------------------------------
# Kloosterman sums
# ----------------------------------------------------------------------------

def _e(num: int, den: int) -> complex:
    r = (num % den) / den
    return complex(math.cos(2 * math.pi * r), math.sin(2 * math.pi * r))


def kloosterman(a: int, b: int, c: int) -> float:
    """S(a, b; c) = sum over units x mod c of e((a x + b x^{-1}) / c), by brute force."""
    if c < 1:
        raise PrePostError("modulus must be positive")
    total = 0j
    for x in range(c):
        if math.gcd(x, c) == 1:
            total += _e(a * x + b * pow(x, -1, c), c)
    assert abs(total.imag) <= 1e-9 * max(1.0, c), "Kloosterman sum has an imaginary part"
    return total.real


def hyper_kloosterman(h_bar: int, n: int, d, q: int) -> complex:
    """Nested sum KL(h_bar, n; d, q) with ``m = len(d) + 2``.

    Moduli are ``q_i = q / (d_1 ... d_i)``; the sum runs over units
    ``t_i mod q_i`` of
    ``e(h_bar t_1 / q_1) e(t_1^{-1} t_2 / q_2) ... e(n t_{m-2}^{-1} / q_{m-2})``.
    """
    d = [int(v) for v in d]
    if q < 1 or any(v < 1 for v in d):
        raise PrePostError("q and the d_i must be positive")
    moduli = []
    rest = q
    for i, di in enumerate(d):
        if rest % di:
            raise DivisibilityError(f"d_{i + 1}={di} does not divide {rest}")
        rest //= di
        moduli.append(rest)
    if not moduli:
        raise PrePostError("need at least one d_i (m >= 3)")
    if q * math.prod(moduli) > 10**6:
        raise CapacityError("hyper-Kloosterman modulus product exceeds 1e6")

    def units(c):
        return [t for t in range(c) if math.gcd(t, c) == 1]

    def inner(level: int, prev_inv: int) -> complex:
        c = moduli[level]
        total = 0j
        last = level == len(moduli) - 1
        for t in units(c):
            inv = pow(t, -1, c) if c > 1 else 0
            term = _e(prev_inv * t, c)
            if last:
                term *= _e(n * inv, c)
                total += term
            else:
                total += term * inner(level + 1, inv)
        return total

    return inner(0, h_bar)
