"""Genuine GL(3) coefficients from the symmetric square of Delta.

Ramanujan's tau comes from the q-expansion of Delta. Its Hecke eigenvalues
fix Satake parameters at each prime, and the symmetric-square lift is
multiplicative with explicit prime-power values.

Run:  python demos/02_coefficients.py
"""
# %%
import math

from gl_voronoi import (SymPowerSource, build_table, hyper_kloosterman, kloosterman,
                        rankin_selberg_stat, tau_table)

hecke = tau_table(30)
print("tau(1..10):", hecke.tau[1:11])
print("lambda(2) =", hecke.lam[2], " lambda(3) =", hecke.lam[3])

# %% [markdown]
# Deligne's bound |lambda(p)| <= 2 holds at every prime, and the lift has
# A(p) = lambda(p)^2 - 1.

# %%
table = build_table(SymPowerSource(m=3), 100_000)
for n in (1, 2, 3, 4, 6, 12):
    print(f"A({n:2d}) = {table(n):+.6f}")
print("A(2) A(3) - A(6) =", table(2) * table(3) - table(6))

# %% [markdown]
# The mean square of A(n) stays bounded (the Rankin-Selberg estimate).

# %%
for X in (1e2, 1e3, 1e4, 1e5):
    print(f"(1/X) sum |A(n)|^2 at X = {X:>8.0f}: {rankin_selberg_stat(table, X):.4f}")

# %% [markdown]
# Kloosterman sums enter the general-modulus formula. At prime moduli Weil's
# bound |S| <= 2 sqrt(p) is sharp up to a constant.

# %%
for p in (5, 7, 11, 13):
    worst = max(abs(kloosterman(a, b, p)) for a in range(1, p) for b in range(1, p))
    print(f"p = {p:2d}: max |S(a,b;p)| = {worst:.4f}  2 sqrt p = {2 * math.sqrt(p):.4f}")
print("hyper-Kloosterman, d = (1), q = 7, h = n = 1:", hyper_kloosterman(1, 1, (1,), 7))
