"""Below the resonance threshold the twisted sums are tiny.

With beta = 1/5 and alpha = 1 the smooth sum decays as X grows. Replacing
the smooth weight by the sharp cut X < n <= 2X costs boundary terms, and the
result stays well inside X^(2/3).

Run:  python demos/04_decay_and_sharp_cut.py
"""
# %%
from gl_voronoi import BumpFunction, SymPowerSource, build_table, regime, sharp_sum, smooth_sum
from gl_voronoi.resonance import SumSpec, sharpening_gap_bound

table = build_table(SymPowerSource(m=3), 100_000)
bump = BumpFunction()

# %%
print(f"{'X':>7} {'regime':>11} {'|smooth sum|':>13} {'|untwisted|':>12} {'|sharp sum|':>12} {'X^(2/3)':>8}")
for X in (1e3, 3e3, 1e4, 3e4):
    s = abs(smooth_sum(table, SumSpec(1.0, 0.2, X, 1, bump)))
    flat = abs(smooth_sum(table, SumSpec(0.0, 0.2, X, 1, bump)))
    cut = abs(sharp_sum(table, 1.0, 0.2, X))
    print(f"{X:7.0f} {regime(1.0, 0.2, X, 3):>11} {s:13.4f} {flat:12.4f} {cut:12.4f} {X ** (2 / 3):8.1f}")

# %% [markdown]
# The sharpened weight equals 1 on [1, 2] and falls off over a strip of width
# 1/delta. Its sum differs from the sharp one by at most the boundary terms.

# %%
X = 1e4
for delta in (10.0, 100.0, 1000.0):
    smooth = smooth_sum(table, SumSpec.sharpened(1.0, 0.2, X, delta))
    gap = abs(sharp_sum(table, 1.0, 0.2, X) - smooth)
    print(f"delta {delta:6.0f}: |sharp - sharpened| = {gap:8.4f}  boundary bound {sharpening_gap_bound(table, X, delta):8.2f}")
