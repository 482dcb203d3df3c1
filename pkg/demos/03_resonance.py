"""Resonance of sym^2 coefficients against e(alpha n^(1/3)).

When alpha = 3 q^(1/3) for a positive integer q, the twisted sum picks up a
main term of size X^(2/3) proportional to A(q) + A(-q). Away from those
values the sum is small.

Run:  python demos/03_resonance.py
"""
# %%
import numpy as np

from gl_voronoi import (BumpFunction, LanglandsParams, SymPowerSource, alpha_scan, build_table,
                        calibrate_ck, predict_corollary11, smooth_sum)
from gl_voronoi.resonance import SumSpec

table = build_table(SymPowerSource(m=3), 100_000)
bump = BumpFunction()

# %% [markdown]
# The expansion constants for the lift's own archimedean parameters: c_0 is
# pinned at -1/sqrt(3) and c_1 is fitted from exact transform values.

# %%
coeffs = calibrate_ck(LanglandsParams.sym2_lift(), bump, 1e3, np.geomspace(1, 100, 16), 1, fix_c0=True)
print("c_0, c_1 =", coeffs.c[0].real, coeffs.c[1].real)

# %% [markdown]
# Direct sum against the prediction at q = 1 and q = 2. The printed kernel
# sign (kernel_sign=+1) is shown for comparison; the dual kernel, which makes
# the summation formula an identity, is the default.

# %%
for q in (1, 2):
    alpha = 3 * q ** (1 / 3)
    for X in (1e4, 4e4):
        direct = smooth_sum(table, SumSpec(alpha, 1 / 3, X, 1, bump))
        pred = predict_corollary11(table, q, X, 3, r=1, coeffs=coeffs).main_term
        other = predict_corollary11(table, q, X, 3, r=1, coeffs=coeffs, kernel_sign=1).main_term
        print(f"q={q} X={X:7.0f}  sum {direct:.2f}  prediction {pred:.2f}  "
              f"rel. error {abs(direct - pred) / abs(pred):.3f}  (printed sign {abs(direct - other) / abs(other):.3f})")

# %% [markdown]
# A scan across alpha shows peaks at 3 * 2^(1/3) and 3 * 3^(1/3).

# %%
grid = np.arange(3 * 1.5 ** (1 / 3), 3 * 3.5 ** (1 / 3), 0.02)
scan = alpha_scan(table, grid, 1 / 3, 4e4, 3, bump, threads=4)
print("peaks:", [round(p, 3) for p in scan.peaks], " expected:", round(3 * 2 ** (1 / 3), 3),
      round(3 * 3 ** (1 / 3), 3))
top = max(r.abs_sum for r in scan.rows)
for r in scan.rows[::4]:
    print(f"alpha {r.alpha:.3f}  |sum| {r.abs_sum:8.2f}  " + "#" * int(40 * r.abs_sum / top))
