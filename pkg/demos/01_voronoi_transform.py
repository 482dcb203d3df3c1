"""The GL(3) Voronoi transform Psi, computed two ways.

Psi(x) is a Mellin-Barnes integral of the test function against a ratio of
gamma products. We evaluate it exactly on a vertical line, compare with the
oscillatory leading term, and then fit the next coefficients from the exact
values.

Run:  python demos/01_voronoi_transform.py
"""
# %%
import numpy as np

from gl_voronoi import (BumpFunction, ExpansionCoefficients, LanglandsParams, calibrate_ck,
                        psi_asymptotic, psi_contour_many)

params = LanglandsParams.tempered_example()       # mu = (i/2, 0, -i/2)
bump = BumpFunction()                             # smooth, supported on [1, 2]
X = 1e3
print("parameters:", params.mu)

# %% [markdown]
# The contour value is exact up to quadrature error. The asymptotic form keeps
# only the k = 0 term with c_0 = -1/sqrt(3), so its relative error should
# shrink like (xX)^(-1/3).

# %%
xs = [0.1, 0.3, 1.0, 3.0, 10.0]
contour = psi_contour_many(xs, bump, X, params)
lead = ExpansionCoefficients.analytic_leading(3)
print(f"{'x':>6} {'|Psi| contour':>14} {'rel. deviation':>15} {'(xX)^-1/3':>10}")
for x, c in zip(xs, contour):
    a = psi_asymptotic(x, bump, X, params, lead).value
    print(f"{x:6.1f} {abs(c.value):14.6e} {abs(c.value - a) / abs(c.value):15.3e} {(x * X) ** (-1 / 3):10.3e}")

# %% [markdown]
# Least squares on a grid of exact values recovers c_0 and estimates c_1, c_2.
# Each extra term removes another factor of (xX)^(-1/3).

# %%
grid = np.geomspace(1.0, 100.0, 24)
exact = psi_contour_many(grid, bump, X, params)
for r in (0, 1, 2):
    fit = calibrate_ck(params, bump, X, grid, r, contour=exact)
    at_one = exact[0].value
    dev = abs(at_one - psi_asymptotic(1.0, bump, X, params, fit).value) / abs(at_one)
    coeffs = ", ".join(f"{c.real:+.5f}{c.imag:+.1e}i" for c in fit.c)
    print(f"r={r}: c = [{coeffs}]  residual {fit.residual:.1e}  deviation at x=1 {dev:.1e}")
print(f"reference c_0 = {-1 / np.sqrt(3):+.5f}")
