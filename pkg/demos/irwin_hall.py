"""
The Irwin-Hall distribution at k = 50
=====================================

The alternating series for the CDF of a sum of uniforms cancels badly for
large k. Double-double evaluation keeps it accurate; compare against a
simulated sum.
"""

import numpy as np

from seqest import irwin_hall_cdf
from seqest.analytic import irwin_hall_cdf_recursive

k = 50
x = np.array([10.3, 20.0, 25.0, 30.0, 39.7])
rng = np.random.default_rng(0)
sums = rng.random((200_000, k)).sum(axis=1)

print(" x       series        recursion     empirical")
for xi, f, g in zip(x, irwin_hall_cdf(x, k), irwin_hall_cdf_recursive(x, k)):
    print(f"{xi:5.1f}  {f:.6e}  {g:.6e}  {np.mean(sums <= xi):.6e}")

# the same series summed naively in floats falls apart above the mean
from math import comb, factorial
for xi in (25.0, 40.0):
    naive = sum((-1) ** j * comb(k, j) * (xi - j) ** k for j in range(int(xi) + 1)) / factorial(k)
    print(f"naive float series at x={xi}: {naive:.6g}  (accurate value {irwin_hall_cdf(xi, k):.6g})")
