"""
Checking the closed-form bound against quadrature
=================================================

The ordered upper bound is a sum of polynomial integrals evaluated exactly
in rational arithmetic. Each one is compared with adaptive quadrature of the
raw integrand.
"""

from seqest import GaussianPrior, PrecisionBand, ProblemInstance
from seqest.analytic import upper_bound_diagnostics

inst = ProblemInstance.from_targets(50, PrecisionBand(0.2, 1.0), GaussianPrior(2.0, 1.0))
rows = upper_bound_diagnostics(inst)
worst = max(rows, key=lambda r: r.rel_diff)
print(f"{len(rows)} (k, j) pairs, worst relative difference {worst.rel_diff:.2e} at "
      f"k={worst.k}, j={worst.j}")

# the alternative coefficient reading does not reproduce the integral
for r in rows:
    if r.k == 40 and r.j in (0, 5, 10):
        print(f"k={r.k} j={r.j:2d}  closed form {r.s1_closed_form:.6e}  "
              f"quadrature {r.quadrature:.6e}  other reading {r.s1_alt_binomial:.3e}")
