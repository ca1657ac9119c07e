"""
How many sensors transmit?
==========================

Random-order reporting versus strongest-first reporting. The expected count
for random order has a closed form; the ordered scheme is bracketed by two
bounds and checked by simulation.
"""

from seqest import (GaussianPrior, MonteCarloSetup, PrecisionBand, ProblemInstance, Scheme,
                    monte_carlo, ordered_lower_bound, ordered_upper_bound,
                    unordered_expected_k)

band = PrecisionBand(0.2, 1.0)
print("tau2  E[k] random  (MC)     ordered MC  [lower, upper]")
for tau2 in (0.5, 1.0, 2.0, 5.0):
    prior = GaussianPrior(2.0, tau2)
    inst = ProblemInstance.from_targets(50, band, prior, eps=0.4)
    res = monte_carlo(MonteCarloSetup.create(prior, band, 50, 0.4), 20_000, seed=3,
                      schemes=(Scheme.UNORDERED, Scheme.ORDERED))
    u, o = res.stats[Scheme.UNORDERED], res.stats[Scheme.ORDERED]
    print(f"{tau2:4.1f}  {unordered_expected_k(inst):6.3f}     ({u.mean_k:6.3f})  "
          f"{o.mean_k:6.3f}      [{ordered_lower_bound(inst):6.3f}, "
          f"{ordered_upper_bound(inst):6.3f}]")
