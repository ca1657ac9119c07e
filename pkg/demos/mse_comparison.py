"""
Estimation error: stopping rule and fixed budgets
=================================================

With the stopping rule both schemes reach about the same MSE, the ordered
one with fewer transmissions. With a fixed budget of k transmissions,
picking the k best sensors beats picking k at random.
"""

from seqest import GaussianPrior, MonteCarloSetup, PrecisionBand, Scheme, monte_carlo, monte_carlo_fixed_k

setup = MonteCarloSetup.create(GaussianPrior(2.0, 1.0), PrecisionBand(0.2, 1.0), 50, eps=0.4)
res = monte_carlo(setup, 20_000, seed=11)
for scheme, st in res.stats.items():
    print(f"{scheme.value:10s} mean k = {st.mean_k:6.2f}  MSE = {st.mse:.5f} +/- {st.se_mse:.5f}")

print("\n k   MSE ordered   MSE unordered")
fixed = monte_carlo_fixed_k(setup, (1, 5, 10, 20, 30, 50), 20_000, seed=11)
for k in (1, 5, 10, 20, 30, 50):
    print(f"{k:2d}   {fixed[(Scheme.ORDERED, k)].mse:.5f}       {fixed[(Scheme.UNORDERED, k)].mse:.5f}")
