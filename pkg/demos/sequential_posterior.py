"""
Sequential posterior updates and the stopping rule
==================================================

A fusion centre starts from a Gaussian prior and absorbs one noisy
measurement at a time. It stops once the credible interval is narrow enough.
"""

import numpy as np

from seqest import (GaussianPrior, PrecisionBand, StoppingConfig, ci_halfwidth,
                    posterior_init, posterior_update, sample_population, should_stop,
                    trial_rng)

prior = GaussianPrior(mean=2.0, variance=1.0)
band = PrecisionBand(0.2, 1.0)
config = StoppingConfig.for_prior(prior, eps=0.4)
print(f"threshold on gathered precision: gamma = {config.gamma:.2f}")

# one population of 50 sensors; precisions are 1/noise variance
pop = sample_population(prior, band, 50, trial_rng(seed=1, trial=0))
print(f"true theta = {pop.theta_true:.4f}")

# absorb the strongest sensors first and watch the interval shrink
state = posterior_init(prior)
for i in np.argsort(-pop.z):
    state = posterior_update(state, pop.y[i], pop.z[i])
    if state.count % 5 == 0 or should_stop(state, config, prior):
        print(f"k={state.count:2d}  mean={state.mean:.4f}  "
              f"half-width={ci_halfwidth(state, config.alpha):.4f}")
    if should_stop(state, config, prior):
        break
print(f"stopped after {state.count} of {len(pop)} transmissions")
