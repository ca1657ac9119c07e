"""
Countdown timers instead of scheduling
======================================

Each sensor starts a timer proportional to its noise variance, so the most
precise sensor speaks first. The fusion centre broadcasts a stop once it has
heard enough.
"""

from seqest import (GaussianPrior, PrecisionBand, StoppingConfig, run_ordered_trial,
                    sample_population, simulate_timer_protocol, trial_rng)

prior = GaussianPrior(2.0, 1.0)
config = StoppingConfig.for_prior(prior, eps=0.4)
pop = sample_population(prior, PrecisionBand(0.2, 1.0), 50, trial_rng(7, 0))

log, outcome = simulate_timer_protocol(pop, prior, config, timer_coeff=1e-3)
for event in log[:4] + ["..."] + log[-3:]:
    print(event)
print(outcome)
# same answer as absorbing the sorted precisions directly
assert outcome == run_ordered_trial(pop, prior, config)
