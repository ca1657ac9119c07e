"""Ordered-transmission sequential Bayesian estimation over a simulated sensor network."""

from .analytic import (
    irwin_hall_cdf,
    order_statistic_pdf,
    ordered_lower_bound,
    ordered_upper_bound,
    prob_topk_sum_leq,
    unordered_expected_k,
    upper_bound_quadrature_oracle,
)
from .errors import ConfigError, InvalidParameterError, NumericalFailure, OutputFileError
from .estimator import (
    PosteriorState,
    StoppingConfig,
    ci_halfwidth,
    posterior_init,
    posterior_summary,
    posterior_update,
    should_stop,
)
from .model import (
    GaussianPrior,
    PrecisionBand,
    ProblemInstance,
    SensorPopulation,
    gamma_threshold,
    sample_population,
    trial_rng,
)
from .simulator import (
    AggregateStats,
    MonteCarloSetup,
    Scheme,
    TrialOutcome,
    monte_carlo,
    monte_carlo_fixed_k,
    run_fixed_k_trial,
    run_full_trial,
    run_ordered_trial,
    run_unordered_trial,
    simulate_timer_protocol,
)

__version__ = "0.1.0"
