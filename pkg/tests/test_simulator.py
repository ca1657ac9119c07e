import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqest import (
    GaussianPrior,
    InvalidParameterError,
    MonteCarloSetup,
    PrecisionBand,
    Scheme,
    SensorPopulation,
    StoppingConfig,
    monte_carlo,
    monte_carlo_fixed_k,
    run_fixed_k_trial,
    run_full_trial,
    run_ordered_trial,
    run_unordered_trial,
    sample_population,
    simulate_timer_protocol,
    trial_rng,
)
from seqest.simulator import EventKind, _draw_block, aggregate

PRIOR = GaussianPrior(2.0, 1.0)
BAND = PrecisionBand(0.2, 1.0)


class FixedKeys:
    """Stands in for a Generator; the permutation is the argsort of the keys."""

    def __init__(self, keys):
        self.keys = np.asarray(keys, dtype=float)

    def random(self, n):
        assert n == self.keys.size
        return self.keys


def _cfg(gamma):
    return StoppingConfig(1.96, 0.4, gamma)


def _pop(z, y=None, theta=0.0):
    z = np.asarray(z, dtype=float)
    return SensorPopulation(theta, z, np.zeros_like(z) if y is None else y)


def test_three_sensor_examples():
    pop = _pop([1.0, 0.5, 0.25], [1.0, 2.0, 3.0])
    # keys put the sensors in the order 2, 1, 0, i.e. precisions 0.25, 0.5, 1.0
    un = run_unordered_trial(pop, PRIOR, _cfg(1.2), FixedKeys([0.9, 0.5, 0.1]))
    assert un.k_star == 3 and un.stopped_early
    od = run_ordered_trial(pop, PRIOR, _cfg(1.2))
    assert od.k_star == 2 and od.stopped_early
    lam = 1 + 1.0 + 0.5
    assert od.estimate == pytest.approx((2.0 + 1.0 * 1.0 + 0.5 * 2.0) / lam)
    assert od.squared_error == od.estimate ** 2


def test_prior_already_sufficient():
    pop = _pop([0.7, 0.3])
    for out in (run_ordered_trial(pop, PRIOR, _cfg(-1.0)),
                run_unordered_trial(pop, PRIOR, _cfg(-1.0), np.random.default_rng(0))):
        assert out.k_star == 0 and out.estimate == 2.0 and out.stopped_early


def test_never_satisfied():
    pop = _pop([0.3, 0.3])
    out = run_ordered_trial(pop, PRIOR, _cfg(5.0))
    assert out.k_star == 2 and not out.stopped_early


def test_single_sensor():
    assert run_ordered_trial(_pop([0.9]), PRIOR, _cfg(0.5)).k_star == 1


def test_ordered_never_worse_than_any_permutation():
    rng = np.random.default_rng(8)
    for _ in range(30):
        pop = sample_population(PRIOR, BAND, 6, rng)
        gamma = rng.uniform(0, 6)
        od = run_ordered_trial(pop, PRIOR, _cfg(gamma)).k_star
        for perm in itertools.permutations(range(6)):
            keys = np.empty(6)
            keys[list(perm)] = np.arange(6)
            assert od <= run_unordered_trial(pop, PRIOR, _cfg(gamma), FixedKeys(keys)).k_star


def test_ordered_tie_break_by_index():
    pop = _pop([0.5, 0.5, 0.5], [1.0, 2.0, 3.0])
    out = run_ordered_trial(pop, PRIOR, _cfg(0.9))
    assert out.k_star == 2
    assert out.estimate == pytest.approx((2.0 + 0.5 + 1.0) / 2.0)


def test_full_trial():
    out = run_full_trial(_pop([1.0], [2.0]), GaussianPrior(0.0, 1.0))
    assert out.estimate == 1.0 and out.k_star == 1
    pop = sample_population(PRIOR, BAND, 20, trial_rng(1, 1))
    out = run_full_trial(pop, PRIOR)
    assert out.variance == pytest.approx(1 / (1 + pop.z.sum()), rel=1e-14)
    assert out.k_star == 20 and out.scheme is Scheme.FULL


def test_fixed_k():
    pop = sample_population(PRIOR, BAND, 12, trial_rng(2, 5))
    zero = run_fixed_k_trial(pop, PRIOR, 0, Scheme.ORDERED)
    assert zero.estimate == 2.0 and zero.squared_error == (2.0 - pop.theta_true) ** 2
    a = run_fixed_k_trial(pop, PRIOR, 12, Scheme.ORDERED)
    b = run_fixed_k_trial(pop, PRIOR, 12, Scheme.UNORDERED, np.random.default_rng(1))
    assert (a.estimate, a.squared_error, a.k_star) == (b.estimate, b.squared_error, b.k_star)
    with pytest.raises(InvalidParameterError):
        run_fixed_k_trial(pop, PRIOR, 13, Scheme.ORDERED)
    top3 = run_fixed_k_trial(pop, PRIOR, 3, Scheme.ORDERED)
    best = np.argsort(-pop.z)[:3]
    assert top3.variance == pytest.approx(1 / (1 + pop.z[best].sum()))


def test_timer_examples():
    pop = _pop([1.0, 0.5])
    log, out = simulate_timer_protocol(pop, PRIOR, _cfg(10.0))
    tx = [e for e in log if e.kind is EventKind.TRANSMISSION]
    assert [(e.time, e.sensor) for e in tx] == [(1.0, 0), (2.0, 1)]
    assert log[-1].kind is EventKind.STOP_BROADCAST
    log, out = simulate_timer_protocol(pop, PRIOR, _cfg(0.8))
    assert [e.kind for e in log] == [EventKind.TRANSMISSION, EventKind.STOP_BROADCAST]
    assert log[-1].time == 1.0 and out.k_star == 1
    log, out = simulate_timer_protocol(pop, PRIOR, _cfg(-1.0))
    assert len(log) == 1 and log[0].time == 0.0 and out.k_star == 0
    with pytest.raises(InvalidParameterError):
        simulate_timer_protocol(pop, PRIOR, _cfg(0.8), timer_coeff=0.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.01, 100.0), st.floats(-2, 30))
def test_timer_coefficient_does_not_change_order(seed, coeff, gamma):
    pop = sample_population(PRIOR, BAND, 30, trial_rng(seed, 0))
    log1, out1 = simulate_timer_protocol(pop, PRIOR, _cfg(gamma))
    log2, out2 = simulate_timer_protocol(pop, PRIOR, _cfg(gamma), timer_coeff=coeff)
    assert [e.sensor for e in log1] == [e.sensor for e in log2]
    assert out1 == out2 == run_ordered_trial(pop, PRIOR, _cfg(gamma))
    times = [e.time for e in log2]
    assert times == sorted(times)


def test_block_engine_matches_scalar_trials():
    setup = MonteCarloSetup.create(PRIOR, BAND, 50, 0.4)
    res = monte_carlo(setup, 300, seed=17, chunk=64)
    for t in range(300):
        rng = trial_rng(17, t)
        pop = sample_population(PRIOR, BAND, 50, rng)
        un = run_unordered_trial(pop, PRIOR, setup.stopping, rng)
        od = run_ordered_trial(pop, PRIOR, setup.stopping)
        fu = run_full_trial(pop, PRIOR)
        assert res.k_star[Scheme.UNORDERED][t] == un.k_star
        assert res.squared_error[Scheme.UNORDERED][t] == un.squared_error
        assert res.k_star[Scheme.ORDERED][t] == od.k_star
        assert res.squared_error[Scheme.ORDERED][t] == od.squared_error
        assert res.squared_error[Scheme.FULL][t] == fu.squared_error


def test_fixed_k_engine_matches_scalar_trials():
    setup = MonteCarloSetup.create(PRIOR, BAND, 20, 0.4)
    ks = [0, 1, 7, 20]
    stats = monte_carlo_fixed_k(setup, ks, 50, seed=4, chunk=16)
    for scheme in (Scheme.ORDERED, Scheme.UNORDERED):
        for k in ks:
            sq = []
            for t in range(50):
                rng = trial_rng(4, t)
                pop = sample_population(PRIOR, BAND, 20, rng)
                sq.append(run_fixed_k_trial(pop, PRIOR, k, scheme, rng).squared_error)
            assert stats[(scheme, k)] == aggregate(np.full(50, float(k)), np.array(sq))
    assert stats[(Scheme.ORDERED, 20)] == stats[(Scheme.UNORDERED, 20)]


def test_worker_and_chunk_invariance():
    setup = MonteCarloSetup.create(GaussianPrior(2.0, 2.5), BAND, 50, 0.4)
    ref = monte_carlo(setup, 2000, seed=3, workers=1, chunk=4096)
    for workers, chunk in ((3, 100), (2, 777), (1, 1)):
        other = monte_carlo(setup, 2000, seed=3, workers=workers, chunk=chunk)
        assert other.stats == ref.stats
        for s in ref.k_star:
            assert other.k_star[s].tobytes() == ref.k_star[s].tobytes()


def test_stopping_correctness_and_dominance():
    setup = MonteCarloSetup.create(PRIOR, BAND, 50, 0.4)
    block = _draw_block(setup, 21, 0, 2000)
    res = monte_carlo(setup, 2000, seed=21)
    gamma = setup.stopping.gamma
    order_u = np.argsort(block.keys, axis=1, kind="stable")
    order_o = np.argsort(-block.z, axis=1, kind="stable")
    for scheme, order in ((Scheme.UNORDERED, order_u), (Scheme.ORDERED, order_o)):
        zs = np.take_along_axis(block.z, order, axis=1)
        for t, k in enumerate(res.k_star[scheme]):
            if k < 50:
                assert math.fsum(zs[t, :k]) >= gamma - 1e-12
                assert math.fsum(zs[t, :k - 1]) < gamma + 1e-12
    assert np.all(res.k_star[Scheme.ORDERED] <= res.k_star[Scheme.UNORDERED])


def test_single_trial_aggregate():
    setup = MonteCarloSetup.create(PRIOR, BAND, 10, 0.4)
    res = monte_carlo(setup, 1, seed=0)
    for s, st_ in res.stats.items():
        assert st_.trials == 1 and not st_.se_defined
        assert st_.se_k == 0.0 and st_.se_mse == 0.0
        assert st_.mean_k == res.k_star[s][0] and st_.mse == res.squared_error[s][0]
    with pytest.raises(InvalidParameterError):
        monte_carlo(setup, 0, seed=0)


def test_identical_seeds_identical_aggregates():
    setup = MonteCarloSetup.create(PRIOR, BAND, 30, 0.4)
    assert monte_carlo(setup, 500, 9).stats == monte_carlo(setup, 500, 9).stats
    assert monte_carlo(setup, 500, 9).stats != monte_carlo(setup, 500, 10).stats


def test_setup_validation():
    with pytest.raises(InvalidParameterError):
        MonteCarloSetup(PRIOR, BAND, 10, StoppingConfig.for_prior(GaussianPrior(0, 3.0), 0.4))
    with pytest.raises(InvalidParameterError):
        MonteCarloSetup.create(PRIOR, PrecisionBand(0.0, 1.0), 10, 0.4)
