import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import exact_batch
from seqest import (
    GaussianPrior,
    InvalidParameterError,
    PosteriorState,
    StoppingConfig,
    ci_halfwidth,
    posterior_init,
    posterior_summary,
    posterior_update,
    should_stop,
)


@pytest.mark.parametrize("mu0, tau2, lam, eta", [(2, 1, 1, 2), (0, 4, 0.25, 0), (2, 0.5, 2, 4)])
def test_init(mu0, tau2, lam, eta):
    s = posterior_init(GaussianPrior(mu0, tau2))
    assert (s.precision, s.information, s.count) == (lam, eta, 0)
    assert posterior_summary(s) == pytest.approx((mu0, tau2))


def test_update_examples():
    s = posterior_update(posterior_init(GaussianPrior(2, 1)), 3, 1)
    assert posterior_summary(s) == pytest.approx((2.5, 0.5))
    s = posterior_update(s, 1, 1)
    assert posterior_summary(s) == pytest.approx((2.0, 1 / 3))
    assert s.count == 2
    diffuse = posterior_update(posterior_init(GaussianPrior(0, 1e12)), 7, 2)
    assert posterior_summary(diffuse) == pytest.approx((7, 0.5), rel=1e-9)


def test_update_rejects_bad_precision():
    s = posterior_init(GaussianPrior(0, 1))
    for z in (0.0, -1.0):
        with pytest.raises(InvalidParameterError):
            posterior_update(s, 1.0, z)


@pytest.mark.parametrize("lam, eta, expected", [(2, 5, (2.5, 0.5)), (4, 0, (0, 0.25))])
def test_summary(lam, eta, expected):
    assert posterior_summary(PosteriorState(lam, eta, 1)) == expected


@pytest.mark.parametrize("lam, alpha, expected", [(1, 1.96, 1.96), (4, 2, 1.0), (24.01, 1.96, 0.4)])
def test_ci_halfwidth(lam, alpha, expected):
    assert ci_halfwidth(PosteriorState(lam, 0.0), alpha) == pytest.approx(expected, rel=1e-12)


def test_should_stop_examples():
    prior = GaussianPrior(2, 1)
    cfg = StoppingConfig.for_prior(prior, eps=0.4)
    assert cfg.gamma == pytest.approx(23.01)
    assert should_stop(PosteriorState(1 + 23.5, 0, 30), cfg, prior)
    assert not should_stop(PosteriorState(1 + 22.9, 0, 30), cfg, prior)
    neg = StoppingConfig(1.0, 1.0, -0.5)
    assert should_stop(posterior_init(prior), neg, prior)


measurements = st.lists(
    st.tuples(st.floats(-50, 50), st.floats(0.01, 10)), min_size=1, max_size=40)
priors = st.builds(GaussianPrior, st.floats(-10, 10), st.floats(0.01, 100))


def _absorb(prior, pairs):
    s = posterior_init(prior)
    for y, z in pairs:
        s = posterior_update(s, y, z)
    return s


def _close(a, b, rel):
    return abs(a - b) <= rel * max(abs(a), abs(b), 1e-300) or abs(a - b) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(priors, measurements, st.randoms(use_true_random=False))
def test_permutation_invariance(prior, pairs, rnd):
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    a, b = _absorb(prior, pairs), _absorb(prior, shuffled)
    assert _close(a.mean, b.mean, 1e-10)
    assert _close(a.variance, b.variance, 1e-10)


@settings(max_examples=300, deadline=None)
@given(priors, measurements)
def test_batch_sequential_equivalence(prior, pairs):
    s = _absorb(prior, pairs)
    lam, eta = exact_batch(prior, [p[0] for p in pairs], [p[1] for p in pairs])
    assert _close(s.precision, lam, 1e-12)
    assert _close(s.information, eta, 1e-12)
    assert _close(s.mean, eta / lam, 1e-12)
    assert s.count == len(pairs)


@settings(max_examples=300, deadline=None)
@given(priors, st.floats(0.5, 3.0), st.floats(0.05, 2.0),
       st.lists(st.floats(0.01, 5), min_size=1, max_size=60))
def test_stopping_forms_agree_and_monotone(prior, alpha, eps, zs):
    cfg = StoppingConfig.for_prior(prior, eps, alpha)
    s = posterior_init(prior)
    prev_lam, prev_hw = s.precision, ci_halfwidth(s, alpha)
    for z in zs:
        s = posterior_update(s, 0.0, z)
        hw = ci_halfwidth(s, alpha)
        assert s.precision > prev_lam and hw < prev_hw
        prev_lam, prev_hw = s.precision, hw
        if abs((s.precision - prior.precision) - cfg.gamma) > 1e-9 * max(1.0, abs(cfg.gamma)):
            assert should_stop(s, cfg, prior) == (hw <= eps)


def test_stopping_config_consistency():
    prior = GaussianPrior(0, 2.0)
    cfg = StoppingConfig.for_prior(prior, 0.4)
    assert cfg.alpha == 1.96 and cfg.matches(prior)
    assert not cfg.matches(GaussianPrior(0, 3.0))


def test_random_permutations_exhaustively_small():
    prior = GaussianPrior(1.0, 2.0)
    rnd = random.Random(4)
    pairs = [(rnd.uniform(-3, 3), rnd.uniform(0.1, 2)) for _ in range(6)]
    import itertools
    ref = _absorb(prior, pairs)
    for perm in itertools.permutations(pairs):
        s = _absorb(prior, perm)
        assert _close(s.mean, ref.mean, 1e-12) and _close(s.precision, ref.precision, 1e-15)
