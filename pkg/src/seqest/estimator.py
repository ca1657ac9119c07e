"""Information-form sequential Bayesian updates and the stopping predicate.

The posterior after ``k`` absorbed measurements is kept as the pair
``precision = 1/tau0^2 + sum z`` and ``information = mu0/tau0^2 + sum z*y``;
mean and variance are read off as ``information/precision`` and
``1/precision``. Both sums are carried in double-double form (a rounded
value plus its residual), so the result is the correctly rounded batch sum
in practice and does not depend on the order of absorption, even when the
``z*y`` terms cancel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ._ddouble import dd_add, two_prod
from .errors import InvalidParameterError
from .model import GaussianPrior, gamma_threshold

__all__ = [
    "DEFAULT_ALPHA",
    "PosteriorState",
    "StoppingConfig",
    "posterior_init",
    "posterior_update",
    "posterior_summary",
    "ci_halfwidth",
    "should_stop",
]

DEFAULT_ALPHA = 1.96


@dataclass(frozen=True)
class PosteriorState:
    """Information-form posterior; the ``*_lo`` fields hold rounding residuals."""

    precision: float
    information: float
    count: int = 0
    precision_lo: float = 0.0
    information_lo: float = 0.0

    @property
    def mean(self) -> float:
        return self.information / self.precision

    @property
    def variance(self) -> float:
        return 1.0 / self.precision


@dataclass(frozen=True)
class StoppingConfig:
    """Confidence multiplier, target half-width and the cached threshold."""

    alpha: float
    eps: float
    gamma: float

    @classmethod
    def for_prior(cls, prior: GaussianPrior, eps: float,
                  alpha: float = DEFAULT_ALPHA) -> StoppingConfig:
        return cls(alpha, eps, gamma_threshold(alpha, eps, prior.variance))

    def matches(self, prior: GaussianPrior) -> bool:
        return self.gamma == gamma_threshold(self.alpha, self.eps, prior.variance)


def posterior_init(prior: GaussianPrior) -> PosteriorState:
    return PosteriorState(1.0 / prior.variance, prior.mean / prior.variance, 0)


def accumulate(lam, eta, y, z):
    """One absorption step on double-double ``(hi, lo)`` pairs; works elementwise on arrays."""
    return dd_add(lam, (z, 0.0)), dd_add(eta, two_prod(z, y))


def posterior_update(state: PosteriorState, y: float, z: float) -> PosteriorState:
    """Absorb one measurement ``y`` with precision ``z``."""
    if not z > 0:
        raise InvalidParameterError(f"measurement precision must be > 0, got {z!r}")
    (lh, ll), (eh, el) = accumulate((state.precision, state.precision_lo),
                                    (state.information, state.information_lo), float(y), float(z))
    return PosteriorState(lh, eh, state.count + 1, ll, el)


def posterior_summary(state: PosteriorState) -> tuple[float, float]:
    return state.mean, state.variance


def ci_halfwidth(state: PosteriorState, alpha: float = DEFAULT_ALPHA) -> float:
    if not alpha > 0:
        raise InvalidParameterError(f"alpha must be > 0, got {alpha!r}")
    return alpha * math.sqrt(1.0 / state.precision)


def should_stop(state: PosteriorState, config: StoppingConfig, prior: GaussianPrior) -> bool:
    """True once the precision gathered beyond the prior reaches ``gamma``.

    Inclusive at the boundary. With ``gamma <= 0`` the untouched prior
    already satisfies the rule.
    """
    return state.precision - 1.0 / prior.variance >= config.gamma
