"""Domain types, random streams and population sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import InvalidParameterError

__all__ = [
    "GaussianPrior",
    "PrecisionBand",
    "ProblemInstance",
    "SensorReading",
    "SensorPopulation",
    "gamma_threshold",
    "trial_rng",
    "sample_population",
]


@dataclass(frozen=True)
class GaussianPrior:
    """Normal prior on the unknown scalar ``theta``."""

    mean: float
    variance: float

    def __post_init__(self):
        if not (self.variance > 0 and math.isfinite(self.variance)):
            raise InvalidParameterError(f"prior variance must be > 0, got {self.variance!r}")
        if not math.isfinite(self.mean):
            raise InvalidParameterError(f"prior mean must be finite, got {self.mean!r}")

    @property
    def precision(self) -> float:
        return 1.0 / self.variance


@dataclass(frozen=True)
class PrecisionBand:
    """Support ``[a, b]`` of the uniform law of per-sensor precisions ``1/sigma_i^2``.

    ``a = 0`` is accepted so analytic formulas can be exercised on the
    standard Irwin-Hall case; sampling requires ``a > 0``.
    """

    a: float
    b: float

    def __post_init__(self):
        if not (0 <= self.a < self.b and math.isfinite(self.b)):
            raise InvalidParameterError(f"need 0 <= a < b, got a={self.a!r}, b={self.b!r}")

    @property
    def width(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class ProblemInstance:
    """Sensor count, precision band and stopping threshold ``gamma``."""

    n_sensors: int
    band: PrecisionBand
    gamma: float

    def __post_init__(self):
        if int(self.n_sensors) != self.n_sensors or self.n_sensors < 1:
            raise InvalidParameterError(f"n_sensors must be a positive integer, got {self.n_sensors!r}")
        if math.isnan(self.gamma):
            raise InvalidParameterError("gamma is NaN")

    @classmethod
    def from_targets(cls, n_sensors: int, band: PrecisionBand, prior: GaussianPrior,
                     alpha: float = 1.96, eps: float = 0.4) -> ProblemInstance:
        return cls(n_sensors, band, gamma_threshold(alpha, eps, prior.variance))

    @property
    def a(self) -> float:
        return self.band.a

    @property
    def b(self) -> float:
        return self.band.b


class SensorReading(NamedTuple):
    index: int
    z: float
    y: float


@dataclass(frozen=True, eq=False)
class SensorPopulation:
    """One realisation of the network: true parameter, precisions and measurements.

    ``z[i]`` and ``y[i]`` belong to sensor ``i``; the arrays are made read-only.
    """

    theta_true: float
    z: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        z = np.array(self.z, dtype=float)
        y = np.array(self.y, dtype=float)
        if z.ndim != 1 or z.shape != y.shape or z.size == 0:
            raise InvalidParameterError("z and y must be non-empty 1-d arrays of equal length")
        if np.any(z <= 0):
            raise InvalidParameterError("all precisions must be > 0")
        z.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.z.size

    @cached_property
    def sensors(self) -> tuple[SensorReading, ...]:
        return tuple(SensorReading(i, float(zi), float(yi))
                     for i, (zi, yi) in enumerate(zip(self.z, self.y)))

    def __eq__(self, other):
        if not isinstance(other, SensorPopulation):
            return NotImplemented
        return (self.theta_true == other.theta_true
                and np.array_equal(self.z, other.z) and np.array_equal(self.y, other.y))

    __hash__ = None


def gamma_threshold(alpha: float, eps: float, prior_variance: float) -> float:
    """Accumulated-precision threshold ``(alpha/eps)**2 - 1/prior_variance``.

    The result is negative when the prior alone already meets the target
    half-width; callers treat that as "stop before any transmission".
    """
    for name, v in (("alpha", alpha), ("eps", eps), ("prior_variance", prior_variance)):
        if not v > 0:
            raise InvalidParameterError(f"{name} must be > 0, got {v!r}")
    return (alpha / eps) ** 2 - 1.0 / prior_variance


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based stream for one Monte Carlo trial.

    Philox keyed by ``(seed, trial)``; its counter is the draw index, so a
    trial's numbers never depend on which other trials ran or in what order.
    """
    if seed < 0 or trial < 0:
        raise InvalidParameterError("seed and trial index must be non-negative")
    return np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, trial]))


# Draw layout per population: N+1 standard normals (theta, then noise), N uniforms.
def _raw_draws(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    normals = rng.standard_normal(n + 1)
    uniforms = rng.random(n)
    return normals, uniforms


def _build(normals: np.ndarray, uniforms: np.ndarray, prior: GaussianPrior,
           band: PrecisionBand) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Works on (T, N+1) / (T, N) blocks; the scalar path passes T = 1.
    theta = prior.mean + math.sqrt(prior.variance) * normals[:, 0]
    z = band.a + band.width * uniforms
    # a + (b - a) * U can round one ulp past b
    np.clip(z, band.a, band.b, out=z)
    y = theta[:, None] + normals[:, 1:] / np.sqrt(z)
    return theta, z, y


def sample_population(prior: GaussianPrior, band: PrecisionBand, n_sensors: int,
                      rng: np.random.Generator) -> SensorPopulation:
    """Draw ``theta ~ N(mu0, tau0^2)``, ``z_i ~ U(a, b)``, ``y_i = theta + N(0, 1/z_i)``."""
    if band.a <= 0:
        raise InvalidParameterError("sampling needs a > 0 (a = 0 allows unbounded noise variance)")
    if int(n_sensors) != n_sensors or n_sensors < 1:
        raise InvalidParameterError(f"n_sensors must be a positive integer, got {n_sensors!r}")
    normals, uniforms = _raw_draws(rng, n_sensors)
    theta, z, y = _build(normals[None, :], uniforms[None, :], prior, band)
    return SensorPopulation(float(theta[0]), z[0], y[0])
