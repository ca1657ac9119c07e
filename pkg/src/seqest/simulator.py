"""Monte Carlo trials for the unordered, ordered, full-data and fixed-k schemes.

Single-trial functions operate on a :class:`SensorPopulation` and go through
the estimator one measurement at a time. :func:`monte_carlo` and
:func:`monte_carlo_fixed_k` run many trials on ``(trials, N)`` blocks; they use
the same draw layout and the same left-to-right accumulation, so a block
trial reproduces the single-trial result bit for bit.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParameterError
from .estimator import (
    PosteriorState,
    StoppingConfig,
    accumulate,
    posterior_init,
    posterior_update,
    should_stop,
)
from .model import (
    GaussianPrior,
    PrecisionBand,
    SensorPopulation,
    _build,
    _raw_draws,
    trial_rng,
)

__all__ = [
    "Scheme",
    "TrialOutcome",
    "AggregateStats",
    "TimerEvent",
    "EventKind",
    "MonteCarloSetup",
    "MonteCarloResult",
    "run_unordered_trial",
    "run_ordered_trial",
    "run_full_trial",
    "run_fixed_k_trial",
    "simulate_timer_protocol",
    "monte_carlo",
    "monte_carlo_fixed_k",
    "aggregate",
    "default_workers",
]

THREADS_ENV = "SEQEST_THREADS"


class Scheme(str, enum.Enum):
    UNORDERED = "unordered"
    ORDERED = "ordered"
    FULL = "full"
    FIXED_K = "fixed_k"


@dataclass(frozen=True)
class TrialOutcome:
    scheme: Scheme
    k_star: int
    estimate: float
    squared_error: float
    stopped_early: bool
    variance: float


def _outcome(scheme: Scheme, state: PosteriorState, theta: float, stopped: bool) -> TrialOutcome:
    est = state.mean
    err = est - theta
    # err * err rather than ** 2: pow() may round differently from numpy's square
    return TrialOutcome(scheme, state.count, est, err * err, stopped, state.variance)


def _absorb_until_stop(pop: SensorPopulation, order: Iterable[int], prior: GaussianPrior,
                       config: StoppingConfig, scheme: Scheme) -> TrialOutcome:
    state = posterior_init(prior)
    if should_stop(state, config, prior):
        return _outcome(scheme, state, pop.theta_true, True)
    for i in order:
        state = posterior_update(state, pop.y[i], pop.z[i])
        if should_stop(state, config, prior):
            return _outcome(scheme, state, pop.theta_true, True)
    return _outcome(scheme, state, pop.theta_true, False)


def _random_order(rng: np.random.Generator, n: int) -> np.ndarray:
    # sort keys rather than rng.permutation so block trials can share the layout
    return np.argsort(rng.random(n), kind="stable")


def _descending(z: np.ndarray) -> np.ndarray:
    return np.argsort(-z, kind="stable")


def run_unordered_trial(pop: SensorPopulation, prior: GaussianPrior, config: StoppingConfig,
                        rng: np.random.Generator) -> TrialOutcome:
    """Absorb measurements in a uniformly random order until the rule is met."""
    return _absorb_until_stop(pop, _random_order(rng, len(pop)), prior, config, Scheme.UNORDERED)


def run_ordered_trial(pop: SensorPopulation, prior: GaussianPrior,
                      config: StoppingConfig) -> TrialOutcome:
    """Absorb measurements by descending precision (ties by index) until the rule is met."""
    return _absorb_until_stop(pop, _descending(pop.z), prior, config, Scheme.ORDERED)


def run_full_trial(pop: SensorPopulation, prior: GaussianPrior) -> TrialOutcome:
    state = posterior_init(prior)
    for i in range(len(pop)):
        state = posterior_update(state, pop.y[i], pop.z[i])
    return _outcome(Scheme.FULL, state, pop.theta_true, False)


def run_fixed_k_trial(pop: SensorPopulation, prior: GaussianPrior, k: int, scheme: Scheme,
                      rng: np.random.Generator | None = None) -> TrialOutcome:
    """Absorb exactly ``k`` measurements: the top-``k`` precisions or ``k`` random sensors.

    The selected set is absorbed in sensor-index order, so ``k = N`` gives
    the same posterior for both schemes.
    """
    n = len(pop)
    if not 0 <= k <= n:
        raise InvalidParameterError(f"need 0 <= k <= N, got k={k}, N={n}")
    scheme = Scheme(scheme)
    if scheme is Scheme.ORDERED:
        chosen = _descending(pop.z)[:k]
    elif scheme is Scheme.UNORDERED:
        if rng is None:
            raise InvalidParameterError("unordered fixed-k selection needs a random stream")
        chosen = _random_order(rng, n)[:k]
    else:
        raise InvalidParameterError(f"fixed-k trials support ordered/unordered, got {scheme}")
    state = posterior_init(prior)
    for i in np.sort(chosen):
        state = posterior_update(state, pop.y[i], pop.z[i])
    return _outcome(Scheme.FIXED_K, state, pop.theta_true, False)


# --------------------------------------------------------------------------
# Timer protocol

class EventKind(str, enum.Enum):
    TRANSMISSION = "transmission"
    STOP_BROADCAST = "stop"


@dataclass(frozen=True)
class TimerEvent:
    time: float
    kind: EventKind
    sensor: int | None = None


def simulate_timer_protocol(pop: SensorPopulation, prior: GaussianPrior, config: StoppingConfig,
                            timer_coeff: float = 1.0) -> tuple[list[TimerEvent], TrialOutcome]:
    """Event-driven run of the countdown protocol.

    Sensor ``i`` fires at ``timer_coeff / z_i`` (proportional to its noise
    variance). The fusion centre absorbs arrivals in time order and
    broadcasts a stop at the first instant the rule holds, which is time 0
    if the prior already suffices. If the rule never holds the broadcast
    follows the last transmission, so every log ends with a stop event.
    """
    if not timer_coeff > 0:
        raise InvalidParameterError(f"timer_coeff must be > 0, got {timer_coeff!r}")
    times = timer_coeff / pop.z
    schedule = np.lexsort((np.arange(len(pop)), times))
    log: list[TimerEvent] = []
    state = posterior_init(prior)
    now = 0.0
    stopped = should_stop(state, config, prior)
    if not stopped:
        for i in schedule:
            now = float(times[i])
            log.append(TimerEvent(now, EventKind.TRANSMISSION, int(i)))
            state = posterior_update(state, pop.y[i], pop.z[i])
            if should_stop(state, config, prior):
                stopped = True
                break
    log.append(TimerEvent(now, EventKind.STOP_BROADCAST))
    return log, _outcome(Scheme.ORDERED, state, pop.theta_true, stopped)


# --------------------------------------------------------------------------
# Aggregation

@dataclass(frozen=True)
class AggregateStats:
    """Means of ``k*`` and squared error with standard errors ``sd/sqrt(trials)``.

    With a single trial the standard errors are reported as 0 and
    ``se_defined`` is False.
    """

    trials: int
    mean_k: float
    se_k: float
    mse: float
    se_mse: float
    se_defined: bool = True


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    n = values.size
    # fsum is exact, so the result does not depend on how trials were chunked
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((values - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def aggregate(k_star: np.ndarray, squared_error: np.ndarray) -> AggregateStats:
    k_star = np.asarray(k_star, dtype=float)
    squared_error = np.asarray(squared_error, dtype=float)
    if k_star.size == 0 or k_star.shape != squared_error.shape:
        raise InvalidParameterError("need matching, non-empty per-trial arrays")
    mk, sk = _mean_se(k_star)
    me, se = _mean_se(squared_error)
    return AggregateStats(k_star.size, mk, sk, me, se, k_star.size > 1)


def default_workers() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        raise InvalidParameterError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


# --------------------------------------------------------------------------
# Block engine

@dataclass(frozen=True)
class MonteCarloSetup:
    prior: GaussianPrior
    band: PrecisionBand
    n_sensors: int
    stopping: StoppingConfig

    def __post_init__(self):
        if self.band.a <= 0:
            raise InvalidParameterError("simulation needs a > 0")
        if int(self.n_sensors) != self.n_sensors or self.n_sensors < 1:
            raise InvalidParameterError("n_sensors must be a positive integer")
        if not self.stopping.matches(self.prior):
            raise InvalidParameterError("stopping threshold does not match the prior")

    @classmethod
    def create(cls, prior: GaussianPrior, band: PrecisionBand, n_sensors: int, eps: float,
               alpha: float = 1.96) -> MonteCarloSetup:
        return cls(prior, band, n_sensors, StoppingConfig.for_prior(prior, eps, alpha))


@dataclass
class _Block:
    theta: np.ndarray
    z: np.ndarray
    y: np.ndarray
    keys: np.ndarray


def _draw_block(setup: MonteCarloSetup, seed: int, start: int, stop: int) -> _Block:
    n = setup.n_sensors
    m = stop - start
    normals = np.empty((m, n + 1))
    uniforms = np.empty((m, n))
    keys = np.empty((m, n))
    for row, t in enumerate(range(start, stop)):
        rng = trial_rng(seed, t)
        normals[row], uniforms[row] = _raw_draws(rng, n)
        keys[row] = rng.random(n)
    theta, z, y = _build(normals, uniforms, setup.prior, setup.band)
    return _Block(theta, z, y, keys)


def _prefix_posterior(z_seq: np.ndarray, y_seq: np.ndarray,
                      prior: GaussianPrior) -> tuple[np.ndarray, np.ndarray]:
    # column-by-column replay of posterior_update, vectorised over trials
    m, n = z_seq.shape
    lam = np.empty((m, n + 1))
    eta = np.empty((m, n + 1))
    start = posterior_init(prior)
    lam_dd = (np.full(m, start.precision), np.zeros(m))
    eta_dd = (np.full(m, start.information), np.zeros(m))
    lam[:, 0], eta[:, 0] = lam_dd[0], eta_dd[0]
    for i in range(n):
        lam_dd, eta_dd = accumulate(lam_dd, eta_dd, y_seq[:, i], z_seq[:, i])
        lam[:, i + 1], eta[:, i + 1] = lam_dd[0], eta_dd[0]
    return lam, eta


def _sequential(block: _Block, order: np.ndarray, setup: MonteCarloSetup):
    z_seq = np.take_along_axis(block.z, order, axis=1)
    y_seq = np.take_along_axis(block.y, order, axis=1)
    lam, eta = _prefix_posterior(z_seq, y_seq, setup.prior)
    met = (lam - 1.0 / setup.prior.variance) >= setup.stopping.gamma
    stopped = met.any(axis=1)
    k_star = np.where(stopped, met.argmax(axis=1), setup.n_sensors)
    rows = np.arange(k_star.size)
    est = eta[rows, k_star] / lam[rows, k_star]
    return k_star, est, stopped


def _run_block(setup: MonteCarloSetup, seed: int, start: int, stop: int,
               schemes: Sequence[Scheme]) -> dict[Scheme, tuple[np.ndarray, np.ndarray]]:
    block = _draw_block(setup, seed, start, stop)
    out = {}
    for scheme in schemes:
        if scheme is Scheme.UNORDERED:
            k, est, _ = _sequential(block, np.argsort(block.keys, axis=1, kind="stable"), setup)
        elif scheme is Scheme.ORDERED:
            k, est, _ = _sequential(block, np.argsort(-block.z, axis=1, kind="stable"), setup)
        elif scheme is Scheme.FULL:
            lam, eta = _prefix_posterior(block.z, block.y, setup.prior)
            k = np.full(stop - start, setup.n_sensors)
            est = eta[:, -1] / lam[:, -1]
        else:
            raise InvalidParameterError(f"scheme {scheme} is not a stopping scheme")
        err = est - block.theta
        out[scheme] = (k, err * err)
    return out


def _chunks(trials: int, size: int) -> list[tuple[int, int]]:
    return [(s, min(s + size, trials)) for s in range(0, trials, size)]


def _map_chunks(fn, trials: int, workers: int | None, chunk: int):
    spans = _chunks(trials, chunk)
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(spans) == 1:
        return [fn(*s) for s in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map preserves submission order, so reassembly is deterministic
        return list(pool.map(lambda s: fn(*s), spans))


@dataclass
class MonteCarloResult:
    stats: dict[Scheme, AggregateStats]
    k_star: dict[Scheme, np.ndarray] = field(repr=False)
    squared_error: dict[Scheme, np.ndarray] = field(repr=False)
    trials: int = 0
    seed: int = 0


def monte_carlo(setup: MonteCarloSetup, trials: int, seed: int,
                schemes: Sequence[Scheme | str] = (Scheme.UNORDERED, Scheme.ORDERED, Scheme.FULL),
                workers: int | None = None, chunk: int = 4096) -> MonteCarloResult:
    """Independent trials with a fresh population each; all schemes share each trial's draws.

    Trial ``t`` uses the stream ``trial_rng(seed, t)``, so results are fixed
    by ``seed`` alone and do not depend on ``workers`` or ``chunk``.
    """
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1")
    schemes = [Scheme(s) for s in schemes]
    parts = _map_chunks(lambda s, e: _run_block(setup, seed, s, e, schemes), trials, workers, chunk)
    k_star = {s: np.concatenate([p[s][0] for p in parts]) for s in schemes}
    sq = {s: np.concatenate([p[s][1] for p in parts]) for s in schemes}
    stats = {s: aggregate(k_star[s], sq[s]) for s in schemes}
    return MonteCarloResult(stats, k_star, sq, trials, seed)


def _fixed_k_block(setup: MonteCarloSetup, seed: int, start: int, stop: int,
                   ks: Sequence[int]) -> dict[tuple[Scheme, int], np.ndarray]:
    block = _draw_block(setup, seed, start, stop)
    n = setup.n_sensors
    rank_ordered = np.argsort(np.argsort(-block.z, axis=1, kind="stable"), axis=1)
    rank_unordered = np.argsort(np.argsort(block.keys, axis=1, kind="stable"), axis=1)
    out = {}
    for scheme, rank in ((Scheme.ORDERED, rank_ordered), (Scheme.UNORDERED, rank_unordered)):
        for k in ks:
            mask = (rank < k).astype(float)
            # unselected sensors add exact zeros, i.e. index-order absorption of the chosen set
            lam, eta = _prefix_posterior(block.z * mask, block.y, setup.prior)
            est = eta[:, n] / lam[:, n]
            err = est - block.theta
            out[(scheme, k)] = err * err
    return out


def monte_carlo_fixed_k(setup: MonteCarloSetup, ks: Iterable[int], trials: int, seed: int,
                        workers: int | None = None,
                        chunk: int = 4096) -> dict[tuple[Scheme, int], AggregateStats]:
    """MSE of the ordered and unordered schemes when exactly ``k`` sensors report."""
    ks = [int(k) for k in ks]
    for k in ks:
        if not 0 <= k <= setup.n_sensors:
            raise InvalidParameterError(f"need 0 <= k <= N, got k={k}")
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1")
    parts = _map_chunks(lambda s, e: _fixed_k_block(setup, seed, s, e, ks), trials, workers, chunk)
    out = {}
    for key in parts[0]:
        sq = np.concatenate([p[key] for p in parts])
        out[key] = aggregate(np.full(sq.size, float(key[1])), sq)
    return out
