"""Closed forms for expected transmission counts and their numerical oracles.

Unordered scheme: ``E[k*] = sum_{k<N} Pr(S_k < gamma)`` where ``S_k`` is a sum
of ``k`` i.i.d. ``U(a, b)`` precisions, i.e. a rescaled Irwin-Hall variable.

Ordered scheme: ``E[k*] = sum_{k<N} Pr(M_k < gamma)`` with ``M_k`` the sum of
the ``k`` largest precisions. It is bracketed by an integral over the density
of the ``(k+1)``-th largest precision (upper) and by the event that every
precision is at most ``gamma/k`` (lower).

The alternating sums involved cancel catastrophically in double precision
(around nineteen digits at ``k = 50``). The Irwin-Hall CDF is therefore
evaluated in double-double arithmetic, and the per-branch integrals ``S1`` are
evaluated exactly over the rationals, since every input float is a dyadic
rational.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy import integrate

from . import _ddouble as dd
from .errors import InvalidParameterError, NumericalFailure
from .model import PrecisionBand, ProblemInstance

__all__ = [
    "IRWIN_HALL_VALIDATED_K",
    "NormalizedSum",
    "OrderedSpectrum",
    "UpperBoundTerms",
    "irwin_hall_cdf",
    "irwin_hall_cdf_recursive",
    "normalized_sum",
    "unordered_expected_k",
    "unordered_stop_probabilities",
    "order_statistic_pdf",
    "s1_closed_form",
    "upper_bound_terms",
    "ordered_upper_bound",
    "ordered_upper_bound_probabilities",
    "ordered_lower_bound",
    "ordered_lower_bound_probabilities",
    "prob_topk_sum_leq",
    "upper_bound_quadrature_oracle",
    "upper_bound_diagnostics",
]

# Range over which the double-double series has been checked against exact
# rational evaluation. Larger k fall back to the convex recursion.
IRWIN_HALL_VALIDATED_K = 60
_CDF_SLACK = 1e-8


# --------------------------------------------------------------------------
# Irwin-Hall distribution

@lru_cache(maxsize=None)
def _series_coefficients(k: int) -> tuple[tuple[float, float], ...]:
    # (-1)^j C(k, j) / k! split into a double-double pair
    out = []
    for j in range(k + 1):
        c = Fraction((-1) ** j * math.comb(k, j), math.factorial(k))
        hi = float(c)
        out.append((hi, float(c - Fraction(hi))))
    return tuple(out)


def _lower_tail_series(t: np.ndarray, k: int) -> np.ndarray:
    """Alternating series for ``Pr(U_1 + ... + U_k <= t)`` with ``0 < t <= k/2``."""
    coeffs = _series_coefficients(k)
    total = (np.zeros_like(t), np.zeros_like(t))
    for j in range(int(np.floor(t.max())) + 1):
        sel = np.nonzero(t >= j)[0]
        base = dd.two_sum(t[sel], np.full(sel.size, -float(j)))
        term = dd.dd_mul(dd.dd_pow(base, k), dd.dd_const(*coeffs[j], like=base[0]))
        hi = np.zeros_like(t)
        lo = np.zeros_like(t)
        hi[sel], lo[sel] = term
        total = dd.dd_add(total, (hi, lo))
    return total[0] + total[1]


def irwin_hall_cdf_recursive(x, k: int):
    """Irwin-Hall CDF through ``F_k(x) = (x F_{k-1}(x) + (k-x) F_{k-1}(x-1)) / k``.

    Inside ``[0, k]`` every step is a convex combination, so the recursion is
    stable for any ``k``; cost is ``O(k^2)`` per point.
    """
    k = _check_k(k)
    xs = np.asarray(x, dtype=float)
    if np.isnan(xs).any():
        raise InvalidParameterError("irwin_hall_cdf got NaN")
    # the CDF is flat outside [0, k]; clipping keeps infinities out of the products
    flat = np.clip(xs.reshape(-1), -1.0, k + 1.0)
    # level m holds F_m(x - i) for i = 0..k-m
    shifts = flat[None, :] - np.arange(k + 1)[:, None]
    vals = (shifts >= 0).astype(float)
    for m in range(1, k + 1):
        t = shifts[: k - m + 1]
        vals = (t * vals[:-1] + (m - t) * vals[1:]) / m
        vals = np.clip(vals, 0.0, 1.0)
    out = vals[0].reshape(xs.shape)
    return float(out) if out.ndim == 0 else out


def irwin_hall_cdf(x, k: int):
    """CDF of the sum of ``k`` independent ``U(0, 1)`` variables.

    Evaluates ``(1/k!) sum_{j <= floor(x)} (-1)^j C(k, j) (x - j)^k`` in
    double-double precision on the lower half ``x <= k/2`` and uses the
    symmetry ``F(x) = 1 - F(k - x)`` above it. Accepts scalars or arrays.
    For ``k = 0`` the sum is identically zero and the CDF is ``1[x >= 0]``.
    """
    k = _check_k(k)
    xs = np.asarray(x, dtype=float)
    if np.isnan(xs).any():
        raise InvalidParameterError("irwin_hall_cdf got NaN")
    if k == 0:
        out = (xs >= 0).astype(float)
    elif k > IRWIN_HALL_VALIDATED_K:
        return irwin_hall_cdf_recursive(x, k)
    else:
        out = np.where(xs >= k, 1.0, 0.0).reshape(-1)
        flat = xs.reshape(-1)
        inner = np.nonzero((flat > 0) & (flat < k))[0]
        if inner.size:
            v = flat[inner]
            upper = v > k / 2
            # k - v is exact here (Sterbenz)
            t = np.where(upper, k - v, v)
            tail = _lower_tail_series(t, k)
            vals = np.where(upper, 1.0 - tail, tail)
            if vals.min() < -_CDF_SLACK or vals.max() > 1 + _CDF_SLACK:
                raise NumericalFailure(
                    f"Irwin-Hall series left [0, 1] at k={k}: range "
                    f"[{vals.min():.3e}, {vals.max():.3e}]")
            out[inner] = np.clip(vals, 0.0, 1.0)
        out = out.reshape(xs.shape)
    return float(out) if out.ndim == 0 else out


def _check_k(k) -> int:
    if int(k) != k or k < 0:
        raise InvalidParameterError(f"k must be a non-negative integer, got {k!r}")
    return int(k)


# --------------------------------------------------------------------------
# Unordered scheme

@dataclass(frozen=True)
class NormalizedSum:
    """Threshold for ``S_k <= gamma`` mapped onto the standard Irwin-Hall scale."""

    k: int
    gamma_prime: float
    gamma_star: int

    def cdf(self) -> float:
        return irwin_hall_cdf(self.gamma_prime, self.k)


def normalized_sum(gamma: float, k: int, band: PrecisionBand) -> NormalizedSum:
    gp = (gamma - k * band.a) / band.width
    gstar = min(max(math.floor(gp), 0), k) if math.isfinite(gp) else (k if gp > 0 else 0)
    return NormalizedSum(k, gp, gstar)


def unordered_stop_probabilities(inst: ProblemInstance) -> np.ndarray:
    """``Pr(S_k < gamma)`` for ``k = 0..N-1`` (the probability of needing a (k+1)-th transmission)."""
    probs = np.empty(inst.n_sensors)
    # S_0 = 0 meets the rule as soon as gamma <= 0
    probs[0] = 1.0 if inst.gamma > 0 else 0.0
    for k in range(1, inst.n_sensors):
        probs[k] = normalized_sum(inst.gamma, k, inst.band).cdf()
    return probs


def unordered_expected_k(inst: ProblemInstance) -> float:
    """Expected number of transmissions when sensors report in random order."""
    return math.fsum(unordered_stop_probabilities(inst))


# --------------------------------------------------------------------------
# Ordered scheme

@dataclass(frozen=True)
class OrderedSpectrum:
    """Precisions sorted in descending order with their running sums ``M_k``."""

    ordered: np.ndarray
    partial_sums: np.ndarray

    @classmethod
    def from_precisions(cls, z) -> OrderedSpectrum:
        z = np.asarray(z, dtype=float)
        order = np.argsort(-z, kind="stable")
        ordered = z[order]
        return cls(ordered, np.concatenate(([0.0], np.cumsum(ordered))))

    def top_sum(self, k: int) -> float:
        return float(self.partial_sums[k])


def order_statistic_pdf(x, k: int, n_sensors: int, band: PrecisionBand):
    """Density of the ``(k+1)``-th largest of ``n_sensors`` i.i.d. ``U(a, b)`` draws."""
    if not 0 <= k <= n_sensors - 1:
        raise InvalidParameterError(f"need 0 <= k <= N-1, got k={k}, N={n_sensors}")
    a, b = band.a, band.b
    xs = np.asarray(x, dtype=float)
    w = band.width
    lo = (xs - a) / w
    hi = (b - xs) / w
    coef = n_sensors * math.comb(n_sensors - 1, k) / w
    with np.errstate(invalid="ignore"):
        dens = coef * lo ** (n_sensors - k - 1) * hi ** k
    dens = np.where((xs >= a) & (xs <= b), dens, 0.0)
    return float(dens) if dens.ndim == 0 else dens


Branch = Literal["gamma<kb", "gamma>=kb"]


@dataclass(frozen=True)
class UpperBoundTerms:
    """Data for one ``(k, j)`` summand of the ordered upper bound.

    ``s1`` is the exact value of ``int_a^b g(x)^k (x-a)^(N-k-1) (b-x)^k dx``
    with ``g(x) = (f(x) - j)_+`` and ``f(x) = clip((gamma - k x)/(b - x), 0, k)``.
    ``c`` is the right end of the integration region in the ``gamma<kb``
    branch, or ``None`` when that region is empty or the branch is ``gamma>=kb``.
    """

    k: int
    j: int
    branch: Branch
    gamma: float
    b: float
    c: Fraction | None
    s1: Fraction

    def f(self, x: float) -> float:
        return _clamp_f(x, float(self.k), self.gamma, self.b)

    def g(self, x: float) -> float:
        return max(self.f(x) - self.j, 0.0)


def _clamp_f(x: float, k: float, gamma: float, b: float) -> float:
    if x >= b:
        return k if gamma >= k * b else 0.0
    return max(min((gamma - k * x) / (b - x), k), 0.0)


class _Exact:
    """Instance parameters as integers over a common power-of-two denominator."""

    def __init__(self, inst: ProblemInstance):
        fa, fb, fg = (Fraction(v) for v in (inst.a, inst.b, inst.gamma))
        self.D = math.lcm(fa.denominator, fb.denominator, fg.denominator)
        self.A = int(fa * self.D)
        self.B = int(fb * self.D)
        self.G = int(fg * self.D)
        self.a, self.b, self.gamma = fa, fb, fg
        self.N = inst.n_sensors
        self.W = math.lcm(*range(1, self.N + 1))


@lru_cache(maxsize=64)
def _exact(inst: ProblemInstance) -> _Exact:
    return _Exact(inst)


def _region_end(e: _Exact, k: int, j: int) -> tuple[int, int] | None:
    """``c = min((gamma - j b)/(k - j), gamma/k)`` as ``(numerator, L)`` with ``c = numerator/(L D)``.

    Returns ``None`` when ``c <= a`` (empty region) or ``j == k`` (``g`` vanishes).
    """
    if j == k:
        return None
    num1, L1 = e.G - j * e.B, k - j
    num2, L2 = e.G, k
    num, L = (num1, L1) if Fraction(num1, L1) <= Fraction(num2, L2) else (num2, L2)
    if Fraction(num, L) <= e.A:
        return None
    return num, L


def s1_closed_form(inst: ProblemInstance, k: int, j: int,
                   binomial: Literal["k", "N-k-1"] = "k") -> Fraction:
    """Exact value of the ``(k, j)`` branch integral from its polynomial expansion.

    In the ``gamma < k b`` branch the integrand ``[(gamma - b j) + (j - k) x]^k (x-a)^(N-k-1)``
    is expanded by the binomial theorem and integrated term by term over
    ``[a, c]``. ``binomial`` selects the outer coefficient: ``"k"`` uses
    ``C(k, i)``, which is what expanding a ``k``-th power produces, and
    ``"N-k-1"`` uses ``C(N-k-1, i)`` as an alternative reading kept for the
    diagnostics table. The ``gamma >= k b`` branch has no such ambiguity.
    """
    return _s1(inst, k, j, binomial)[1]


@lru_cache(maxsize=1 << 14)
def _s1(inst: ProblemInstance, k: int, j: int, binomial: str) -> tuple[tuple[int, int] | None, Fraction]:
    N = inst.n_sensors
    if not 0 <= j <= k <= N - 1:
        raise InvalidParameterError(f"need 0 <= j <= k <= N-1, got j={j}, k={k}, N={N}")
    if binomial not in ("k", "N-k-1"):
        raise InvalidParameterError(f"unknown binomial reading {binomial!r}")
    e = _exact(inst)
    n = N - k - 1
    W, D, A, B = e.W, e.D, e.A, e.B
    neg_a_pow = [(-A) ** r for r in range(n + 1)]

    if e.gamma >= k * e.b:
        # (k-j)^k * sum_i C(n,i) (-a)^(n-i) * sum_m C(k,m) b^m (-1)^(k-m) (b^p - a^p)/p
        lead = (k - j) ** k
        if lead == 0:
            return None, Fraction(0)
        b_pow = [B ** r for r in range(N + 1)]
        a_pow = [A ** r for r in range(N + 1)]
        total = 0
        for i in range(n + 1):
            inner = 0
            for m in range(k + 1):
                p = k - m + i + 1
                t = math.comb(k, m) * b_pow[m] * (b_pow[p] - a_pow[p]) * (W // p)
                inner += -t if (k - m) & 1 else t
            total += math.comb(n, i) * neg_a_pow[n - i] * inner
        return None, Fraction(lead * total, D ** N * W)

    end = _region_end(e, k, j)
    if end is None:
        return None, Fraction(0)
    C, L = end
    AL = A * L
    gj = e.G - j * B  # (gamma - b j) * D
    c_pow = [C ** r for r in range(N + 1)]
    al_pow = [AL ** r for r in range(N + 1)]
    l_pow = [L ** r for r in range(N + 1)]
    outer_n = k if binomial == "k" else n
    total = 0
    for i in range(k + 1):
        coef = math.comb(outer_n, i)
        if coef == 0:
            continue
        inner = 0
        for m in range(n + 1):
            p = k - i + m + 1
            inner += (math.comb(n, m) * neg_a_pow[n - m]
                      * (c_pow[p] - al_pow[p]) * l_pow[N - p] * (W // p))
        total += coef * gj ** i * (j - k) ** (k - i) * inner
    return end, Fraction(total, D ** N * l_pow[N] * W)


def upper_bound_terms(inst: ProblemInstance, k: int) -> tuple[UpperBoundTerms, ...]:
    """Per-``j`` branch data for the ``k``-th summand (``1 <= k <= N-1``)."""
    e = _exact(inst)
    branch: Branch = "gamma>=kb" if e.gamma >= k * e.b else "gamma<kb"
    out = []
    for j in range(k + 1):
        end, s1 = _s1(inst, k, j, "k")
        c = None if end is None else Fraction(end[0], end[1] * e.D)
        out.append(UpperBoundTerms(k, j, branch, inst.gamma, inst.b, c, s1))
    return tuple(out)


@lru_cache(maxsize=64)
def _upper_probabilities_exact(inst: ProblemInstance) -> tuple[Fraction, ...]:
    N = inst.n_sensors
    e = _exact(inst)
    probs = [Fraction(1) if inst.gamma > 0 else Fraction(0)]
    scale = Fraction(e.D, e.B - e.A) ** N  # (b - a)^-N
    for k in range(1, N):
        acc = Fraction(0)
        for j in range(k + 1):
            s1 = _s1(inst, k, j, "k")[1]
            if s1:
                acc += (-1) ** j * math.comb(k, j) * s1
        pref = Fraction(math.factorial(N),
                        math.factorial(N - k - 1) * math.factorial(k) ** 2)
        probs.append(pref * scale * acc)
    return tuple(probs)


def ordered_upper_bound_probabilities(inst: ProblemInstance) -> np.ndarray:
    """Upper bounds on ``Pr(M_k < gamma)``, ``k = 0..N-1``, each clamped to ``[0, 1]``."""
    return np.clip(np.array([float(p) for p in _upper_probabilities_exact(inst)]), 0.0, 1.0)


def ordered_upper_bound(inst: ProblemInstance) -> float:
    """Upper bound on the ordered scheme's expected transmission count."""
    return math.fsum(ordered_upper_bound_probabilities(inst))


def ordered_lower_bound_probabilities(inst: ProblemInstance) -> np.ndarray:
    """``Pr(all precisions <= gamma/k)``, ``k = 0..N-1``.

    Evaluated exactly and rounded once, like the upper bound, so the
    termwise ordering ``lower <= upper`` survives rounding.
    """
    N = inst.n_sensors
    e = _exact(inst)
    probs = np.empty(N)
    probs[0] = 1.0 if inst.gamma > 0 else 0.0
    for k in range(1, N):
        base = min(max((e.gamma / k - e.a) / (e.b - e.a), Fraction(0)), Fraction(1))
        probs[k] = float(base ** N)
    return probs


def ordered_lower_bound(inst: ProblemInstance) -> float:
    """Lower bound from the event that every precision is at most ``gamma/k``."""
    return math.fsum(ordered_lower_bound_probabilities(inst))


def prob_topk_sum_leq(inst: ProblemInstance, k: int, trials: int,
                      rng: np.random.Generator, chunk: int = 1 << 16) -> tuple[float, float]:
    """Monte Carlo ``Pr(M_k <= gamma)`` and its standard error."""
    N = inst.n_sensors
    if not 1 <= k <= N:
        raise InvalidParameterError(f"need 1 <= k <= N, got k={k}")
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1")
    hits = 0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        z = inst.a + inst.band.width * rng.random((m, N))
        top = np.partition(z, N - k, axis=1)[:, N - k:]
        hits += int(np.count_nonzero(top.sum(axis=1) <= inst.gamma))
        done += m
    p = hits / trials
    return p, math.sqrt(p * (1 - p) / trials)


# --------------------------------------------------------------------------
# Quadrature oracle

def upper_bound_quadrature_oracle(inst: ProblemInstance, k: int, j: int,
                                  rtol: float = 1e-10) -> float:
    """Adaptive quadrature of ``int_a^b g(x)^k (x-a)^(N-k-1) (b-x)^k dx``.

    ``g`` is built directly from the clamped threshold ``f(x)``, without the
    branch analysis used by the closed form. Raises :class:`NumericalFailure`
    when the error estimate exceeds ``max(1e-10, rtol*|value|)``.
    """
    N = inst.n_sensors
    if not 0 <= j <= k <= N - 1:
        raise InvalidParameterError(f"need 0 <= j <= k <= N-1, got j={j}, k={k}, N={N}")
    a, b, gamma = inst.a, inst.b, inst.gamma
    n = N - k - 1

    def integrand(x):
        g = _clamp_f(x, float(k), gamma, b) - j
        if g > 0:
            gk = g ** k
        elif k == 0:
            # zero-term Irwin-Hall "sum" is 0 <= gamma
            gk = 1.0 if gamma >= 0 else 0.0
        else:
            return 0.0
        return gk * (x - a) ** n * (b - x) ** k

    breaks = []
    if k > j:
        breaks.append((gamma - j * b) / (k - j))
    if k > 0:
        breaks.append(gamma / k)
    breaks = sorted({x for x in breaks if a < x < b})
    value, abserr, *_ = integrate.quad(integrand, a, b, points=breaks or None,
                                       epsabs=0.0, epsrel=1e-12, limit=500, full_output=1)
    if not math.isfinite(value) or abserr > max(1e-10, rtol * abs(value)):
        raise NumericalFailure(
            f"quadrature for (k={k}, j={j}) did not converge: estimate {value!r} "
            f"+/- {abserr!r}", error_estimate=abserr)
    return value


@dataclass(frozen=True)
class DiagnosticRow:
    k: int
    j: int
    branch: str
    s1_closed_form: float
    quadrature: float
    abs_diff: float
    rel_diff: float
    s1_alt_binomial: float
    alt_abs_diff: float


def _rel(x: float, ref: float) -> float:
    if x == ref:
        return 0.0
    return abs(x - ref) / abs(ref) if ref else math.inf


def upper_bound_diagnostics(inst: ProblemInstance) -> list[DiagnosticRow]:
    """Closed form (both coefficient readings) against quadrature for every ``(k, j)``."""
    e = _exact(inst)
    rows = []
    for k in range(inst.n_sensors):
        branch = "gamma>=kb" if e.gamma >= k * e.b else "gamma<kb"
        for j in range(k + 1):
            if k == 0 and inst.gamma < 0:
                # zero-transmission term is handled as 1[gamma > 0]
                s1 = alt = 0.0
            else:
                s1 = float(s1_closed_form(inst, k, j, "k"))
                alt = float(s1_closed_form(inst, k, j, "N-k-1"))
            quad = upper_bound_quadrature_oracle(inst, k, j)
            rows.append(DiagnosticRow(k, j, branch, s1, quad, abs(s1 - quad), _rel(s1, quad),
                                      alt, abs(alt - quad)))
    return rows
