"""Vectorised double-double arithmetic built from error-free transformations.

A value is a pair ``(hi, lo)`` of float arrays with ``hi + lo`` the
represented number and ``|lo| <= ulp(hi)/2``. Products use Dekker splitting,
so no FMA is required.
"""

import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1


def two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def fast_two_sum(a, b):
    # requires |a| >= |b|
    s = a + b
    return s, b - (s - a)


def _split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def dd_add(x, y):
    s, e = two_sum(x[0], y[0])
    e = e + (x[1] + y[1])
    return fast_two_sum(s, e)


def dd_mul(x, y):
    p, e = two_prod(x[0], y[0])
    e = e + (x[0] * y[1] + x[1] * y[0])
    return fast_two_sum(p, e)


def dd_pow(x, n: int):
    """``x**n`` for a non-negative integer ``n`` by binary powering."""
    result = (np.ones_like(x[0]), np.zeros_like(x[0]))
    base = x
    while n:
        if n & 1:
            result = dd_mul(result, base)
        n >>= 1
        if n:
            base = dd_mul(base, base)
    return result


def dd_const(value_hi: float, value_lo: float, like):
    return np.full_like(like, value_hi), np.full_like(like, value_lo)
