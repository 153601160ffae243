"""Regularised incomplete gamma functions.

Series expansion below ``x = s + 1`` and a modified-Lentz continued fraction
above it, following the usual stability split.
"""
import math

_EPS = 2.0 ** -54
_TINY = 1e-300
_MAX_ITER = 10_000


def _check_domain(s, x):
    if not (s > 0.0) or math.isinf(s):
        raise ValueError(f"shape must be positive and finite, got {s!r}")
    if not (x >= 0.0):
        raise ValueError(f"argument must be non-negative, got {x!r}")


def _log_prefactor(s, x):
    # log(x^s e^{-x} / Gamma(s))
    return s * math.log(x) - x - math.lgamma(s)


def _series(s, x):
    """P(s, x) by the power series; converges fast for x < s + 1."""
    term = 1.0 / s
    total = term
    n = s
    for _ in range(_MAX_ITER):
        n += 1.0
        term *= x / n
        total += term
        if term < total * _EPS:
            return total * math.exp(_log_prefactor(s, x))
    raise ArithmeticError(f"incomplete gamma series did not converge (s={s}, x={x})")


def _continued_fraction(s, x):
    """Q(s, x) by the Legendre continued fraction (modified Lentz)."""
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h * math.exp(_log_prefactor(s, x))
    raise ArithmeticError(f"incomplete gamma continued fraction did not converge (s={s}, x={x})")


def regularized_lower_gamma(s, x):
    """Regularised lower incomplete gamma function ``P(s, x) = gamma(s, x) / Gamma(s)``.

    Parameters
    ----------
    s : float
        Shape, strictly positive.
    x : float
        Upper integration limit, non-negative (``inf`` gives 1).

    Returns
    -------
    float
        Value in ``[0, 1]``.
    """
    s = float(s)
    x = float(x)
    _check_domain(s, x)
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < s + 1.0:
        return min(1.0, _series(s, x))
    return max(0.0, 1.0 - _continued_fraction(s, x))


def regularized_upper_gamma(s, x):
    """Regularised upper incomplete gamma ``Q(s, x) = 1 - P(s, x)``, computed without cancellation in the tail."""
    s = float(s)
    x = float(x)
    _check_domain(s, x)
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < s + 1.0:
        return max(0.0, 1.0 - _series(s, x))
    return min(1.0, _continued_fraction(s, x))


def lower_incomplete_gamma(s, x):
    """Unregularised ``gamma(s, x)``."""
    return math.gamma(s) * regularized_lower_gamma(s, x)
