"""Thin wrapper over QUADPACK adaptive Gauss-Kronrod with hard error checks."""
import math
import warnings

from scipy.integrate import IntegrationWarning, quad

_EPS_REQUEST = 1e-13
_ABS_ACCEPT = 1e-11
_REL_ACCEPT = 1e-11


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested accuracy."""

    def __init__(self, message, achieved):
        super().__init__(f"{message} (achieved abs error {achieved:.3g})")
        self.achieved = achieved


def integrate(f, lo, hi, points=()):
    """Integrate ``f`` over ``[lo, hi]`` (``hi`` may be ``inf``), splitting at ``points``.

    Raises :class:`QuadratureError` when the error estimate of any piece
    exceeds ``max(1e-11, 1e-11 |value|)``.
    """
    edges = [lo] + sorted(p for p in points if lo < p < hi) + [hi]
    total = 0.0
    for a, b in zip(edges, edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            val, err = quad(f, a, b, epsabs=_EPS_REQUEST, epsrel=_EPS_REQUEST, limit=1000)[:2]
        if not math.isfinite(val) or err > max(_ABS_ACCEPT, _REL_ACCEPT * abs(val)):
            raise QuadratureError(f"quadrature on [{a}, {b}] did not converge", err)
        total += val
    return total
