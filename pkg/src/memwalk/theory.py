"""Exact asphericity of memorised Brownian walks in the dense-memory limit.

The moment integrals are written in terms of the tail function
``S = 1 - M`` so that the ``O(tau^2)`` pieces cancel analytically rather
than in floating point.  With

    A = int_0^tau S,   B = int_0^tau s S,   C = int_0^tau s S^2,
    i1 = int_0^tau s mu,   q = S(tau),

the finite-horizon quantities become

    alpha = i1^2/2 + A^2/2 - 2C + 4qB - tau q A - tau^2 q^2/2
    beta  = 2 i1^2 + 2 A^2 + 8C - 16qB - 4 tau q A + 6 tau^2 q^2

which is an exact rearrangement of the expressions in ``i1 .. i4``.
As ``tau -> inf`` every ``q`` term vanishes and ``A, i1 -> first moment``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .kernels import (
    Exponential,
    HalfNormal,
    KernelDescriptor,
    Lomax,
    StretchedExponential,
    Uniform,
)
from .quadrature import QuadratureError, integrate as _quad

__all__ = [
    "ConvergenceError",
    "Moment",
    "PrimitiveIntegrals",
    "QuadratureError",
    "TheoryResult",
    "a2_limit",
    "alpha",
    "beta",
    "closed_form_a2",
    "primitive_integrals",
    "tensor_moment_oracle",
]

_LADDER_START = 8.0
_LADDER_CAP = 2.0 ** 20


class ConvergenceError(ArithmeticError):
    """The tau ladder hit its cap before the ratio settled."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


class Moment(enum.Enum):
    E_T11 = "E_T11"
    E_T11_SQ = "E_T11_sq"
    E_T12_SQ = "E_T12_sq"


@dataclass(frozen=True)
class PrimitiveIntegrals:
    tau: float
    i1: float
    i2: float
    i3: float
    i4: float
    m_tau: float
    # tail-form building blocks
    survival_tau: float
    int_survival: float
    int_s_survival: float
    int_s_survival_sq: float


@dataclass(frozen=True)
class TheoryResult:
    a2: float
    alpha_limit: float
    beta_limit: float
    tau_used: float
    rel_change_last_doubling: float
    method: str = "tail"
    history: tuple = field(default=(), repr=False)


def _breakpoints(k):
    return (k.support_end,) if math.isfinite(k.support_end) else ()


def _tail_blocks_quad(k, lo, hi):
    """(i1, A, B, C) contributions from ``[lo, hi]`` by quadrature."""
    pts = _breakpoints(k)
    sf = k._sf
    i1 = _quad(lambda s: s * float(k._pdf(s)), lo, hi, pts)
    a = _quad(lambda s: float(sf(s)), lo, hi, pts)
    b = _quad(lambda s: s * float(sf(s)), lo, hi, pts) if math.isfinite(hi) else math.nan
    c = _quad(lambda s: s * float(sf(s)) ** 2, lo, hi, pts)
    return i1, a, b, c


def _closed_blocks(k, tau):
    """Closed-form (i1, A, B, C) on ``[0, tau]``, or ``None`` for quadrature families."""
    if isinstance(k, Uniform):
        r = k.r
        if tau >= r:
            return r / 2.0, r / 2.0, r * r / 6.0, r * r / 12.0
        return (
            tau * tau / (2.0 * r),
            tau - tau * tau / (2.0 * r),
            tau * tau / 2.0 - tau ** 3 / (3.0 * r),
            tau * tau / 2.0 - 2.0 * tau ** 3 / (3.0 * r) + tau ** 4 / (4.0 * r * r),
        )
    if isinstance(k, Exponential):
        th = 1.0 / k.rate
        x = tau / th
        ex = math.exp(-x)
        i1 = -math.expm1(-x) - (x * ex if ex > 0.0 else 0.0)
        a = -math.expm1(-x)
        ex2 = math.exp(-2.0 * x)
        c = (-math.expm1(-2.0 * x) - (2.0 * x * ex2 if ex2 > 0.0 else 0.0)) / 4.0
        return th * i1, th * a, th * th * i1, th * th * c
    if isinstance(k, Lomax):
        lam, a = k.scale, k.a
        x = tau / lam
        log_t = math.log1p(x)
        q = math.exp(-a * log_t)
        # int_0^x (1+s)^{-a} and its relatives, written with expm1 so that
        # a -> 2 and small x stay accurate
        int_s = -math.expm1((1.0 - a) * log_t) / (a - 1.0)
        i1 = int_s - (x * q if q > 0.0 else 0.0)
        if a == 2.0:
            pow2 = log_t
        else:
            pow2 = math.expm1((2.0 - a) * log_t) / (2.0 - a)
        b = pow2 - int_s
        c = -math.expm1((2.0 - 2.0 * a) * log_t) / (2.0 * a - 2.0) + math.expm1(
            (1.0 - 2.0 * a) * log_t
        ) / (2.0 * a - 1.0)
        return lam * i1, lam * int_s, lam * lam * b, lam * lam * c
    return None


def primitive_integrals(k: KernelDescriptor, tau: float) -> PrimitiveIntegrals:
    """The four moment integrals of the kernel on ``[0, tau]``.

    Closed forms are used for the uniform, exponential and Lomax families;
    the others go through adaptive quadrature of tail-function integrands.
    """
    tau = float(tau)
    if not (tau > 0.0) or math.isinf(tau):
        raise ValueError(f"tau must be positive and finite, got {tau!r}")
    blocks = _closed_blocks(k, tau)
    if blocks is None:
        i1, a, b, c = _tail_blocks_quad(k, 0.0, tau)
    else:
        i1, a, b, c = blocks
    q = k.survival(tau)
    half_sq = 0.5 * tau * tau
    return PrimitiveIntegrals(
        tau=tau,
        i1=i1,
        i2=tau - a,
        i3=half_sq - b,
        i4=half_sq - 2.0 * b + c,
        m_tau=k.cumulative(tau),
        survival_tau=q,
        int_survival=a,
        int_s_survival=b,
        int_s_survival_sq=c,
    )


def _alpha_beta_from_blocks(i1, a, b, c, q, tau):
    if q == 0.0:
        qa = qb = qq = 0.0
    else:
        qa, qb, qq = tau * q * a, q * b, (tau * q) ** 2
    al = 0.5 * i1 * i1 + 0.5 * a * a - 2.0 * c + 4.0 * qb - qa - 0.5 * qq
    be = 2.0 * i1 * i1 + 2.0 * a * a + 8.0 * c - 16.0 * qb - 4.0 * qa + 6.0 * qq
    return al, be


def _limit_blocks(k):
    m1 = k.first_moment()
    blocks = _closed_blocks(k, math.inf) if isinstance(k, (Uniform, Exponential, Lomax)) else None
    if blocks is not None:
        return blocks
    _, _, _, c = _tail_blocks_quad(k, 0.0, math.inf)
    return m1, m1, math.nan, c


def _alpha_beta(k, tau):
    tau = float(tau)
    if math.isinf(tau):
        i1, a, b, c = _limit_blocks(k)
        return _alpha_beta_from_blocks(i1, a, b, c, 0.0, tau)
    p = primitive_integrals(k, tau)
    return _alpha_beta_from_blocks(
        p.i1, p.int_survival, p.int_s_survival, p.int_s_survival_sq, p.survival_tau, tau
    )


def alpha(k: KernelDescriptor, tau: float) -> float:
    """``E[T11 T22] - E[T12^2]`` for the memory truncated at ``tau`` (``inf`` allowed)."""
    return _alpha_beta(k, tau)[0]


def beta(k: KernelDescriptor, tau: float) -> float:
    """``E[(T11 + T22)^2]`` for the memory truncated at ``tau`` (``inf`` allowed)."""
    return _alpha_beta(k, tau)[1]


def a2_limit(k: KernelDescriptor, rel_tol: float = 1e-8, method: str = "tail") -> TheoryResult:
    """Dense-memory asphericity ``1 - 4 lim alpha/beta``.

    A doubling ladder ``tau = 8 m1, 16 m1, ...`` (``m1`` the first moment) is
    walked until ``alpha/beta`` changes by less than ``rel_tol`` on two
    consecutive doublings.

    ``method="tail"`` evaluates each rung as the horizon-free value, with the
    integrals split at ``tau`` into ``[0, tau]`` and ``[tau, inf)`` pieces; the
    ladder then certifies that the quadrature is stable under the split.
    ``method="truncated"`` uses the finite-horizon ``alpha(tau)/beta(tau)``
    itself, which converges like ``tau^(1-a)`` for Lomax tails and so may
    exhaust the cap for shapes close to 1.

    Raises
    ------
    ConvergenceError
        If the cap ``2^20 m1`` is passed before the ratio settles.
    """
    if not (0.0 < rel_tol <= 1e-3):
        raise ValueError("rel_tol must lie in (0, 1e-3]")
    if method not in ("tail", "truncated"):
        raise ValueError(f"unknown method {method!r}")
    m1 = k.first_moment()
    tau = _LADDER_START * m1
    cap = _LADDER_CAP * m1
    history = []
    prev = None
    settled = 0
    change = math.inf
    while True:
        if method == "tail":
            head = _tail_blocks_quad(k, 0.0, tau)
            tail = _tail_blocks_quad(k, tau, math.inf)
            i1, a, _, c = (h + t for h, t in zip(head, tail))
            al, be = _alpha_beta_from_blocks(i1, a, 0.0, c, 0.0, math.inf)
        else:
            al, be = _alpha_beta(k, tau)
        ratio = al / be
        history.append((tau, ratio))
        if prev is not None:
            change = abs(ratio - prev) / abs(prev)
            settled = settled + 1 if change < rel_tol else 0
            if settled >= 2:
                break
        prev = ratio
        tau *= 2.0
        if tau > cap:
            raise ConvergenceError(
                f"alpha/beta for {k} still changing by {change:.3g} at tau cap {cap:.6g}",
                tuple(history),
            )
    return TheoryResult(
        a2=1.0 - 4.0 * al / be,
        alpha_limit=al,
        beta_limit=be,
        tau_used=tau,
        rel_change_last_doubling=change,
        method=method,
        history=tuple(history),
    )


def closed_form_a2(k: KernelDescriptor):
    """Tabulated exact asphericity for the kernel, or ``None`` if not known."""
    if isinstance(k, Uniform):
        return 4.0 / 5.0
    if isinstance(k, Exponential):
        return 2.0 / 3.0
    if isinstance(k, HalfNormal):
        return 2.0 - 4.0 / math.pi
    if isinstance(k, Lomax):
        return 2.0 * (k.a - 1.0) / (3.0 * k.a - 2.0)
    if isinstance(k, StretchedExponential):
        # a = 1 is the exponential and a = 2 a rescaled half-normal
        table = {0.25: 594.0 / 1193.0, 0.5: 10.0 / 17.0, 1.0: 2.0 / 3.0, 2.0: 2.0 - 4.0 / math.pi}
        for a, value in table.items():
            if abs(k.a - a) <= 1e-12:
                return value
    return None


def tensor_moment_oracle(k: KernelDescriptor, tau: float, which) -> float:
    """Exact moments of the horizon-``tau`` integral tensor ``T_ij(tau) = int_0^tau W_i W_j mu``.

    ``which`` is a :class:`Moment` or its string value.
    """
    which = Moment(which)
    p = primitive_integrals(k, tau)
    i1, a, b, c = p.i1, p.int_survival, p.int_s_survival, p.int_s_survival_sq
    q = p.survival_tau
    if which is Moment.E_T11:
        return i1
    qa, qb, qq = tau * q * a, q * b, (tau * q) ** 2
    if which is Moment.E_T11_SQ:
        return a * a + 4.0 * c - 8.0 * qb - 2.0 * qa + 3.0 * qq
    return 0.5 * i1 * i1 - 0.5 * a * a + 2.0 * c - 4.0 * qb + qa + 0.5 * qq
