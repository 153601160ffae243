"""Memory kernels: non-increasing densities on ``[0, inf)`` with finite mean.

Every kernel exposes the density ``mu``, the cumulative ``M``, the tail
``1 - M`` (evaluated from its own closed form, never as ``1 - M``), both
inverses and the first moment.  Evaluation methods accept scalars or numpy
arrays and return the same shape back.
"""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from .special import regularized_lower_gamma, regularized_upper_gamma

__all__ = [
    "Family",
    "KernelDescriptor",
    "KernelSpecError",
    "Uniform",
    "HalfNormal",
    "Exponential",
    "StretchedExponential",
    "Lomax",
    "parse_kernel_spec",
]

_SQRT2 = math.sqrt(2.0)
_BISECT_WIDTH = 1e-14

_P = np.vectorize(regularized_lower_gamma, otypes=[float])
_Q = np.vectorize(regularized_upper_gamma, otypes=[float])


class KernelSpecError(ValueError):
    """Raised for malformed kernel specifications or invalid parameters."""


class Family(enum.Enum):
    UNIFORM = "uniform"
    HALF_NORMAL = "halfnormal"
    EXPONENTIAL = "exponential"
    STRETCHED_EXPONENTIAL = "stretched"
    LOMAX = "lomax"


def _times(t):
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0):
        raise ValueError("time argument must be non-negative")
    return arr


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def _positive(name, value):
    value = float(value)
    if not (value > 0.0) or math.isinf(value):
        raise KernelSpecError(f"parameter {name} must be positive and finite, got {value!r}")
    return value


@dataclass(frozen=True)
class KernelDescriptor:
    """Base class of the concrete kernel families.

    Subclasses implement ``_pdf``, ``_cdf``, ``_sf`` on float arrays and
    ``_isf`` on tail probabilities in ``(0, 1]``.
    """

    family = None

    @property
    def params(self) -> dict[str, float]:
        return {}

    @property
    def support_end(self) -> float:
        return math.inf

    def spec(self) -> str:
        """Canonical specification string that round-trips through :func:`parse_kernel_spec`."""
        if not self.params:
            return self.family.value
        body = ",".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{self.family.value}:{body}"

    def __str__(self):
        return self.spec()

    # evaluation -----------------------------------------------------------

    def density(self, t):
        arr = _times(t)
        return _out(self._pdf(arr), t)

    def cumulative(self, t):
        arr = _times(t)
        return _out(np.clip(self._cdf(arr), 0.0, 1.0), t)

    def survival(self, t):
        arr = _times(t)
        return _out(np.clip(self._sf(arr), 0.0, 1.0), t)

    def inverse_cumulative(self, u):
        """Quantile ``M^{-1}(u)`` for ``0 <= u < 1``."""
        arr = np.asarray(u, dtype=float)
        if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr >= 1.0):
            raise ValueError("u must lie in [0, 1)")
        return _out(self._ppf(arr), u)

    def inverse_survival(self, q):
        """Time at which the tail mass equals ``q``, for ``0 < q <= 1``.

        Vectorised; used by the sampler for bulk inversion deep in the tail.
        """
        arr = np.asarray(q, dtype=float)
        if np.any(np.isnan(arr)) or np.any(arr <= 0.0) or np.any(arr > 1.0):
            raise ValueError("q must lie in (0, 1]")
        return _out(np.maximum(self._isf(arr), 0.0), q)

    def first_moment(self) -> float:
        raise NotImplementedError

    # root finding for families without a closed-form quantile ------------

    def _bisect_quantile(self, u: float) -> float:
        if u == 0.0:
            return 0.0
        # 1 - u is exact for u >= 1/2, so tail targets keep full precision.
        if u > 0.5:
            q = 1.0 - u

            def left_of_root(t):
                return float(self._sf(np.float64(t))) > q
        else:
            def left_of_root(t):
                return float(self._cdf(np.float64(t))) < u

        lo, hi = 0.0, self.first_moment()
        while left_of_root(hi):
            lo, hi = hi, 2.0 * hi
        while hi - lo > _BISECT_WIDTH:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if left_of_root(mid):
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


@dataclass(frozen=True)
class Uniform(KernelDescriptor):
    r: float = 1.0
    family = Family.UNIFORM

    def __post_init__(self):
        object.__setattr__(self, "r", _positive("r", self.r))

    @property
    def params(self):
        return {"r": self.r}

    @property
    def support_end(self):
        return self.r

    def _pdf(self, t):
        return np.where(t < self.r, 1.0 / self.r, 0.0)

    def _cdf(self, t):
        return np.minimum(t / self.r, 1.0)

    def _sf(self, t):
        return np.maximum(1.0 - t / self.r, 0.0)

    def _ppf(self, u):
        return u * self.r

    def _isf(self, q):
        return (1.0 - q) * self.r

    def first_moment(self):
        return self.r / 2.0


@dataclass(frozen=True)
class HalfNormal(KernelDescriptor):
    """Half-normal kernel with unit scale."""

    family = Family.HALF_NORMAL

    def _pdf(self, t):
        return math.sqrt(2.0 / math.pi) * np.exp(-0.5 * t * t)

    def _cdf(self, t):
        return sc.erf(t / _SQRT2)

    def _sf(self, t):
        return sc.erfc(t / _SQRT2)

    def _ppf(self, u):
        if u.ndim == 0:
            return np.float64(self._bisect_quantile(float(u)))
        return np.array([self._bisect_quantile(float(x)) for x in u.ravel()]).reshape(u.shape)

    def _isf(self, q):
        return _SQRT2 * sc.erfcinv(q)

    def first_moment(self):
        return math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class Exponential(KernelDescriptor):
    rate: float = 1.0
    family = Family.EXPONENTIAL

    def __post_init__(self):
        object.__setattr__(self, "rate", _positive("lambda", self.rate))

    @property
    def params(self):
        return {"lambda": self.rate}

    def _pdf(self, t):
        return self.rate * np.exp(-self.rate * t)

    def _cdf(self, t):
        return -np.expm1(-self.rate * t)

    def _sf(self, t):
        return np.exp(-self.rate * t)

    def _ppf(self, u):
        return -np.log1p(-u) / self.rate

    def _isf(self, q):
        return -np.log(q) / self.rate

    def first_moment(self):
        return 1.0 / self.rate


@dataclass(frozen=True)
class StretchedExponential(KernelDescriptor):
    """Density ``a exp(-t^a) / Gamma(1/a)``; ``a = 1`` is the unit exponential."""

    a: float = 1.0
    family = Family.STRETCHED_EXPONENTIAL

    def __post_init__(self):
        object.__setattr__(self, "a", _positive("a", self.a))

    @property
    def params(self):
        return {"a": self.a}

    def _pdf(self, t):
        return self.a * np.exp(-(t ** self.a)) / math.gamma(1.0 / self.a)

    def _cdf(self, t):
        return _P(1.0 / self.a, t ** self.a)

    def _sf(self, t):
        return _Q(1.0 / self.a, t ** self.a)

    def _ppf(self, u):
        if u.ndim == 0:
            return np.float64(self._bisect_quantile(float(u)))
        return np.array([self._bisect_quantile(float(x)) for x in u.ravel()]).reshape(u.shape)

    def _isf(self, q):
        return sc.gammainccinv(1.0 / self.a, q) ** (1.0 / self.a)

    def first_moment(self):
        return math.gamma(2.0 / self.a) / math.gamma(1.0 / self.a)


@dataclass(frozen=True)
class Lomax(KernelDescriptor):
    """Pareto type II density ``(a/scale) (1 + t/scale)^{-(a+1)}``; requires ``a > 1``."""

    a: float = 2.0
    scale: float = 1.0
    family = Family.LOMAX

    def __post_init__(self):
        a = _positive("a", self.a)
        if a <= 1.0:
            raise KernelSpecError(f"lomax shape a={a!r}: first moment must be finite (a > 1)")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "scale", _positive("scale", self.scale))

    @property
    def params(self):
        return {"a": self.a, "scale": self.scale}

    def _pdf(self, t):
        return (self.a / self.scale) * (1.0 + t / self.scale) ** (-(self.a + 1.0))

    def _cdf(self, t):
        return -np.expm1(-self.a * np.log1p(t / self.scale))

    def _sf(self, t):
        return np.exp(-self.a * np.log1p(t / self.scale))

    def _ppf(self, u):
        return self.scale * np.expm1(-np.log1p(-u) / self.a)

    def _isf(self, q):
        return self.scale * np.expm1(-np.log(q) / self.a)

    def first_moment(self):
        return self.scale / (self.a - 1.0)


_FAMILIES = {
    "uniform": (Uniform, {"r": "r"}, set()),
    "halfnormal": (HalfNormal, {}, set()),
    "exponential": (Exponential, {"lambda": "rate"}, set()),
    "stretched": (StretchedExponential, {"a": "a"}, {"a"}),
    "lomax": (Lomax, {"a": "a", "scale": "scale"}, {"a"}),
}

_SPEC_RE = re.compile(r"^(?P<family>[a-z]+)(?::(?P<body>.+))?$")
_FLOAT_RE = re.compile(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?$")


def parse_kernel_spec(spec: str) -> KernelDescriptor:
    """Parse ``family[:key=value{,key=value}]`` into a validated kernel.

    >>> parse_kernel_spec("lomax:a=1.5")
    Lomax(a=1.5, scale=1.0)
    """
    m = _SPEC_RE.match(spec.strip())
    if m is None:
        raise KernelSpecError(f"malformed kernel spec {spec!r}")
    name = m.group("family")
    if name not in _FAMILIES:
        raise KernelSpecError(f"unknown kernel family {name!r} (choose from {', '.join(_FAMILIES)})")
    cls, keymap, required = _FAMILIES[name]
    kwargs = {}
    if m.group("body") is not None:
        for item in m.group("body").split(","):
            key, sep, value = item.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in keymap:
                raise KernelSpecError(f"unknown or malformed parameter {item!r} for {name}")
            if keymap[key] in kwargs:
                raise KernelSpecError(f"duplicate parameter {key!r}")
            if not _FLOAT_RE.match(value):
                raise KernelSpecError(f"parameter {key}={value!r} is not a decimal literal")
            kwargs[keymap[key]] = float(value)
    missing = {k for k in required if keymap[k] not in kwargs}
    if missing:
        raise KernelSpecError(f"{name} kernel requires parameter(s): {', '.join(sorted(missing))}")
    return cls(**kwargs)
