"""Egocentric gyration tensor, its ellipse, and the asphericity estimator."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .sampler import MemorySet

__all__ = [
    "AsphericityEstimate",
    "EllipseParams",
    "GyrationTensor",
    "TensorBatch",
    "align_for_density",
    "asphericity_estimate",
    "eigen_decomposition",
    "ellipse",
    "gyration_tensor",
]


@dataclass(frozen=True)
class GyrationTensor:
    """Second moments of the memorised positions about the walker's current position.

    Sums are normalised by ``1 + n_points``: the origin counts as a memory.
    """

    t11: float
    t12: float
    t22: float
    n_points: int = 0

    @property
    def trace(self) -> float:
        return self.t11 + self.t22

    @property
    def det(self) -> float:
        return self.t11 * self.t22 - self.t12 * self.t12


@dataclass(frozen=True)
class EllipseParams:
    semi_major: float
    semi_minor: float
    angle_theta: float


@dataclass(frozen=True)
class AsphericityEstimate:
    a2_hat: float
    stderr: float
    replicas: int
    mean_num: float
    mean_den: float


@dataclass(frozen=True, eq=False)
class TensorBatch:
    """Column-oriented gyration tensors for many replicas, in replica order."""

    t11: np.ndarray
    t12: np.ndarray
    t22: np.ndarray
    n: np.ndarray
    truncated: np.ndarray | None = None

    def __len__(self):
        return len(self.t11)

    @classmethod
    def from_tensors(cls, tensors: Iterable[GyrationTensor]) -> "TensorBatch":
        tensors = list(tensors)
        return cls(
            t11=np.array([t.t11 for t in tensors], dtype=float),
            t12=np.array([t.t12 for t in tensors], dtype=float),
            t22=np.array([t.t22 for t in tensors], dtype=float),
            n=np.array([t.n_points for t in tensors], dtype=np.int64),
        )

    def __iter__(self):
        for a, b, c, n in zip(self.t11, self.t12, self.t22, self.n):
            yield GyrationTensor(float(a), float(b), float(c), int(n))

    def scaled(self, factor: float) -> "TensorBatch":
        """Tensors of the same replicas with every position multiplied by ``factor``."""
        f2 = factor * factor
        return TensorBatch(self.t11 * f2, self.t12 * f2, self.t22 * f2, self.n, self.truncated)


def _tensor_sums(xy: np.ndarray):
    x = xy[:, 0]
    y = xy[:, 1]
    return float(x @ x), float(x @ y), float(y @ y)


def gyration_tensor(mem: MemorySet) -> GyrationTensor:
    n = len(mem)
    if n == 0:
        return GyrationTensor(0.0, 0.0, 0.0, 0)
    sxx, sxy, syy = _tensor_sums(np.asarray(mem.locations, dtype=float))
    d = 1.0 + n
    return GyrationTensor(sxx / d, sxy / d, syy / d, n)


def eigen_decomposition(T: GyrationTensor):
    """Closed-form eigenpairs of the 2x2 tensor.

    Returns ``(lambda1, lambda2, theta)`` with ``lambda1 >= lambda2`` and
    ``theta`` in ``[0, pi)`` the angle of the major axis.  The smaller
    eigenvalue is taken as ``det / lambda1`` to avoid cancellation.  When the
    eigenvalues coincide, ``theta = 0``.
    """
    tr = T.t11 + T.t22
    gap = math.hypot(T.t11 - T.t22, 2.0 * T.t12)
    lam1 = 0.5 * (tr + gap)
    # det / lam1, with each factor scaled first so tiny tensors do not underflow
    lam2 = (T.t11 / lam1) * T.t22 - (T.t12 / lam1) * T.t12 if lam1 > 0.0 else 0.0
    if gap == 0.0:
        theta = 0.0
    else:
        theta = (0.5 * math.atan2(2.0 * T.t12, T.t11 - T.t22)) % math.pi
        if theta >= math.pi:
            theta = 0.0
    return lam1, lam2, theta


def ellipse(T: GyrationTensor, kappa: float = 2.0) -> EllipseParams:
    """Ellipse ``v^T T^{-1} v = kappa^2``: axes ``kappa sqrt(lambda_i)`` along the eigenvectors."""
    if not (kappa > 0.0):
        raise ValueError("kappa must be positive")
    lam1, lam2, theta = eigen_decomposition(T)
    return EllipseParams(
        semi_major=kappa * math.sqrt(max(lam1, 0.0)),
        semi_minor=kappa * math.sqrt(max(lam2, 0.0)),
        angle_theta=theta,
    )


def _as_batch(tensors) -> TensorBatch:
    if isinstance(tensors, TensorBatch):
        return tensors
    return TensorBatch.from_tensors(tensors)


def asphericity_estimate(tensors: TensorBatch | Sequence[GyrationTensor], jackknife: bool = False) -> AsphericityEstimate:
    """Ratio-of-means estimator of ``E[(l1 - l2)^2] / E[(l1 + l2)^2]``.

    The numerator is formed per replica as ``(t11 - t22)^2 + 4 t12^2``, never
    by subtracting eigenvalues.  The standard error is from the delta method
    on the two replica means, or the leave-one-out jackknife when
    ``jackknife`` is set.
    """
    batch = _as_batch(tensors)
    n = len(batch)
    if n == 0:
        raise ValueError("asphericity_estimate needs at least one replica")
    num = (batch.t11 - batch.t22) ** 2 + 4.0 * batch.t12 ** 2
    den = (batch.t11 + batch.t22) ** 2
    mean_num = float(num.mean())
    mean_den = float(den.mean())
    if mean_den == 0.0:
        raise ValueError("all replicas have a zero tensor; asphericity is undefined")
    ratio = mean_num / mean_den
    if n < 2:
        stderr = 0.0
    elif jackknife:
        loo = (num.sum() - num) / (den.sum() - den)
        stderr = math.sqrt((n - 1) / n * float(((loo - loo.mean()) ** 2).sum()))
    else:
        resid = num - ratio * den
        stderr = math.sqrt(float(resid.var(ddof=1)) / n) / mean_den
    return AsphericityEstimate(
        a2_hat=min(max(ratio, 0.0), 1.0),
        stderr=stderr,
        replicas=n,
        mean_num=mean_num,
        mean_den=mean_den,
    )


def align_for_density(mem: MemorySet) -> np.ndarray:
    """Rotate a memory set so its major axis is horizontal and its centre of mass has ``x > 0``.

    Returns an ``(n + 1, 2)`` array whose first row is the origin.
    """
    n = len(mem)
    if n < 2:
        raise ValueError(f"alignment needs at least 2 memorised points, got {n}")
    _, _, theta = eigen_decomposition(gyration_tensor(mem))
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    rot = np.array([[cos_t, sin_t], [-sin_t, cos_t]])
    pts = np.asarray(mem.locations, dtype=float) @ rot.T
    if pts[:, 0].sum() < 0.0:
        pts = -pts
    return np.vstack([np.zeros((1, 2)), pts])
