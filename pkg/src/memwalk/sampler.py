"""Sampling memorised sets: Poisson memory times plus Brownian positions.

Memory times form an inhomogeneous Poisson process of intensity ``c mu(t)``.
Arrivals are generated forward in time by inverting the conditional law of
the next arrival.  Working with the tail mass ``q = 1 - M`` keeps the
inversion accurate for fat-tailed kernels: each arrival lowers ``q`` by an
Exp(1) variate divided by ``c``, and the walk stops once ``q`` would go
negative.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .kernels import KernelDescriptor, Lomax
from .quadrature import integrate

__all__ = [
    "MemorySet",
    "RngStream",
    "TAIL_FLOOR",
    "campbell_moment_oracle",
    "next_arrival",
    "sample_memory_set",
    "sample_memory_times",
]

#: Arrivals whose tail mass falls below this are pinned to ``inverse_survival(TAIL_FLOOR)``.
TAIL_FLOOR = 1e-15


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream for one replica.

    Replica ``k`` is reproducible without generating replicas ``0..k-1``:
    the Philox key is derived from ``(master_seed, stream_index)`` through
    :class:`numpy.random.SeedSequence`.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not (0 <= int(self.master_seed) < 2 ** 64):
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if int(self.stream_index) < 0:
            raise ValueError("stream_index must be non-negative")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_index),))
        return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True, eq=False)
class MemorySet:
    """One realisation: memory times and the walker's positions at those times.

    The origin ``(t=0, x=0, y=0)`` is implicit and not stored.
    """

    times: np.ndarray
    locations: np.ndarray
    truncated: bool = False

    def __len__(self):
        return len(self.times)

    def to_csv(self) -> str:
        """``t,x,y`` rows, origin first, 17 significant digits."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "x", "y"])
        writer.writerow(["0", "0", "0"])
        for t, (x, y) in zip(self.times, self.locations):
            writer.writerow([f"{t:.17g}", f"{x:.17g}", f"{y:.17g}"])
        return buf.getvalue()


def _check_rate(c):
    c = float(c)
    if not (c > 0.0) or math.isinf(c):
        raise ValueError(f"memory rate c must be positive and finite, got {c!r}")
    return c


def _generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError("rng must be an RngStream or numpy Generator")


def next_arrival(k: KernelDescriptor, c: float, tau: float, u: float):
    """Next memory time after ``tau`` given a uniform variate ``u``, or ``None``.

    ``None`` means ``u`` is at least the probability of any further arrival,
    ``1 - exp(-c S(tau))``, so ``tau`` was the last memory time.
    """
    c = _check_rate(c)
    if not (0.0 <= u < 1.0):
        raise ValueError("u must lie in [0, 1)")
    q = k.survival(tau) + math.log1p(-u) / c
    if q <= 0.0:
        return None
    return float(k.inverse_survival(max(q, TAIL_FLOOR)))


def _arrival_tails(c, gen):
    """Tail masses ``q_1 > q_2 > ...`` of successive arrivals (all positive)."""
    block = int(math.ceil(c + 6.0 * math.sqrt(c) + 16.0))
    offset = 0.0
    pieces = []
    while True:
        spent = offset + np.cumsum(-np.log1p(-gen.random(block)))
        stop = int(np.searchsorted(spent, c, side="left"))
        pieces.append(spent[:stop])
        if stop < block:
            break
        offset = spent[-1]
    spent = np.concatenate(pieces)
    return (c - spent) / c


def _sample_times(k, c, gen):
    q = _arrival_tails(c, gen)
    deep = q < TAIL_FLOOR
    truncated = bool(deep.any())
    if truncated:
        q = np.where(deep, TAIL_FLOOR, q)
    times = np.asarray(k.inverse_survival(q), dtype=float).reshape(-1)
    return times, truncated


def sample_memory_times(k: KernelDescriptor, c: float, rng) -> np.ndarray:
    """Ordered memory times of one realisation (possibly empty)."""
    c = _check_rate(c)
    return _sample_times(k, c, _generator(rng))[0]


def sample_memory_set(k: KernelDescriptor, c: float, rng) -> MemorySet:
    """Memory times and the planar Brownian positions at those times.

    Positions start from the origin at ``t = 0``; each coordinate picks up an
    independent ``N(0, dt)`` increment between consecutive memory times.
    """
    c = _check_rate(c)
    gen = _generator(rng)
    times, truncated = _sample_times(k, c, gen)
    dt = np.maximum(np.diff(times, prepend=0.0), 0.0)
    steps = gen.standard_normal((len(times), 2)) * np.sqrt(dt)[:, None]
    return MemorySet(times=times, locations=np.cumsum(steps, axis=0), truncated=truncated)


def _raw_moment(k, p):
    if p == 0:
        return 1.0
    if isinstance(k, Lomax) and p >= k.a:
        raise ValueError(f"integral of t^{p} against {k} diverges (needs a > {p})")
    pts = (k.support_end,) if math.isfinite(k.support_end) else ()
    return integrate(lambda t: t ** p * float(k._pdf(t)), 0.0, math.inf, pts)


def campbell_moment_oracle(k: KernelDescriptor, c: float, power_m: int, moment_order: int) -> float:
    """Exact first or second moment of ``sum_{t in S} t^m``.

    With ``I(f) = c int f mu``, the first moment is ``I(t^m)`` and the second
    is ``I(t^m)^2 + I(t^{2m})``.
    """
    c = _check_rate(c)
    if int(power_m) != power_m or power_m < 0:
        raise ValueError("power_m must be a non-negative integer")
    m = int(power_m)
    if moment_order == 1:
        return c * _raw_moment(k, m)
    if moment_order == 2:
        first = c * _raw_moment(k, m)
        return first * first + c * _raw_moment(k, 2 * m)
    raise ValueError("moment_order must be 1 or 2")
