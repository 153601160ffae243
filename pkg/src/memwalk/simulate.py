"""Replica-level Monte Carlo drivers.

Replica ``i`` always draws from ``RngStream(seed, i)``, and chunk results are
reassembled in replica order, so outputs do not depend on the worker count.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .kernels import KernelDescriptor
from .sampler import RngStream, sample_memory_set
from .shape import TensorBatch, align_for_density, gyration_tensor

__all__ = [
    "default_threads",
    "horizon_integral_samples",
    "map_replicas",
    "simulate_aligned",
    "simulate_tensors",
]


def default_threads() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def _chunks(replicas, threads):
    n_chunks = max(1, min(replicas, 4 * threads))
    edges = np.linspace(0, replicas, n_chunks + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges, edges[1:]) if b > a]


def map_replicas(worker, args, replicas: int, threads: int | None = None):
    """Run ``worker(*args, start, stop)`` over replica ranges and return the results in order."""
    if replicas < 1:
        raise ValueError("replicas must be at least 1")
    threads = default_threads() if threads is None else int(threads)
    if threads < 1:
        raise ValueError("threads must be at least 1")
    chunks = _chunks(replicas, threads)
    if threads == 1 or len(chunks) == 1:
        return [worker(*args, a, b) for a, b in chunks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(worker, *args, a, b) for a, b in chunks]
        return [f.result() for f in futures]


def _tensor_chunk(k, c, seed, start, stop):
    out = np.empty((stop - start, 3))
    n = np.empty(stop - start, dtype=np.int64)
    trunc = np.zeros(stop - start, dtype=bool)
    for j, i in enumerate(range(start, stop)):
        mem = sample_memory_set(k, c, RngStream(seed, i))
        g = gyration_tensor(mem)
        out[j] = g.t11, g.t12, g.t22
        n[j] = g.n_points
        trunc[j] = mem.truncated
    return out, n, trunc


def simulate_tensors(
    k: KernelDescriptor, c: float, replicas: int, seed: int, threads: int | None = None
) -> TensorBatch:
    """Gyration tensors of ``replicas`` independent memory sets."""
    parts = map_replicas(_tensor_chunk, (k, c, seed), replicas, threads)
    vals = np.concatenate([p[0] for p in parts])
    return TensorBatch(
        t11=vals[:, 0],
        t12=vals[:, 1],
        t22=vals[:, 2],
        n=np.concatenate([p[1] for p in parts]),
        truncated=np.concatenate([p[2] for p in parts]),
    )


def _aligned_chunk(k, c, seed, start, stop):
    out = []
    for i in range(start, stop):
        mem = sample_memory_set(k, c, RngStream(seed, i))
        out.append((i, align_for_density(mem) if len(mem) >= 2 else None))
    return out


def simulate_aligned(k, c, replicas, seed, threads=None):
    """``[(replica, points or None)]`` with points from :func:`align_for_density`; ``None`` marks degenerate sets."""
    parts = map_replicas(_aligned_chunk, (k, c, seed), replicas, threads)
    return [item for part in parts for item in part]


def _horizon_chunk(k, c, tau, seed, start, stop):
    out = np.empty((stop - start, 6))
    for j, i in enumerate(range(start, stop)):
        mem = sample_memory_set(k, c, RngStream(seed, i))
        xy = mem.locations[mem.times <= tau]
        x2 = xy[:, 0] ** 2
        y2 = xy[:, 1] ** 2
        xy_ = xy[:, 0] * xy[:, 1]
        out[j] = x2.sum(), y2.sum(), xy_.sum(), (x2 * x2).sum(), (y2 * y2).sum(), (xy_ * xy_).sum()
    return out


def horizon_integral_samples(k, c, tau, replicas, seed, threads=None):
    """Per-replica Poisson estimates of ``int_0^tau W_i W_j mu``.

    Returns a dict of arrays: ``t11``, ``t22``, ``t12`` are ``c^{-1} sum``
    over memory times up to ``tau`` (unbiased for the integrals), and
    ``t11_sq``, ``t22_sq``, ``t12_sq`` subtract ``c^{-2} sum f^2`` from the
    squared sums so they are unbiased for the squared integrals.
    """
    parts = map_replicas(_horizon_chunk, (k, c, tau, seed), replicas, threads)
    raw = np.concatenate(parts) / c
    s11, s22, s12 = raw[:, 0], raw[:, 1], raw[:, 2]
    return {
        "t11": s11,
        "t22": s22,
        "t12": s12,
        "t11_sq": s11 ** 2 - raw[:, 3] / c,
        "t22_sq": s22 ** 2 - raw[:, 4] / c,
        "t12_sq": s12 ** 2 - raw[:, 5] / c,
    }
