"""Destruction of random recursive trees and its closed-form functionals.

Vertex ``i >= 2`` of a recursive tree attaches to a uniform vertex among
``1, ..., i - 1``. Each edge carries an exponential clock and is removed when
it rings; the clusters at time ``t``, rescaled by ``n^{-e^{-t}}``, converge to
a binary OU type growth-fragmentation with ``theta = 1``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dislocation import MassPartition, rrt_sample_u
from .numerics import DomainError, RandomStream, digamma, log_gamma


@dataclass(frozen=True)
class RecursiveTree:
    """``parent[i - 1]`` is the parent label of vertex ``i`` (0 for the root)."""

    n: int
    parent: np.ndarray

    def parent_of(self, i: int) -> int:
        return int(self.parent[i - 1])

    def restrict(self, m: int) -> "RecursiveTree":
        """Subtree spanned by vertices ``1, ..., m``; again a recursive tree."""
        if not 1 <= m <= self.n:
            raise ValueError("m must lie in [1, n]")
        return RecursiveTree(m, self.parent[:m])


@dataclass(frozen=True)
class DestructionSchedule:
    """``clock[i - 1]`` is the ringing time of the edge above vertex ``i``.

    The root has no edge; its entry is ``inf``.
    """

    clock: np.ndarray

    def restrict(self, m: int) -> "DestructionSchedule":
        return DestructionSchedule(self.clock[:m])


@dataclass(frozen=True)
class ClusterPartition:
    """Clusters at time ``t``; ids are ordered by the smallest vertex."""

    t: float
    cluster_of: np.ndarray
    sizes: np.ndarray

    @property
    def n_clusters(self) -> int:
        return int(self.sizes.size)

    def members(self, cid: int) -> np.ndarray:
        return np.flatnonzero(self.cluster_of == cid) + 1


def build_tree(n: int, stream: RandomStream) -> RecursiveTree:
    """Uniform recursive tree on ``{1, ..., n}``."""
    n = int(n)
    if n < 1:
        raise ValueError("a recursive tree needs n >= 1")
    parent = np.zeros(n, dtype=np.int64)
    if n > 1:
        i = np.arange(2, n + 1)
        u = stream.rng.random(n - 1)
        parent[1:] = np.minimum(np.floor(u * (i - 1)).astype(np.int64), i - 2) + 1
    return RecursiveTree(n, parent)


def destruction_schedule(n: int, stream: RandomStream) -> DestructionSchedule:
    clock = np.empty(int(n))
    clock[0] = math.inf
    clock[1:] = stream.rng.exponential(1.0, int(n) - 1)
    return DestructionSchedule(clock)


def destroy_at(tree: RecursiveTree, schedule: DestructionSchedule, t: float) -> ClusterPartition:
    """Connected components after removing edges whose clock rang by ``t``.

    Each vertex is mapped to the nearest ancestor reachable through
    surviving edges by pointer jumping; that ancestor is the smallest vertex
    of the cluster.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    n = tree.n
    idx = np.arange(n)
    alive = schedule.clock[:n] > t
    alive[0] = False
    rep = np.where(alive, tree.parent - 1, idx)
    while True:
        nxt = rep[rep]
        if np.array_equal(nxt, rep):
            break
        rep = nxt
    roots, cluster_of = np.unique(rep, return_inverse=True)
    sizes = np.bincount(cluster_of, minlength=roots.size)
    return ClusterPartition(float(t), cluster_of, sizes)


def cluster_weights(partition: ClusterPartition, n: int, t: float) -> np.ndarray:
    """``n^{-e^{-t}} |cluster|`` in nonincreasing order."""
    scale = math.exp(-math.exp(-t) * math.log(n)) if n > 1 else 1.0
    return np.sort(partition.sizes)[::-1] * scale


def kappa_rrt(q: float) -> float:
    """``q digamma(q + 1) + 1 / (q - 1)`` for ``q > 1``."""
    if not q > 1:
        raise DomainError("kappa_rrt requires q > 1 (pole at q = 1)")
    return q * digamma(q + 1.0) + 1.0 / (q - 1.0)


def rrt_moment(q: float, t: float) -> float:
    """``E sum X_i(t)^q = (q - 1)/(e^{-t} q - 1) Gamma(q)/Gamma(e^{-t} q)`` for ``q > e^t``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    r = math.exp(-t) * q
    if not r > 1:
        raise DomainError("rrt_moment requires q > e^t")
    return (q - 1.0) / (r - 1.0) * math.exp(log_gamma(q) - log_gamma(r))


def sample_rrt_split(level: float, stream: RandomStream, size: int | None = None):
    """Draw ``(s1, 1 - s1)`` from ``(s^{-2} + (1 - s)^{-2}) ds`` on ``[1/2, 1 - e^{-level}]``."""
    if not level > 0:
        raise ValueError("sample_rrt_split requires level > 0")
    u_lo = min(math.exp(-level), 0.5)
    u = rrt_sample_u(stream.rng, u_lo, 0.5, 1 if size is None else size)
    if size is None:
        return MassPartition((1.0 - u[0], u[0]))
    return np.column_stack([1.0 - u, u])


def rrt_split_cdf(s, level: float):
    """Distribution function of ``s1`` under :func:`sample_rrt_split`."""
    def H(x):
        return 1.0 / (1.0 - x) - 1.0 / x
    top = -math.expm1(-level)
    s = np.clip(np.asarray(s, dtype=float), 0.5, top)
    return (H(s) - H(0.5)) / (H(top) - H(0.5))


def weight_moments(tree: RecursiveTree, schedule: DestructionSchedule, q: float, times,
                   sizes: Sequence[int] | None = None) -> np.ndarray:
    """``sum w_i^q`` at each time for the tree restricted to each size in ``sizes``."""
    sizes = [tree.n] if sizes is None else list(sizes)
    out = np.empty((len(sizes), len(np.atleast_1d(times))))
    for a, m in enumerate(sizes):
        sub, sch = tree.restrict(m), schedule.restrict(m)
        for b, t in enumerate(np.atleast_1d(times)):
            w = cluster_weights(destroy_at(sub, sch, t), m, t)
            out[a, b] = float(np.sum(w ** q))
    return out


def dump_weights(rows, path) -> None:
    """Write ``(run_id, t, rank, weight, cluster_size)`` rows for
    ``rows = [(run_id, t, partition, n), ...]``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run_id", "t", "rank", "weight", "cluster_size"])
        for rid, t, part, n in rows:
            sizes = np.sort(part.sizes)[::-1]
            scale = math.exp(-math.exp(-t) * math.log(n)) if n > 1 else 1.0
            for rank, cs in enumerate(sizes, start=1):
                w.writerow([rid, format(t, ".17g"), rank, format(cs * scale, ".17g"), int(cs)])
