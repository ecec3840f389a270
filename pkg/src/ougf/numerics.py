"""Quadrature, special functions and reproducible random streams.

Everything here is shared plumbing for the rest of the package: an adaptive
Gauss-Kronrod integrator with explicit failure reporting, digamma and
log-gamma for positive reals, and random streams keyed by a seed plus an
Ulam-Harris address.
"""

from __future__ import annotations

import hashlib
import heapq
import math
import multiprocessing as mp
import os
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

EULER_GAMMA = 0.57721566490153286061


class DomainError(ValueError):
    """Argument outside the domain of a special function or formula."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach its tolerance.

    The partial estimate and its error estimate are kept on the exception so
    callers can decide whether the result is still usable.
    """

    def __init__(self, message, estimate=math.nan, error=math.nan):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class QuadratureSettings:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be strictly positive")
        if int(self.max_subdivisions) < 1:
            raise ValueError("max_subdivisions must be at least 1")


DEFAULT_QUADRATURE = QuadratureSettings()

# 15-point Kronrod rule with its embedded 7-point Gauss rule on [-1, 1].
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_KW = np.concatenate([_WK[:-1], _WK[::-1]])
_GW = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes (xk[1], xk[3], xk[5], 0).
_GW[[1, 3, 5]] = _WG[:3]
_GW[7] = _WG[3]
_GW[[13, 11, 9]] = _WG[:3]


def _gk15(f, a, b, vectorized):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = mid + half * _NODES
    if vectorized:
        fx = np.asarray(f(x), dtype=float)
    else:
        fx = np.array([f(float(xi)) for xi in x], dtype=float)
    if not np.all(np.isfinite(fx)):
        raise QuadratureError(
            f"integrand not finite on [{a!r}, {b!r}]", estimate=math.nan
        )
    k = half * float(np.dot(_KW, fx))
    g = half * float(np.dot(_GW, fx))
    return k, abs(k - g)


def _map_infinite(f, a, b):
    """Rewrite an integral with infinite endpoints on a finite range."""
    if math.isinf(a) and math.isinf(b):
        raise ValueError("both endpoints infinite; split the range first")
    if math.isinf(b):
        # s = a - log u, u in (0, 1]
        def g(u):
            return f(a - math.log(u)) / u
        return g, 0.0, 1.0
    def g(u):
        return f(b + math.log(u)) / u
    return g, 0.0, 1.0


def adaptive_integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    settings: QuadratureSettings | None = None,
    *,
    vectorized: bool = False,
) -> float:
    """Integrate ``f`` over ``[a, b]`` by adaptive Gauss-Kronrod bisection.

    The interval with the largest error estimate is split until the summed
    estimate falls below ``max(abs_tol, rel_tol * |I|)``. Infinite endpoints
    are mapped onto ``(0, 1]`` with an exponential change of variable, so
    ``f`` must decay there. Endpoint singularities are fine as long as they
    are integrable, since the Kronrod nodes never touch the endpoints.

    Raises :class:`QuadratureError` on non-finite integrand values or when
    ``max_subdivisions`` is exhausted.
    """
    s = settings or DEFAULT_QUADRATURE
    a = float(a)
    b = float(b)
    if a == b:
        return 0.0
    if b < a:
        return -adaptive_integrate(f, b, a, s, vectorized=vectorized)
    if math.isinf(a) and math.isinf(b):
        return (adaptive_integrate(f, a, 0.0, s, vectorized=vectorized)
                + adaptive_integrate(f, 0.0, b, s, vectorized=vectorized))
    if math.isinf(a) or math.isinf(b):
        if vectorized:
            scalar = lambda x: float(np.asarray(f(np.array([x])))[0])
        else:
            scalar = f
        g, a, b = _map_infinite(scalar, a, b)
        f, vectorized = g, False

    val, err = _gk15(f, a, b, vectorized)
    heap = [(-err, a, b, val)]
    total, total_err = val, err
    splits = 0
    while True:
        tol = max(s.abs_tol, s.rel_tol * abs(total))
        if total_err <= tol:
            return total
        if not heap:
            raise QuadratureError(
                "quadrature hit floating-point resolution before tolerance",
                estimate=total, error=total_err,
            )
        if splits >= s.max_subdivisions:
            raise QuadratureError(
                f"no convergence within {s.max_subdivisions} subdivisions",
                estimate=total, error=total_err,
            )
        neg_err, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            # Interval cannot be split further; its error stays in the total.
            continue
        v1, e1 = _gk15(f, lo, mid, vectorized)
        v2, e2 = _gk15(f, mid, hi, vectorized)
        splits += 1
        total += v1 + v2 - v
        total_err += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))


def integrate_exponential_scale(
    g: Callable[[float], float],
    q: float,
    theta: float,
    t: float,
    settings: QuadratureSettings | None = None,
) -> float:
    """Return ``int_0^t g(q exp(-theta s)) ds``, including ``t = inf``.

    For ``theta != 0`` the substitution ``u = exp(-theta s)`` gives
    ``(1/theta) int g(q u)/u du`` over ``[exp(-theta t), 1]``, which removes
    the infinite endpoint when ``theta > 0``.
    """
    if t == 0:
        return 0.0
    if theta == 0:
        if math.isinf(t):
            raise ValueError("theta = 0 with an infinite horizon diverges")
        return t * g(q)
    if math.isinf(t) and theta < 0:
        raise ValueError("theta < 0 with an infinite horizon diverges")
    lo = 0.0 if math.isinf(t) else math.exp(-theta * t)
    val = adaptive_integrate(lambda u: g(q * u) / u, min(lo, 1.0), max(lo, 1.0), settings)
    return val / abs(theta)


# -- special functions ---------------------------------------------------------

_DIGAMMA_SERIES = (
    -1.0 / 12, 1.0 / 120, -1.0 / 252, 1.0 / 240, -1.0 / 132, 691.0 / 32760, -1.0 / 12,
)
_STIRLING_SERIES = (
    1.0 / 12, -1.0 / 360, 1.0 / 1260, -1.0 / 1680, 1.0 / 1188, -691.0 / 360360, 1.0 / 156,
)
_HALF_LOG_2PI = 0.91893853320467274178


def digamma(x: float) -> float:
    """Digamma function for ``x > 0`` via recurrence and the asymptotic series."""
    x = float(x)
    if not x > 0 or math.isinf(x):
        raise DomainError(f"digamma requires a finite x > 0, got {x!r}")
    shift = 0.0
    while x < 10.0:
        shift += 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    poly, p = 0.0, inv2
    for c in _DIGAMMA_SERIES:
        poly += c * p
        p *= inv2
    return math.log(x) - 0.5 / x + poly - shift


def log_gamma(x: float) -> float:
    """log Gamma(x) for ``x > 0`` via upward shift and the Stirling series."""
    x = float(x)
    if not x > 0 or math.isinf(x):
        raise DomainError(f"log_gamma requires a finite x > 0, got {x!r}")
    shift = 0.0
    while x < 10.0:
        shift += math.log(x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    poly, p = 0.0, inv
    for c in _STIRLING_SERIES:
        poly += c * p
        p *= inv2
    return (x - 0.5) * math.log(x) - x + _HALF_LOG_2PI + poly - shift


# -- random streams ------------------------------------------------------------

PathLike = Union[Sequence[Union[int, str]], str, int, None]
_MASK64 = (1 << 64) - 1
_LABEL_BIT = 1 << 63


def _label_key(label: str) -> int:
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    # Named labels live in the upper half of the key space, integers below it.
    return _LABEL_BIT | (int.from_bytes(digest, "little") >> 1)


def _path_key(path) -> tuple:
    if path is None:
        return ()
    if isinstance(path, (str, int, np.integer)):
        path = (path,)
    key = []
    for p in path:
        if isinstance(p, str):
            key.append(_label_key(p))
        else:
            p = int(p)
            if not 0 <= p < _LABEL_BIT:
                raise ValueError(f"path entries must be in [0, 2**63), got {p}")
            key.append(p)
    return tuple(key)


class RandomStream:
    """Reproducible generator addressed by ``(seed, path)``.

    The state is a Philox counter-based generator whose key is derived from
    the seed and path by ``numpy.random.SeedSequence``, so a stream depends
    only on its address and never on the order in which streams are made.
    Instances are single-consumer; make a :meth:`child` per consumer.
    """

    __slots__ = ("seed", "path", "_key", "rng")

    def __init__(self, seed: int, path: PathLike = ()):
        self.seed = int(seed) & _MASK64
        if isinstance(path, (str, int, np.integer)):
            path = (path,)
        self.path = tuple(path or ())
        self._key = _path_key(self.path)
        ss = np.random.SeedSequence(self.seed, spawn_key=self._key)
        self.rng = np.random.Generator(np.random.Philox(ss))

    def child(self, *index: int | str) -> "RandomStream":
        return RandomStream(self.seed, self.path + tuple(index))

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, path={self.path!r})"

    # Thin delegates for the draws used throughout the package.
    def uniform(self, low=0.0, high=1.0, size=None):
        return self.rng.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.rng.normal(loc, scale, size)

    def exponential(self, scale=1.0, size=None):
        return self.rng.exponential(scale, size)

    def poisson(self, lam=1.0, size=None):
        return self.rng.poisson(lam, size)

    def integers(self, low, high=None, size=None):
        return self.rng.integers(low, high, size)


def derive_stream(seed: int, path: PathLike = ()) -> RandomStream:
    """Stream for a particle or replication address under a master seed."""
    return RandomStream(seed, path)


def derive_seed(seed: int, *path: int | str) -> int:
    """64-bit seed derived from ``(seed, path)``, e.g. for one replication."""
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=_path_key(path))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


# -- replication fan-out -------------------------------------------------------

_TASK = None


def _call_task(i):
    return _TASK(i)


def parallel_map(fn: Callable, items: Sequence, workers: int | None = 1) -> list:
    """``[fn(x) for x in items]``, optionally across forked worker processes.

    ``fn`` reaches the workers through ``fork`` rather than pickling, so
    closures are fine. Results come back in input order, so the output does
    not depend on scheduling.
    """
    items = list(items)
    if workers is None:
        workers = os.cpu_count() or 1
    workers = max(1, int(workers))
    if workers == 1 or len(items) < 2 or "fork" not in mp.get_all_start_methods():
        return [fn(x) for x in items]
    global _TASK
    _TASK = fn
    try:
        with mp.get_context("fork").Pool(min(workers, len(items))) as pool:
            return pool.map(_call_task, items, chunksize=max(1, len(items) // (4 * workers)))
    finally:
        _TASK = None
