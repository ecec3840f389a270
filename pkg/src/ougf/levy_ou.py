"""Spectrally negative Levy processes and the OU type processes they drive.

A Levy process is given by its characteristics ``(sigma, c, Lambda, k)``
with Laplace exponent

    Phi(q) = -k + sigma^2 q^2 / 2 + c q + int (e^{qy} - 1 + q(1 - e^y)) Lambda(dy),

and the OU type process solves ``Z(t) = e^{-theta t} z + int_0^t e^{-theta(t-s)} dxi(s)``.
Simulation is exact at the level of the driver: the Gaussian part is a
Gaussian OU process sampled through its transition law, jumps are placed at
their epochs, and killing is an exponential clock after which the value is
``-inf``. Drivers with infinitely many small jumps must be truncated at a
cutoff ``eps`` in ``|1 - e^y|``.
"""

from __future__ import annotations

import bisect
import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .numerics import (
    DEFAULT_QUADRATURE,
    QuadratureSettings,
    RandomStream,
    adaptive_integrate,
    integrate_exponential_scale,
)


class InfiniteActivityError(ValueError):
    """A density driver with infinitely many small jumps was not truncated."""


class NoStationaryDistribution(ValueError):
    """The OU process has no stationary law."""


# -- jump measures -------------------------------------------------------------

def phi_integrand(q: float, y):
    """``e^{qy} - 1 + q(1 - e^y)`` with care for small ``|y|``."""
    y = np.asarray(y, dtype=float)
    out = np.expm1(q * y) - q * np.expm1(y)
    small = np.abs(y) < 1e-4
    if np.any(small):
        ys = y[small]
        # sum_{n>=2} (q^n - q) y^n / n!
        acc = np.zeros_like(ys)
        qn, yn, fact = q, ys.copy(), 1.0
        for n in range(2, 7):
            qn *= q
            yn = yn * ys
            fact *= n
            acc += (qn - q) * yn / fact
        out = np.where(small, 0.0, out)
        out[small] = acc
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class AtomJumps:
    """Finitely many jump sizes ``y < 0`` with rates."""

    locations: tuple
    rates: tuple

    def __post_init__(self):
        locs = tuple(float(y) for y in np.atleast_1d(self.locations))
        rates = tuple(float(r) for r in np.atleast_1d(self.rates))
        if len(locs) != len(rates):
            raise ValueError("locations and rates must have equal length")
        if any(not (y < 0) or math.isinf(y) for y in locs):
            raise ValueError("jump locations must be finite and negative")
        if any(not (r > 0) or math.isinf(r) for r in rates):
            raise ValueError("jump rates must be finite and positive")
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "rates", rates)

    @property
    def total_rate(self) -> float:
        return float(sum(self.rates))

    def integrate(self, h, lo=-math.inf, hi=0.0, settings=None) -> float:
        """``int h(y) Lambda(dy)`` over ``lo < y <= hi``."""
        return float(sum(r * h(y) for y, r in zip(self.locations, self.rates) if lo < y <= hi))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        locs = np.array(self.locations)
        if len(locs) == 1:
            return np.full(n, locs[0])
        p = np.array(self.rates) / self.total_rate
        return locs[rng.choice(len(locs), size=n, p=p)]


@dataclass(frozen=True)
class Truncation:
    """Integrals describing a density driver cut at ``eps`` in ``|1 - e^y|``.

    ``large_rate`` and ``large_drift`` are ``int 1(large)`` and
    ``int (1 - e^y) 1(large)`` against Lambda; ``small_drift`` and
    ``small_var`` are ``int (1 + y - e^y) 1(small)`` and ``int y^2 1(small)``.
    """

    large_rate: float
    large_drift: float
    small_drift: float
    small_var: float


@dataclass(frozen=True)
class DensityJumps:
    """Jump measure ``Lambda(dy) = density(y) dy`` on ``(-inf, 0)``.

    ``singularity`` is the exponent ``p`` in ``density(y) ~ C |y|^{-p}`` as
    ``y -> 0-``; ``p < 1`` means finite total mass and ``p < 3`` is required
    for ``int (y^2 ^ 1) Lambda < inf``. ``sampler(rng, eps, n)`` may supply
    exact draws of the jumps with ``|1 - e^y| >= eps`` and ``truncation(eps)``
    may supply the corresponding :class:`Truncation` in closed form;
    otherwise both are computed numerically. ``log_moment_finite`` overrides
    the numeric test of ``int_{y < -log 2} log|y| Lambda(dy) < inf``.
    """

    density: Callable[[float], float]
    eps: Optional[float] = None
    singularity: float = 0.0
    sampler: Optional[Callable] = None
    truncation: Optional[Callable[[float], Truncation]] = None
    log_moment_finite: Optional[bool] = None
    name: str = "density"

    def __post_init__(self):
        if not self.singularity < 3:
            raise ValueError("density must satisfy int (y^2 ^ 1) Lambda < inf (singularity < 3)")
        if self.eps is not None and not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")

    @property
    def finite_mass(self) -> bool:
        return self.singularity < 1

    def integrate(self, h, lo=-math.inf, hi=0.0, settings=None) -> float:
        """``int h(y) Lambda(dy)`` over ``lo < y < hi`` by quadrature.

        The piece next to ``0`` uses ``y = -|y0| v^4`` to tame the
        ``|y|^{-p}`` singularity; the tail uses the exponential map.
        """
        s = settings or DEFAULT_QUADRATURE
        lam = self.density
        total = 0.0
        split = -1.0
        if hi == 0.0:
            y0 = max(lo, split)
            a0 = -y0

            def near(v):
                y = -a0 * v ** 4
                return h(y) * lam(y) * 4.0 * a0 * v ** 3 if y < 0 else 0.0

            total += adaptive_integrate(near, 0.0, 1.0, s)
            hi = y0
        if lo < hi:
            if hi > split and lo < split:
                total += adaptive_integrate(lambda y: h(y) * lam(y), split, hi, s)
                hi = split
            total += adaptive_integrate(lambda y: h(y) * lam(y), lo, hi, s)
        return total

    def truncation_integrals(self, eps: float) -> Truncation:
        if self.truncation is not None:
            return self.truncation(eps)
        return _numeric_truncation(self, eps)

    def sample(self, rng: np.random.Generator, n: int, eps: float) -> np.ndarray:
        if self.sampler is not None:
            return np.asarray(self.sampler(rng, eps, n), dtype=float)
        return _density_table(self, eps).sample(rng, n)


@functools.lru_cache(maxsize=64)
def _numeric_truncation(jumps: DensityJumps, eps: float) -> Truncation:
    y_eps = math.log1p(-eps) if eps > 0 else 0.0
    large_rate = jumps.integrate(lambda y: 1.0, hi=y_eps) if y_eps < 0 else jumps.integrate(lambda y: 1.0)
    large_drift = jumps.integrate(lambda y: -math.expm1(y), hi=y_eps) if y_eps < 0 else jumps.integrate(lambda y: -math.expm1(y))
    if y_eps < 0:
        small_drift = jumps.integrate(lambda y: y - math.expm1(y), lo=y_eps)
        small_var = jumps.integrate(lambda y: y * y, lo=y_eps)
    else:
        small_drift = small_var = 0.0
    return Truncation(large_rate, large_drift, small_drift, small_var)


class _InverseTable:
    """Piecewise inverse-CDF sampler on ``y = -exp(w)`` with cells in ``w``."""

    def __init__(self, w_edges, cum):
        self.w_edges = w_edges
        self.cum = cum

    def sample(self, rng, n):
        u = rng.uniform(0.0, self.cum[-1], n)
        k = np.clip(np.searchsorted(self.cum, u, side="right") - 1, 0, len(self.w_edges) - 2)
        lo, hi = self.cum[k], self.cum[k + 1]
        frac = np.where(hi > lo, (u - lo) / np.where(hi > lo, hi - lo, 1.0), 0.5)
        w = self.w_edges[k] + frac * (self.w_edges[k + 1] - self.w_edges[k])
        return -np.exp(w)


@functools.lru_cache(maxsize=64)
def _density_table(jumps: DensityJumps, eps: float, cells: int = 2048) -> _InverseTable:
    lam = jumps.density
    y_hi = math.log1p(-eps) if eps > 0 else -1e-12
    mass = jumps.integrate(lambda y: 1.0, hi=y_hi)
    y_lo = min(-1.0, 2 * y_hi)
    while -y_lo < 1e6:
        tail = adaptive_integrate(lam, -math.inf, y_lo)
        if tail <= 1e-12 * mass:
            break
        y_lo *= 2.0
    w_edges = np.linspace(math.log(-y_hi), math.log(-y_lo), cells + 1)
    # The table runs from y_hi (w small) out to y_lo (w large).
    gx, gw = np.polynomial.legendre.leggauss(4)
    masses = np.empty(cells)
    for i in range(cells):
        a, b = w_edges[i], w_edges[i + 1]
        w = 0.5 * (a + b) + 0.5 * (b - a) * gx
        vals = np.array([lam(-math.exp(wi)) * math.exp(wi) for wi in w])
        masses[i] = 0.5 * (b - a) * float(np.dot(gw, vals))
    cum = np.concatenate([[0.0], np.cumsum(masses)])
    return _InverseTable(w_edges, cum)


JumpSpec = Union[AtomJumps, DensityJumps, None]


@dataclass(frozen=True)
class LevyCharacteristics:
    """``(sigma, c, Lambda, k)`` of a spectrally negative Levy process."""

    sigma: float = 0.0
    drift_c: float = 0.0
    jumps: JumpSpec = None
    kill_rate: float = 0.0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")
        if not self.kill_rate >= 0:
            raise ValueError("kill_rate must be nonnegative")

    def laplace_exponent(self, q: float) -> float:
        return laplace_exponent(self, q)


@dataclass(frozen=True)
class OUParams:
    levy: LevyCharacteristics
    theta: float


def atom_levy(locations, rates, sigma=0.0, drift_c=0.0, kill_rate=0.0) -> LevyCharacteristics:
    return LevyCharacteristics(sigma, drift_c, AtomJumps(tuple(np.atleast_1d(locations)),
                                                          tuple(np.atleast_1d(rates))), kill_rate)


def laplace_exponent(levy: LevyCharacteristics, q: float) -> float:
    """Phi(q) from the Levy-Khintchine formula."""
    q = float(q)
    if q < 0:
        raise ValueError("laplace_exponent requires q >= 0")
    val = -levy.kill_rate + 0.5 * levy.sigma ** 2 * q * q + levy.drift_c * q
    if levy.jumps is not None and q != 0.0:
        val += levy.jumps.integrate(lambda y: phi_integrand(q, y))
    return val


# -- simulation ----------------------------------------------------------------

@dataclass(frozen=True)
class FiniteDriver:
    """Finite-activity form of a driver, ready for exact simulation.

    ``drift`` is the actual linear drift of the path (not the compensated
    ``c``); jumps arrive at ``jump_rate`` with sizes from ``jump_sampler``.
    """

    sigma: float
    drift: float
    jump_rate: float = 0.0
    jump_sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None
    kill_rate: float = 0.0


def finite_driver(levy: LevyCharacteristics, eps: float | None = None) -> FiniteDriver:
    """Reduce ``levy`` to a finite-activity driver.

    Atoms are used as they are. A density is split at ``|1 - e^y| = eps``:
    large jumps are kept, and the small ones are replaced by their exact
    mean drift plus a Brownian part with the same variance, so the exponent
    is matched to second order in the small jumps.
    """
    jumps = levy.jumps
    if jumps is None:
        return FiniteDriver(levy.sigma, levy.drift_c, 0.0, None, levy.kill_rate)
    if isinstance(jumps, AtomJumps):
        drift = levy.drift_c + sum(r * -math.expm1(y) for y, r in zip(jumps.locations, jumps.rates))
        return FiniteDriver(levy.sigma, drift, jumps.total_rate, jumps.sample, levy.kill_rate)
    if eps is None:
        eps = jumps.eps
    if eps is None:
        if not jumps.finite_mass:
            raise InfiniteActivityError("infinite activity requires eps-truncation")
        eps = 0.0
    tr = jumps.truncation_integrals(eps)
    sigma = math.sqrt(levy.sigma ** 2 + tr.small_var)
    drift = levy.drift_c + tr.large_drift + tr.small_drift
    sampler = functools.partial(_sample_density, jumps, eps)
    return FiniteDriver(sigma, drift, tr.large_rate, sampler, levy.kill_rate)


def _sample_density(jumps, eps, rng, n):
    return jumps.sample(rng, n, eps)


def relax(theta: float, t):
    """``(1 - e^{-theta t}) / theta``, equal to ``t`` at ``theta = 0``."""
    if theta == 0:
        return t
    return -np.expm1(-theta * np.asarray(t, dtype=float)) / theta


def gauss_var(theta: float, t):
    """Variance factor ``(1 - e^{-2 theta t}) / (2 theta)`` of a unit Gaussian OU."""
    if theta == 0:
        return t
    return -np.expm1(-2.0 * theta * np.asarray(t, dtype=float)) / (2.0 * theta)


def sample_driver(rng: np.random.Generator, driver: FiniteDriver, theta: float,
                  horizon: float, knots, jump_knots: bool = False):
    """Draw the random ingredients of one OU path on ``[0, horizon]``.

    Returns ``(jump_times, jump_sizes, kill_time, knots, gauss)`` where
    ``gauss`` holds the Gaussian OU part (started at 0) at the sorted
    ``knots``; with ``jump_knots`` the jump epochs are merged into them.
    Draw order is fixed: kill clock, jump count, jump epochs, jump sizes,
    Gaussian increments.
    """
    kill = rng.exponential(1.0 / driver.kill_rate) if driver.kill_rate > 0 else math.inf
    span = min(horizon, kill)
    if driver.jump_rate > 0 and span > 0:
        n = int(rng.poisson(driver.jump_rate * span))
    else:
        n = 0
    if n:
        jt = np.sort(rng.uniform(0.0, span, n))
        js = np.asarray(driver.jump_sampler(rng, n), dtype=float)
    else:
        jt = js = np.empty(0)
    knots = np.asarray(knots, dtype=float)
    if jump_knots and n:
        knots = np.sort(np.concatenate([knots, jt]))
    if driver.sigma > 0 and knots.size:
        dt = np.diff(knots, prepend=0.0)
        z = rng.standard_normal(knots.size)
        if theta == 0:
            gauss = np.cumsum(driver.sigma * np.sqrt(dt) * z)
        else:
            decay = np.exp(-theta * dt)
            sd = driver.sigma * np.sqrt(gauss_var(theta, dt))
            gauss = np.empty(knots.size)
            g = 0.0
            for i in range(knots.size):
                g = decay[i] * g + sd[i] * z[i]
                gauss[i] = g
    else:
        gauss = np.zeros(knots.size)
    return jt, js, kill, knots, gauss


def deterministic_part(theta, z0, drift, jump_times, jump_sizes, t):
    """``e^{-theta t} z0 + drift * relax(t) + sum_{tau <= t} e^{-theta(t - tau)} y``."""
    t = np.asarray(t, dtype=float)
    val = np.exp(-theta * t) * z0 + drift * relax(theta, t)
    if len(jump_times):
        lag = t[..., None] - jump_times
        val = val + np.sum(np.where(lag >= 0, np.exp(-theta * np.maximum(lag, 0.0)) * jump_sizes, 0.0), axis=-1)
    return val


class OUPath:
    """One simulated OU path on ``[0, horizon]``.

    Values at the knots fixed at simulation time are stored; any other time
    is filled in by sampling the Gaussian part from its exact bridge law, and
    the filled value is kept so repeated queries agree.
    """

    def __init__(self, theta, z0, driver, horizon, jump_times, jump_sizes, kill_time,
                 knots, gauss, stream: RandomStream):
        self.theta = float(theta)
        self.z0 = float(z0)
        self.driver = driver
        self.horizon = float(horizon)
        self.jump_times = np.asarray(jump_times, dtype=float)
        self.jump_sizes = np.asarray(jump_sizes, dtype=float)
        self.kill_time = float(kill_time)
        self._knots = [0.0] + [float(k) for k in knots]
        self._gauss = [0.0] + [float(g) for g in gauss]
        self._stream = stream

    @property
    def event_times(self) -> np.ndarray:
        ev = self.jump_times
        if self.kill_time <= self.horizon:
            ev = np.append(ev, self.kill_time)
        return ev

    def _gauss_at(self, t: float) -> float:
        if self.driver.sigma == 0:
            return 0.0
        i = bisect.bisect_left(self._knots, t)
        if i < len(self._knots) and self._knots[i] == t:
            return self._gauss[i]
        th, sig = self.theta, self.driver.sigma
        a, ga = self._knots[i - 1], self._gauss[i - 1]
        if i == len(self._knots):
            dt = t - a
            mean = math.exp(-th * dt) * ga
            var = sig ** 2 * float(gauss_var(th, dt))
        else:
            b, gb = self._knots[i], self._gauss[i]
            r1, v1 = math.exp(-th * (t - a)), sig ** 2 * float(gauss_var(th, t - a))
            r2, v2 = math.exp(-th * (b - t)), sig ** 2 * float(gauss_var(th, b - t))
            var = 1.0 / (1.0 / v1 + r2 * r2 / v2)
            mean = var * (r1 * ga / v1 + r2 * gb / v2)
        g = mean + math.sqrt(var) * float(self._stream.rng.standard_normal())
        self._knots.insert(i, t)
        self._gauss.insert(i, g)
        return g

    def value(self, t: float, left: bool = False) -> float:
        t = float(t)
        if t < 0 or t > self.horizon:
            raise ValueError(f"t={t} outside [0, {self.horizon}]")
        if t > self.kill_time or (t == self.kill_time and not left):
            return -math.inf
        jt, js = self.jump_times, self.jump_sizes
        if left and len(jt):
            keep = jt < t
            jt, js = jt[keep], js[keep]
        m = float(deterministic_part(self.theta, self.z0, self.driver.drift, jt, js, t))
        return m + self._gauss_at(t)

    def __call__(self, t):
        if np.ndim(t) == 0:
            return self.value(float(t))
        return np.array([self.value(float(s)) for s in np.asarray(t).ravel()]).reshape(np.shape(t))

    def left_limit(self, t: float) -> float:
        return self.value(t, left=True)

    def pre_post(self):
        """Pairs ``(Z(tau-), Z(tau))`` at the jump epochs."""
        return [(self.left_limit(t), self.value(t)) for t in self.jump_times]


def simulate_ou(params: OUParams, z0: float, horizon: float, stream: RandomStream,
                times=None, eps: float | None = None) -> OUPath:
    """Simulate the OU type process started at ``z0`` on ``[0, horizon]``.

    ``times`` are extra knots where the Gaussian part is drawn up front
    (querying them later does not consume the bridge stream).
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    driver = finite_driver(params.levy, eps)
    knots = {float(horizon)}
    if times is not None:
        knots.update(float(t) for t in np.atleast_1d(times) if 0 < t <= horizon)
    knots.discard(0.0)
    knots = sorted(knots)
    jt, js, kill, knots, gauss = sample_driver(stream.rng, driver, params.theta, horizon, knots)
    return OUPath(params.theta, z0, driver, horizon, jt, js, kill, knots, gauss,
                  stream.child("bridge"))


# -- closed forms --------------------------------------------------------------

def ou_laplace_transform(params: OUParams, z0: float, q: float, t: float,
                         settings: QuadratureSettings | None = None) -> float:
    """``E exp(q Z(t)) = exp(e^{-theta t} z0 q + int_0^t Phi(q e^{-theta s}) ds)``."""
    if q < 0 or t < 0:
        raise ValueError("ou_laplace_transform requires q, t >= 0")
    th = params.theta
    integral = integrate_exponential_scale(lambda x: laplace_exponent(params.levy, x),
                                           q, th, t, settings)
    return math.exp(math.exp(-th * t) * z0 * q + integral)


def log_moment_finite(jumps: JumpSpec) -> bool:
    """Whether ``int_{y < -log 2} log|y| Lambda(dy)`` is finite.

    For a density the integral is split into shells ``log|y| in [2^k, 2^{k+1}]``
    for ``k <= 8``; a finite integral shows shells shrinking geometrically
    while a divergent one (such as ``1/(|y| log^2|y|)``) has shells of
    constant size. This is a numeric test, and ``log_moment_finite`` on the
    density overrides it.
    """
    if jumps is None or isinstance(jumps, AtomJumps):
        return True
    if jumps.log_moment_finite is not None:
        return jumps.log_moment_finite
    lam = jumps.density

    def g(w):
        return w * lam(-math.exp(w)) * math.exp(w)

    shells = [adaptive_integrate(g, 2.0 ** k, 2.0 ** (k + 1),
                                 QuadratureSettings(1e-300, 1e-8, 4000)) for k in range(9)]
    last, prev = shells[-1], shells[-2]
    if last <= 1e-14 * (1.0 + sum(shells)):
        return True
    return last <= 0.9 * prev


def has_stationary_dist(params: OUParams) -> bool:
    return params.theta > 0 and log_moment_finite(params.levy.jumps)


def stationary_laplace(params: OUParams, q: float,
                       settings: QuadratureSettings | None = None) -> float:
    """``exp(int_0^inf Phi(q e^{-theta s}) ds)`` for the stationary law."""
    if not has_stationary_dist(params):
        raise NoStationaryDistribution("no stationary distribution (needs theta > 0 and a finite log-moment)")
    if params.levy.kill_rate != 0:
        raise NoStationaryDistribution("no stationary distribution for a killed process")
    if q == 0:
        return 1.0
    return math.exp(integrate_exponential_scale(lambda x: laplace_exponent(params.levy, x),
                                                q, params.theta, math.inf, settings))
