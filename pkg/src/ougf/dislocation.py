"""Dislocation measures and the cumulant calculus of OU type growth-fragmentations.

A growth-fragmentation is described by ``(sigma, c, nu, theta)`` where
``nu`` is a measure on mass-partitions ``s1 >= s2 >= ... >= 0``. Two forms
of ``nu`` are supported: finitely many atoms (possibly including the killing
atom with no fragments), and binary measures ``g(s1) ds1`` on ``[1/2, 1)``
with ``s2 = 1 - s1``, possibly of infinite mass near ``s1 = 1``.

Every integral against ``nu`` goes through ``nu.integrate(func)`` where
``func(sizes, om)`` receives the positive fragment sizes (``sizes[0]`` is
``s1``; a killing atom has no sizes) together with ``om = 1 - s1`` computed
without cancellation.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .levy_ou import (
    AtomJumps,
    DensityJumps,
    LevyCharacteristics,
    laplace_exponent,
    phi_integrand,
)
from .numerics import (
    DEFAULT_QUADRATURE,
    EULER_GAMMA,
    QuadratureError,
    QuadratureSettings,
    adaptive_integrate,
    integrate_exponential_scale,
)


class DomainViolation(ValueError):
    """An exponent lies outside the domain of the cumulant."""


class ConditionError(ValueError):
    """A hypothesis required by a formula does not hold."""


class GeneratorDivergence(ValueError):
    """The generator integral diverges for the supplied test function."""


def _compensated(om: float, q: float) -> float:
    """``s1^q - 1 + q(1 - s1)`` from ``om = 1 - s1``; ``0^q = 0``."""
    if om >= 1.0:
        return -1.0 + q * om
    return phi_integrand(q, math.log1p(-om))


# -- mass partitions -----------------------------------------------------------

class MassPartition(tuple):
    """Decreasing sequence of fragment sizes with sum at most 1.

    Zero entries are dropped, so the killing atom is the empty partition.
    """

    def __new__(cls, values: Sequence[float] = ()):
        vals = [float(v) for v in values]
        if any(not (0.0 <= v <= 1.0) for v in vals):
            raise ValueError("mass-partition entries must lie in [0, 1]")
        if any(vals[i] < vals[i + 1] for i in range(len(vals) - 1)):
            raise ValueError("mass-partition entries must be nonincreasing")
        if sum(vals) > 1.0 + 1e-12:
            raise ValueError("mass-partition entries must sum to at most 1")
        return super().__new__(cls, (v for v in vals if v > 0.0))

    @property
    def s1(self) -> float:
        return self[0] if len(self) else 0.0

    @property
    def count(self) -> int:
        return len(self)


# -- dislocation measures ------------------------------------------------------

@dataclass(frozen=True)
class AtomicDislocation:
    """Finitely many atoms ``(rate, partition)``."""

    atoms: tuple

    def __post_init__(self):
        out = []
        for rate, part in self.atoms:
            rate = float(rate)
            if not rate > 0 or math.isinf(rate):
                raise ValueError("atom rates must be finite and positive")
            out.append((rate, MassPartition(part)))
        object.__setattr__(self, "atoms", tuple(out))

    @property
    def total_mass(self) -> float:
        return float(sum(r for r, _ in self.atoms))

    @property
    def finite_mass(self) -> bool:
        return True

    def integrate(self, func, multi: Optional[bool] = None, settings=None) -> float:
        """``int func(sizes, 1 - s1) nu(ds)``; ``multi`` restricts to atoms with
        ``#s != 1`` (True) or ``#s == 1`` (False)."""
        total = 0.0
        for rate, part in self.atoms:
            if multi is not None and (len(part) != 1) != multi:
                continue
            total += rate * func(part, 1.0 - part.s1)
        return total


@dataclass(frozen=True)
class BinaryDislocation:
    """Binary measure ``g(s1) ds1`` on ``[1/2, 1)`` with ``s2 = 1 - s1``.

    The density is supplied as ``density_u(u) = g(1 - u)`` for
    ``u = s2 in (0, 1/2]`` so that the behaviour near ``s1 = 1`` is resolved
    without rounding. ``tail_exponent`` is ``p`` in ``g(1 - u) ~ C u^{-p}``;
    ``p < 1`` means finite mass and ``p < 3`` is required. ``level`` records
    a truncation: second fragments ``u <= e^{-level}`` are suppressed.
    ``sampler(rng, lo, hi, n)`` may draw ``u`` exactly from the density
    restricted to ``[lo, hi]``.
    """

    density_u: Callable[[float], float]
    tail_exponent: float = 0.0
    level: float = math.inf
    sampler: Optional[Callable] = None
    name: str = "binary_density"

    def __post_init__(self):
        if not self.tail_exponent < 3:
            raise ValueError("binary density must satisfy int (1 - s1)^2 nu < inf (tail_exponent < 3)")
        if not self.level >= 0:
            raise ValueError("level must be nonnegative")

    @classmethod
    def from_s1(cls, g, **kw):
        return cls(lambda u: g(1.0 - u), **kw)

    @property
    def threshold(self) -> float:
        """Second fragments at or below this size are suppressed."""
        return math.exp(-self.level)

    @property
    def finite_mass(self) -> bool:
        return self.tail_exponent < 1

    def integrate_u(self, func, lo=0.0, hi=0.5, settings=None) -> float:
        """``int_lo^hi func(u) g(1 - u) du`` with ``u = lo + (hi - lo) v^4`` at 0."""
        s = settings or DEFAULT_QUADRATURE
        g = self.density_u
        if hi <= lo:
            return 0.0
        if lo == 0.0:
            w = hi

            def near(v):
                u = w * v ** 4
                # Below 1e-150 an integrable tail contributes nothing in double
                # precision, while u^{-p} may overflow.
                return func(u) * g(u) * 4.0 * w * v ** 3 if u > 1e-150 else 0.0

            return adaptive_integrate(near, 0.0, 1.0, s)
        return adaptive_integrate(lambda u: func(u) * g(u), lo, hi, s)

    def integrate(self, func, multi: Optional[bool] = None, settings=None) -> float:
        cut = min(self.threshold, 0.5)
        total = 0.0
        if multi is not True and cut > 0:
            # u <= cut: only the first fragment is kept.
            total += self.integrate_u(lambda u: func((1.0 - u,), u), 0.0, cut, settings)
        if multi is not False and cut < 0.5:
            total += self.integrate_u(lambda u: func((1.0 - u, u), u), cut, 0.5, settings)
        return total

    def sample_u(self, rng, lo: float, hi: float, n: int) -> np.ndarray:
        """Draw ``u`` from ``g(1 - u) du`` restricted to ``[lo, hi]``."""
        if self.sampler is not None:
            return np.asarray(self.sampler(rng, lo, hi, n), dtype=float)
        return _u_table(self, lo, hi).sample(rng, n)


class _LogTable:
    def __init__(self, x_edges, cum, log_space):
        self.x_edges, self.cum, self.log_space = x_edges, cum, log_space

    def sample(self, rng, n):
        v = rng.uniform(0.0, self.cum[-1], n)
        k = np.clip(np.searchsorted(self.cum, v, side="right") - 1, 0, len(self.x_edges) - 2)
        lo, hi = self.cum[k], self.cum[k + 1]
        width = np.where(hi > lo, hi - lo, 1.0)
        frac = np.where(hi > lo, (v - lo) / width, 0.5)
        x = self.x_edges[k] + frac * (self.x_edges[k + 1] - self.x_edges[k])
        return np.exp(x) if self.log_space else x


@functools.lru_cache(maxsize=64)
def _u_table(nu: BinaryDislocation, lo: float, hi: float, cells: int = 2048) -> _LogTable:
    log_space = lo > 0
    edges = np.linspace(math.log(lo), math.log(hi), cells + 1) if log_space else np.linspace(lo, hi, cells + 1)
    gx, gw = np.polynomial.legendre.leggauss(4)
    masses = np.empty(cells)
    for i in range(cells):
        a, b = edges[i], edges[i + 1]
        x = 0.5 * (a + b) + 0.5 * (b - a) * gx
        if log_space:
            vals = [nu.density_u(math.exp(xi)) * math.exp(xi) for xi in x]
        else:
            vals = [nu.density_u(xi) for xi in x]
        masses[i] = 0.5 * (b - a) * float(np.dot(gw, vals))
    return _LogTable(edges, np.concatenate([[0.0], np.cumsum(masses)]), log_space)


DislocationMeasure = Union[AtomicDislocation, BinaryDislocation]


@dataclass(frozen=True)
class GFCharacteristics:
    """``(sigma, c, nu, theta)`` of an OU type growth-fragmentation."""

    sigma: float
    drift_c: float
    nu: DislocationMeasure
    theta: float

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")

    def truncated(self, level: float) -> "GFCharacteristics":
        return replace(self, nu=truncate(self.nu, level))


def atoms(*pairs) -> AtomicDislocation:
    """``atoms((rate, (s1, s2, ...)), ...)``."""
    return AtomicDislocation(tuple(pairs))


def half_half_model(sigma=0.0, drift_c=0.0, theta=1.0, rate=1.0) -> GFCharacteristics:
    """Binary splitting into two halves at ``rate``."""
    return GFCharacteristics(sigma, drift_c, atoms((rate, (0.5, 0.5))), theta)


def rrt_sample_u(rng, lo, hi, n):
    """Exact draws of ``u`` from ``(u^{-2} + (1 - u)^{-2}) du`` on ``[lo, hi]``.

    The antiderivative ``G(s) = 1/(1 - s) - 1/s`` is inverted in closed form,
    with ``u`` recovered without cancellation.
    """
    def H(u):
        return 1.0 / (1.0 - u) - 1.0 / u

    w = rng.uniform(H(lo), H(hi), n)
    # H(u) = w solves to u = 2 / (d + 2) with d = sqrt(w^2 + 4) - w.
    r = np.sqrt(w * w + 4.0)
    d = np.where(w > 0, 4.0 / (r + np.abs(w)), r - w)
    return 2.0 / (d + 2.0)


def rrt_dislocation(level: float = math.inf) -> BinaryDislocation:
    """Binary measure ``(s1^{-2} + (1 - s1)^{-2}) ds1`` on ``[1/2, 1)``."""
    return BinaryDislocation(lambda u: u ** -2 + (1.0 - u) ** -2, tail_exponent=2.0,
                             level=level, sampler=rrt_sample_u, name="rrt")


def rrt_gf(theta: float = 1.0) -> GFCharacteristics:
    """Growth-fragmentation realised by destroying random recursive trees."""
    return GFCharacteristics(0.0, -EULER_GAMMA + 2.0 * math.log(2.0), rrt_dislocation(), theta)


# -- truncation ----------------------------------------------------------------

def truncate(nu: DislocationMeasure, level: float) -> DislocationMeasure:
    """Suppress every fragment ``s_i`` (``i >= 2``) with ``s_i <= e^{-level}``."""
    if not level >= 0:
        raise ValueError("truncation level must be nonnegative")
    if isinstance(nu, BinaryDislocation):
        return replace(nu, level=min(nu.level, level))
    thr = math.exp(-level)
    out = []
    for rate, part in nu.atoms:
        kept = part[:1] + tuple(s for s in part[1:] if s > thr)
        out.append((rate, kept))
    return AtomicDislocation(tuple(out))


def multi_mass(nu: DislocationMeasure) -> float:
    """Total rate of atoms with ``#s != 1``; ``inf`` if it diverges."""
    if isinstance(nu, BinaryDislocation) and nu.threshold <= 0 and not nu.finite_mass:
        return math.inf
    return nu.integrate(lambda sizes, om: 1.0, multi=True)


# -- cumulants -----------------------------------------------------------------

def in_dom(gf: GFCharacteristics, q: float) -> bool:
    """Whether ``int sum_{i >= 2} s_i^q nu(ds) < inf``."""
    nu = gf.nu
    if q < 0:
        return False
    if q >= 2 or isinstance(nu, AtomicDislocation) or nu.threshold > 0:
        return True
    return q > nu.tail_exponent - 1


def _diffusion_drift(gf, q):
    return 0.5 * gf.sigma ** 2 * q * q + gf.drift_c * q


def cumulant(gf: GFCharacteristics, q: float, settings: QuadratureSettings | None = None) -> float:
    """``kappa(q)``, or ``inf`` when ``q`` lies outside its domain."""
    if q < 0:
        raise ValueError("cumulant requires q >= 0")
    if not in_dom(gf, q):
        return math.inf

    def term(sizes, om):
        return sum(s ** q for s in sizes[1:]) + _compensated(om, q)

    return _diffusion_drift(gf, q) + gf.nu.integrate(term, settings=settings)


def phi_star(gf: GFCharacteristics, q: float, settings: QuadratureSettings | None = None) -> float:
    """Laplace exponent of the log-size of the selected fragment."""
    if q < 0:
        raise ValueError("phi_star requires q >= 0")
    return _diffusion_drift(gf, q) + gf.nu.integrate(lambda sizes, om: _compensated(om, q),
                                                     settings=settings)


def psi_h_decompose(gf: GFCharacteristics, level: float, q: float,
                    settings: QuadratureSettings | None = None) -> tuple[float, float]:
    """``(psi(q), h(q))`` of the level-``level`` truncated system.

    ``psi`` is the exponent of the motion between branch events and ``h``
    the branching part, with ``psi + h`` the truncated cumulant.
    """
    nu = truncate(gf.nu, level)
    if math.isinf(multi_mass(nu)):
        raise ConditionError("truncated measure has infinite multi-child mass")
    multi_om = nu.integrate(lambda sizes, om: om, multi=True, settings=settings)
    single = nu.integrate(lambda sizes, om: _compensated(om, q), multi=False, settings=settings)
    psi = 0.5 * gf.sigma ** 2 * q * q + (gf.drift_c + multi_om) * q + single
    h = nu.integrate(lambda sizes, om: sum(s ** q for s in sizes) - 1.0, multi=True,
                     settings=settings)
    return psi, h


def tilt_exponent(gf: GFCharacteristics, alpha: float, q: float,
                  settings: QuadratureSettings | None = None) -> float:
    """``Phi_alpha(q) = kappa(q + alpha) - kappa(alpha)``."""
    if not in_dom(gf, alpha):
        raise DomainViolation(f"alpha = {alpha} is not in dom(kappa)")
    return cumulant(gf, q + alpha, settings) - cumulant(gf, alpha, settings)


def tilted_levy(gf: GFCharacteristics, alpha: float,
                settings: QuadratureSettings | None = None) -> LevyCharacteristics:
    """Characteristics ``(sigma, c_alpha, Lambda_alpha, 0)`` with exponent ``Phi_alpha``.

    ``c_alpha = c + sigma^2 alpha + int ((1 - s1) - sum s_i^alpha (1 - s_i)) nu``
    and ``Lambda_alpha`` is the image of ``sum_i s_i^alpha 1(s_i > 0) nu`` under
    ``s_i -> log s_i``.
    """
    if not in_dom(gf, alpha):
        raise DomainViolation(f"alpha = {alpha} is not in dom(kappa)")
    nu = gf.nu

    def shift(sizes, om):
        if not sizes:
            return 1.0
        # (1 - s1) - s1^alpha (1 - s1) = -(1 - s1) expm1(alpha log s1)
        head = -om * math.expm1(alpha * math.log1p(-om)) if om < 1 else om
        return head - sum(s ** alpha * (1.0 - s) for s in sizes[1:])

    c_alpha = gf.drift_c + gf.sigma ** 2 * alpha + nu.integrate(shift, settings=settings)
    if isinstance(nu, AtomicDislocation):
        locs, rates = [], []
        for rate, part in nu.atoms:
            for s in part:
                if s < 1.0:
                    locs.append(math.log(s))
                    rates.append(rate * s ** alpha)
        jumps = AtomJumps(tuple(locs), tuple(rates)) if locs else None
    else:
        thr = nu.threshold
        g = nu.density_u
        log_half = -math.log(2.0)

        def lam(y):
            if y >= log_half:
                return math.exp((alpha + 1.0) * y) * g(-math.expm1(y))
            u = math.exp(y)
            return math.exp((alpha + 1.0) * y) * g(u) if u > thr else 0.0

        jumps = DensityJumps(lam, singularity=max(nu.tail_exponent, 0.0), log_moment_finite=True,
                             name=f"tilted_{nu.name}")
    return LevyCharacteristics(gf.sigma, c_alpha, jumps, 0.0)


def selected_levy(gf: GFCharacteristics) -> LevyCharacteristics:
    """Levy characteristics with exponent ``Phi*`` (the selected fragment).

    The killing atom becomes a killing rate ``k`` with the drift raised by
    ``k`` so that the exponents agree.
    """
    nu = gf.nu
    if isinstance(nu, AtomicDislocation):
        locs, rates, kill = [], [], 0.0
        for rate, part in nu.atoms:
            if not part:
                kill += rate
            elif part.s1 < 1.0:
                locs.append(math.log(part.s1))
                rates.append(rate)
        jumps = AtomJumps(tuple(locs), tuple(rates)) if locs else None
        return LevyCharacteristics(gf.sigma, gf.drift_c + kill, jumps, kill)
    g = nu.density_u
    log_half = -math.log(2.0)

    def lam(y):
        return math.exp(y) * g(-math.expm1(y)) if y >= log_half else 0.0

    return LevyCharacteristics(gf.sigma, gf.drift_c,
                               DensityJumps(lam, singularity=max(nu.tail_exponent, 0.0),
                                            log_moment_finite=True, name=f"selected_{nu.name}"),
                               0.0)


def cumulant_from_levy(levy: LevyCharacteristics, q: float,
                       settings: QuadratureSettings | None = None) -> float:
    """``kappa(q) = Phi(q) + int (1 - e^y)^q Lambda(dy)``, ``inf`` if divergent."""
    if q < 0:
        raise ValueError("cumulant_from_levy requires q >= 0")
    jumps = levy.jumps
    if isinstance(jumps, DensityJumps) and not q > jumps.singularity - 1:
        return math.inf
    val = laplace_exponent(levy, q)
    if jumps is not None:
        val += jumps.integrate(lambda y: (-math.expm1(y)) ** q, settings=settings)
    return val


def binary_from_levy(levy: LevyCharacteristics, theta: float,
                     settings: QuadratureSettings | None = None) -> GFCharacteristics:
    """Binary growth-fragmentation with the same cumulant as the cell system.

    A jump ``y`` gives the partition ``(max(e^y, 1 - e^y), min(e^y, 1 - e^y))``;
    killing becomes the killing atom. The drift is
    ``c - k + int_{y < -log 2} (1 - 2 e^y) Lambda(dy)``.
    """
    jumps = levy.jumps
    log_half = -math.log(2.0)
    k = levy.kill_rate
    if jumps is None:
        nu = AtomicDislocation(((k, ()),) if k > 0 else ())
        return GFCharacteristics(levy.sigma, levy.drift_c - k, nu, theta)
    extra = jumps.integrate(lambda y: 1.0 - 2.0 * math.exp(y), hi=log_half, settings=settings)
    drift = levy.drift_c - k + extra
    if isinstance(jumps, AtomJumps):
        pairs = []
        for y, r in zip(jumps.locations, jumps.rates):
            a, b = math.exp(y), -math.expm1(y)
            pairs.append((r, (max(a, b), min(a, b))))
        if k > 0:
            pairs.append((k, ()))
        return GFCharacteristics(levy.sigma, drift, AtomicDislocation(tuple(pairs)), theta)
    if k > 0:
        raise ValueError("a killed density driver has no binary density form")
    lam = jumps.density

    def g(u):
        return lam(math.log1p(-u)) / (1.0 - u) + lam(math.log(u)) / u

    nu = BinaryDislocation(g, tail_exponent=max(jumps.singularity, 0.0), name=f"binary_{jumps.name}")
    return GFCharacteristics(levy.sigma, drift, nu, theta)


# -- stationary moments, generator, error bound, LLN conditions ----------------

@dataclass(frozen=True)
class Condition:
    name: str
    value: float
    ok: bool


@dataclass(frozen=True)
class LLNConditions:
    kappa0_finite: Condition
    supercritical: Condition
    gamma_moment: Condition
    loglog: Condition
    gamma: float = 2.0

    @property
    def all_ok(self) -> bool:
        return all(c.ok for c in self.conditions)

    @property
    def conditions(self) -> tuple:
        return (self.kappa0_finite, self.supercritical, self.gamma_moment, self.loglog)

    def failures(self) -> list[str]:
        return [c.name for c in self.conditions if not c.ok]


def _safe_integral(nu, func, multi=None):
    try:
        val = nu.integrate(func, multi=multi)
    except QuadratureError:
        return math.inf
    return val if math.isfinite(val) else math.inf


def check_lln_conditions(gf: GFCharacteristics, gamma: float = 2.0) -> LLNConditions:
    """Evaluate the four hypotheses of the law of large numbers."""
    if not 1 < gamma <= 2:
        raise ValueError("gamma must lie in (1, 2]")
    nu = gf.nu
    infinite = isinstance(nu, BinaryDislocation) and not nu.finite_mass
    if infinite and nu.threshold <= 0:
        k0 = gm = ll = math.inf
    else:
        k0 = _safe_integral(nu, lambda sizes, om: len(sizes) - 1.0)
        gm = _safe_integral(nu, lambda sizes, om: float(len(sizes)) ** gamma, multi=True)

        def loglog(sizes, om):
            return sum(math.log(abs(math.log(s))) for s in sizes if 0 < s < 0.5)

        ll = math.inf if infinite else _safe_integral(nu, loglog)
    return LLNConditions(
        Condition("kappa(0) < inf", k0, math.isfinite(k0)),
        Condition("kappa(0) > 0 (supercriticality)", k0, math.isfinite(k0) and k0 > 0),
        Condition(f"int (#s)^{gamma:g} nu < inf", gm, math.isfinite(gm)),
        Condition("int sum 1(s_i < 1/2) log|log s_i| nu < inf", ll, math.isfinite(ll)),
        gamma,
    )


def stationary_gf_moment(gf: GFCharacteristics, q: float,
                         settings: QuadratureSettings | None = None) -> float:
    """``exp(int_0^inf (kappa(q e^{-theta s}) - kappa(0)) ds)``, the moments of
    the limit of the empirical mean of ``f(X_i)``."""
    if not gf.theta > 0:
        raise ConditionError("theta > 0 is required for a stationary law")
    cond = check_lln_conditions(gf)
    if not cond.kappa0_finite.ok:
        raise ConditionError("kappa(0) = inf: the number of fragments is not finite")
    if not cond.loglog.ok:
        raise ConditionError("log-log condition int sum 1(s_i < 1/2) log|log s_i| nu < inf fails")
    if q == 0:
        return 1.0
    k0 = cumulant(gf, 0.0, settings)
    integral = integrate_exponential_scale(lambda x: cumulant(gf, x, settings) - k0,
                                           q, gf.theta, math.inf, settings)
    return math.exp(integral)


def generator_apply(gf: GFCharacteristics, f, df, d2f, x: float,
                    settings: QuadratureSettings | None = None) -> float:
    """``Lf(x)`` for the growth-fragmentation generator.

    ``Lf(x) = sigma^2 x^2 f''/2 + (c + sigma^2/2 - theta log x) x f'
    + int (sum f(x s_i) - f(x) + x f'(x)(1 - s1)) nu(ds)``.
    """
    x = float(x)
    if not x > 0:
        raise ValueError("x must be positive")
    nu = gf.nu
    fx, dfx, d2fx = f(x), df(x), d2f(x)
    local = (0.5 * gf.sigma ** 2 * x * x * d2fx
             + (gf.drift_c + 0.5 * gf.sigma ** 2 - gf.theta * math.log(x)) * x * dfx)
    if isinstance(nu, BinaryDislocation) and not nu.finite_mass and nu.threshold <= 0:
        if f(x * 1e-300) != 0.0:
            raise GeneratorDivergence("f must vanish near 0 for a measure of infinite mass")

    def term(sizes, om):
        tail = sum(f(x * s) for s in sizes[1:])
        if sizes and om < 1e-5:
            # f(x(1 - u)) - f(x) + x f'(x) u loses every digit to cancellation
            # here; its Taylor form is accurate to O(u^3).
            head = 0.5 * x * x * d2fx * om * om
        elif sizes:
            head = f(x * sizes[0]) - fx + x * dfx * om
        else:
            head = -fx + x * dfx
        return head + tail

    try:
        jump = nu.integrate(term, settings=settings)
    except QuadratureError as exc:
        raise GeneratorDivergence(f"generator integral did not converge: {exc}") from exc
    return local + jump


def truncation_error_bound(gf: GFCharacteristics, level: float, q: float, t: float,
                           settings: QuadratureSettings | None = None) -> float:
    """Bound on ``E ||X(t) - X^level(t)||_q^q``.

    ``K(q, t) (1 - exp(-int (1 - s1)^2 nu * int_0^t e^{-level (q e^{-theta r} - 2)} dr))``
    with ``K(q, t) = exp(int_0^t kappa(q e^{-theta r}) dr)``.
    """
    th = gf.theta
    if not q > 2 * max(math.exp(th * t), 1.0):
        raise ConditionError("the bound needs q > 2 (e^{theta t} v 1)")
    if not in_dom(gf, q):
        raise DomainViolation(f"q = {q} is not in dom(kappa)")
    if math.isinf(level):
        return 0.0
    mass2 = gf.nu.integrate(lambda sizes, om: om * om, settings=settings)
    if mass2 == 0:
        return 0.0
    inner = adaptive_integrate(lambda r: math.exp(-level * (q * math.exp(-th * r) - 2.0)), 0.0, t, settings)
    K = math.exp(integrate_exponential_scale(lambda x: cumulant(gf, x, settings), q, th, t, settings))
    return K * -math.expm1(-mass2 * inner)
