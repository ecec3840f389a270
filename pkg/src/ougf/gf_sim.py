"""Event-driven simulation of OU type branching particle systems.

A particle ``u`` is born at time ``b_u`` with log-size ``a_u``. It lives an
exponential time with the multi-child rate of the truncated measure, during
which its log-size follows the OU process with exponent ``psi`` (single-child
atoms of the measure are jumps of this driver). At death it is replaced by
children with log-sizes ``Z_u(lambda_u) + log s_i``. All randomness of a
particle comes from ``derive_stream(seed, u)``, and particles are processed in
order of birth time from a heap.

The module also simulates the binary cell system driven by ``exp`` of an OU
process, where every negative jump of a cell spawns a new cell.
"""

from __future__ import annotations

import csv
import functools
import heapq
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .dislocation import (
    AtomicDislocation,
    BinaryDislocation,
    ConditionError,
    DomainViolation,
    GFCharacteristics,
    cumulant,
    cumulant_from_levy,
    in_dom,
    multi_mass,
    tilted_levy,
    truncate,
)
from .levy_ou import (
    AtomJumps,
    DensityJumps,
    LevyCharacteristics,
    OUParams,
    Truncation,
    deterministic_part,
    finite_driver,
    laplace_exponent,
    sample_driver,
    simulate_ou,
)
from .numerics import (
    derive_seed,
    derive_stream,
    integrate_exponential_scale,
    parallel_map,
)


class ExtinctionError(ValueError):
    """The snapshot holds no particles, so the empirical average is undefined."""


@dataclass(frozen=True)
class Caps:
    max_particles: int = 10 ** 6
    max_events: int = 10 ** 8


DEFAULT_CAPS = Caps()


@dataclass
class Particle:
    address: tuple
    birth_time: float
    birth_position: float
    lifetime: float
    cut_depth: float


@dataclass
class Snapshot:
    """Fragment sizes at time ``t`` in nonincreasing order.

    ``addresses``, ``birth_times`` and ``cut_depths`` are aligned with
    ``sizes``. The cut depth of a particle is the largest ``-log s_i`` over
    the non-first children on its ancestral line, so the particle survives
    truncation at level ``l`` exactly when its cut depth is below ``l``.
    """

    t: float
    sizes: np.ndarray
    addresses: tuple = ()
    birth_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    cut_depths: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def count(self) -> int:
        return int(self.sizes.size)


@dataclass
class SimRun:
    gf: object
    level: float
    horizon: float
    times: np.ndarray
    seed: int
    caps: Caps
    snapshots: list
    selected: np.ndarray
    aborted: bool = False
    abort_time: float = math.inf
    n_particles: int = 0
    n_events: int = 0
    kind: str = "gf"
    theta: float = 0.0

    def snapshot(self, t: float) -> Snapshot:
        for snap in self.snapshots:
            if snap.t == t:
                return snap
        if self.aborted:
            raise RuntimeError(f"run aborted at t={self.abort_time}; no snapshot at t={t}")
        raise KeyError(f"no snapshot at t={t}")


# -- branching structure -------------------------------------------------------

@dataclass(frozen=True)
class BranchingStructure:
    """Motion and branching mechanism of the truncated system."""

    driver_levy: LevyCharacteristics
    multi_rate: float
    split: Callable[[np.random.Generator], tuple]


def branching_structure(gf: GFCharacteristics, level: float) -> BranchingStructure:
    """Split the truncated measure into the ``psi``-driver and branch events."""
    nu = truncate(gf.nu, level)
    rate = multi_mass(nu)
    if math.isinf(rate):
        raise ConditionError("truncate(nu, level) has infinite multi-child rate; use a finite level")
    c_psi = gf.drift_c + nu.integrate(lambda sizes, om: om, multi=True)
    if isinstance(nu, AtomicDislocation):
        multi = [(r, p) for r, p in nu.atoms if len(p) != 1]
        single = [(r, p) for r, p in nu.atoms if len(p) == 1 and p.s1 < 1.0]
        jumps = AtomJumps(tuple(math.log(p.s1) for _, p in single),
                          tuple(r for r, _ in single)) if single else None
        parts = [tuple(p) for _, p in multi]
        probs = np.array([r for r, _ in multi]) / rate if multi else None

        def split(rng):
            if len(parts) == 1:
                return parts[0]
            return parts[int(rng.choice(len(parts), p=probs))]

        return BranchingStructure(LevyCharacteristics(gf.sigma, c_psi, jumps, 0.0), rate, split)

    cut = min(nu.threshold, 0.5)
    jumps = _binary_single_jumps(nu, cut) if cut > 0 else None

    def split(rng):
        u = float(nu.sample_u(rng, cut, 0.5, 1)[0])
        return (1.0 - u, u)

    return BranchingStructure(LevyCharacteristics(gf.sigma, c_psi, jumps, 0.0), rate, split)


def _binary_single_jumps(nu: BinaryDislocation, cut: float) -> DensityJumps:
    """Jumps ``y = log s1`` of the single-child part ``u = 1 - s1 <= cut``."""
    g = nu.density_u
    y_cut = math.log1p(-cut)

    def lam(y):
        return math.exp(y) * g(-math.expm1(y)) if y >= y_cut else 0.0

    def sampler(rng, eps, n):
        return np.log1p(-nu.sample_u(rng, eps, cut, n)) if eps < cut else np.empty(0)

    def truncation(eps):
        eps = min(eps, cut)
        return Truncation(
            nu.integrate_u(lambda u: 1.0, eps, cut),
            nu.integrate_u(lambda u: u, eps, cut),
            nu.integrate_u(lambda u: u + math.log1p(-u), 0.0, eps) if eps > 0 else 0.0,
            nu.integrate_u(lambda u: math.log1p(-u) ** 2, 0.0, eps) if eps > 0 else 0.0,
        )

    return DensityJumps(lam, singularity=max(nu.tail_exponent, 0.0), sampler=sampler,
                        truncation=truncation, log_moment_finite=True, name=f"single_{nu.name}")


# -- core simulation -----------------------------------------------------------

def _check_times(times, horizon):
    times = np.asarray(sorted(float(t) for t in np.atleast_1d(times)), dtype=float)
    if times.size == 0:
        raise ValueError("at least one snapshot time is required")
    if times[0] < 0:
        raise ValueError("snapshot times must be nonnegative")
    if horizon is None:
        horizon = float(times[-1])
    if times[-1] > horizon:
        raise ValueError("snapshot times must not exceed the horizon")
    return times, float(horizon)


def _finish(snap_lists, times, selected, gf, level, horizon, seed, caps, aborted, abort_time,
            n_particles, n_events, kind, theta):
    snapshots = []
    for t, entries in zip(times, snap_lists):
        if aborted and t >= abort_time:
            break
        entries.sort(key=lambda e: (-e[0], e[1], e[2]))
        snapshots.append(Snapshot(
            float(t),
            np.array([e[0] for e in entries], dtype=float),
            tuple(e[2] for e in entries),
            np.array([e[1] for e in entries], dtype=float),
            np.array([e[3] for e in entries], dtype=float),
        ))
    return SimRun(gf, level, horizon, times, seed, caps, snapshots, selected, aborted, abort_time,
                  n_particles, n_events, kind, theta)


def simulate(gf: GFCharacteristics, level: float, times, seed: int, caps: Caps | None = None,
             *, eps: float | None = None, horizon: float | None = None, x0: float = 1.0) -> SimRun:
    """Simulate the level-``level`` truncated system and record snapshots.

    ``eps`` truncates the driver jumps when the single-child part of the
    measure has infinite mass. ``x0`` is the size of the initial particle.
    A run that exceeds ``caps`` is returned with ``aborted`` set and only the
    snapshots that were complete at the time of the abort.
    """
    caps = caps or DEFAULT_CAPS
    times, horizon = _check_times(times, horizon)
    st = branching_structure(gf, level)
    driver = finite_driver(st.driver_levy, eps)
    theta = gf.theta
    R = st.multi_rate
    snap_lists = [[] for _ in times]
    selected = np.zeros(times.size)
    heap = [(0.0, (), math.log(x0), -math.inf)]
    n_particles = n_events = 0
    aborted, abort_time = False, math.inf
    while heap:
        b, addr, a, depth = heapq.heappop(heap)
        if n_particles >= caps.max_particles or n_events >= caps.max_events:
            aborted, abort_time = True, b
            break
        n_particles += 1
        rng = derive_stream(seed, addr).rng
        life = rng.exponential(1.0 / R) if R > 0 else math.inf
        end = b + life
        lo = int(np.searchsorted(times, b, side="left"))
        hi = int(np.searchsorted(times, end, side="left"))
        dies = end <= horizon
        ages = list(times[lo:hi] - b)
        if dies:
            ages.append(life)
        span = life if dies else horizon - b
        jt, js, _, knots, gauss = sample_driver(rng, driver, theta, span, ages)
        n_events += len(jt)
        vals = deterministic_part(theta, a, driver.drift, jt, js, knots) + gauss
        is_selected = all(i == 1 for i in addr)
        for j, k in enumerate(range(lo, hi)):
            size = math.exp(vals[j])
            if size > 0:
                snap_lists[k].append((size, b, addr, depth))
                if is_selected:
                    selected[k] = size
        if dies:
            n_events += 1
            z_end = vals[-1]
            for i, s in enumerate(st.split(rng), start=1):
                child_depth = depth if i == 1 else max(depth, -math.log(s))
                heapq.heappush(heap, (end, addr + (i,), z_end + math.log(s), child_depth))
    return _finish(snap_lists, times, selected, gf, level, horizon, seed, caps, aborted,
                   abort_time, n_particles, n_events, "gf", theta)


def cell_system_simulate(levy: LevyCharacteristics, theta: float, horizon: float | None, times,
                         seed: int, caps: Caps | None = None, *, level: float = math.inf,
                         eps: float | None = None, x0: float = 1.0) -> SimRun:
    """Simulate the binary cell system driven by ``exp`` of an OU process.

    Each cell follows ``exp(Z)`` with ``Z`` of characteristics
    ``(levy, theta)``. A jump ``y`` of a cell of size ``x-`` at that moment
    spawns a new cell of size ``x- (1 - e^y)``; with a finite ``level`` a
    child is kept only when ``1 - e^y > e^{-level}``. Children of a cell get
    the indices 1, 2, ... in order of birth.
    """
    caps = caps or DEFAULT_CAPS
    times, horizon = _check_times(times, horizon)
    driver = finite_driver(levy, eps)
    thr = math.exp(-level)
    snap_lists = [[] for _ in times]
    selected = np.zeros(times.size)
    heap = [(0.0, (), math.log(x0), -math.inf)]
    n_particles = n_events = 0
    aborted, abort_time = False, math.inf
    while heap:
        b, addr, a, depth = heapq.heappop(heap)
        if n_particles >= caps.max_particles or n_events >= caps.max_events:
            aborted, abort_time = True, b
            break
        n_particles += 1
        rng = derive_stream(seed, addr).rng
        lo = int(np.searchsorted(times, b, side="left"))
        ages = times[lo:] - b
        span = horizon - b
        jt, js, kill, knots, gauss = sample_driver(rng, driver, theta, span, ages, jump_knots=True)
        n_events += len(jt) + (kill <= span)
        # Values at the snapshot ages.
        snap_idx = np.searchsorted(knots, ages)
        vals = deterministic_part(theta, a, driver.drift, jt, js, ages) + gauss[snap_idx]
        for j, k in enumerate(range(lo, times.size)):
            if ages[j] >= kill:
                continue
            size = math.exp(vals[j])
            if size > 0:
                snap_lists[k].append((size, b, addr, depth))
                if not addr:
                    selected[k] = size
        if len(jt):
            jidx = np.searchsorted(knots, jt)
            pre = np.array([
                float(deterministic_part(theta, a, driver.drift, jt[:m], js[:m], jt[m])) + gauss[jidx[m]]
                for m in range(len(jt))
            ])
            frac = -np.expm1(js)
            for m in range(len(jt)):
                if frac[m] > thr:
                    child = pre[m] + math.log(frac[m])
                    heapq.heappush(heap, (b + jt[m], addr + (m + 1,), child,
                                          max(depth, -math.log(frac[m]))))
    return _finish(snap_lists, times, selected, levy, level, horizon, seed, caps, aborted,
                   abort_time, n_particles, n_events, "cell", theta)


def cut(run: SimRun, level: float) -> SimRun:
    """Apply the kill rule of a lower truncation level to a recorded run."""
    if level > run.level:
        raise ValueError("cut level must not exceed the level of the run")
    snaps = []
    for s in run.snapshots:
        keep = s.cut_depths < level
        snaps.append(Snapshot(s.t, s.sizes[keep],
                              tuple(a for a, k in zip(s.addresses, keep) if k),
                              s.birth_times[keep], s.cut_depths[keep]))
    return replace(run, level=level, snapshots=snaps)


# -- statistics of a run -------------------------------------------------------

def lq_statistic(snapshot: Snapshot, q: float) -> float:
    """``sum_i X_i^q``, with ``0^0 = 0`` so that ``q = 0`` counts fragments."""
    if q == 0:
        return float(snapshot.count)
    return float(np.sum(snapshot.sizes ** q))


@dataclass(frozen=True)
class SelectedFragment:
    """Size of the selected fragment (follow child 1) at the snapshot times."""

    times: np.ndarray
    sizes: np.ndarray

    def __call__(self, t: float) -> float:
        idx = np.flatnonzero(self.times == t)
        if idx.size == 0:
            raise KeyError(f"t={t} is not a snapshot time of the run")
        return float(self.sizes[idx[0]])


def selected_fragment_path(run: SimRun) -> SelectedFragment:
    n = len(run.snapshots)
    return SelectedFragment(run.times[:n], run.selected[:n])


@functools.lru_cache(maxsize=4096)
def _log_growth(gf: GFCharacteristics, level: float, q: float, theta_sign: float, t: float) -> float:
    """``int_0^t kappa^level(q e^{-theta_sign s}) ds``."""
    g = gf.truncated(level) if not math.isinf(level) else gf
    return integrate_exponential_scale(lambda x: cumulant(g, x), q, theta_sign, t)


def moment_target(gf: GFCharacteristics, level: float, q: float, t: float) -> float:
    """``exp(int_0^t kappa^level(q e^{-theta s}) ds)``."""
    return math.exp(_log_growth(gf, level, float(q), gf.theta, float(t)))


def moment_condition(gf: GFCharacteristics, level: float, q: float, t: float) -> bool:
    """Whether ``q >= alpha (1 v e^{theta t})`` for some ``alpha`` in the domain."""
    g = gf.truncated(level)
    return in_dom(g, q / max(1.0, math.exp(gf.theta * t)))


def additive_martingale(run: SimRun, q: float, times=None) -> np.ndarray:
    """Additive martingale at the snapshot times.

    For ``theta <= 0`` this is ``exp(-int_0^t kappa(q e^{-theta s}) ds) sum X_i^q``;
    for ``theta > 0`` the exponent is ``alpha e^{theta t}`` with ``alpha = q``
    and the normaliser is ``exp(-int_0^t kappa(alpha e^{theta s}) ds)``.
    """
    gf = run.gf
    g = gf.truncated(run.level)
    if not in_dom(g, q):
        raise DomainViolation(f"q = {q} is not in dom(kappa)")
    th = gf.theta
    out = []
    for snap in _select(run, times):
        t = snap.t
        if th > 0:
            expo = q * math.exp(th * t)
            norm = _log_growth(gf, run.level, float(q), -th, t)
        else:
            expo = q
            norm = _log_growth(gf, run.level, float(q), th, t)
        out.append(math.exp(-norm) * lq_statistic(snap, expo))
    return np.array(out)


def _select(run, times):
    if times is None:
        return run.snapshots
    return [run.snapshot(float(t)) for t in np.atleast_1d(times)]


def count_martingale(run: SimRun, times=None) -> np.ndarray:
    """``M_t = e^{-kappa(0) t} N(t)``."""
    k0 = cumulant(run.gf.truncated(run.level), 0.0)
    if math.isinf(k0):
        raise ConditionError("kappa(0) = inf: the number of fragments is not finite")
    return np.array([math.exp(-k0 * s.t) * s.count for s in _select(run, times)])


def empirical_average(snapshot: Snapshot, f) -> float:
    """``N(t)^{-1} sum_i f(X_i(t))``."""
    if snapshot.count == 0:
        raise ExtinctionError("empirical average of an extinct snapshot")
    try:
        vals = np.asarray(f(snapshot.sizes), dtype=float)
        if vals.shape != snapshot.sizes.shape:
            raise ValueError
    except (TypeError, ValueError):
        vals = np.array([f(x) for x in snapshot.sizes], dtype=float)
    return float(vals.mean())


# -- Monte Carlo estimates -----------------------------------------------------

@dataclass(frozen=True)
class MCEstimate:
    """Mean and standard error of independent replications.

    Unpacks as ``(estimate, stderr)``.
    """

    estimate: float
    stderr: float
    n: int
    aborted: int = 0
    values: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __iter__(self):
        yield self.estimate
        yield self.stderr

    @classmethod
    def from_values(cls, values, aborted=0):
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            return cls(math.nan, math.nan, 0, aborted, v)
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        return cls(float(v.mean()), se, int(v.size), aborted, v)


def replication_seeds(seed: int, reps: int, label: str = "rep") -> list:
    return [derive_seed(seed, label, r) for r in range(reps)]


def run_replications(fn, seed: int, reps: int, workers: int = 1, label: str = "rep") -> list:
    """``fn(rep_seed)`` for each replication, in replication order."""
    return parallel_map(fn, replication_seeds(seed, reps, label), workers)


def _run_values(gf, level, times, caps, eps, stat):
    """Replication body returning ``(aborted, [stat(snapshot) per time])``."""
    def body(s):
        run = simulate(gf, level, times, s, caps, eps=eps)
        if run.aborted:
            return None
        return [stat(run, snap) for snap in run.snapshots]
    return body


def estimate_moment(gf: GFCharacteristics, level: float, q: float, t: float, reps: int, seed: int,
                    caps: Caps | None = None, *, eps: float | None = None,
                    workers: int = 1) -> MCEstimate:
    """Monte Carlo mean of ``sum_i X_i(t)^q`` over independent runs.

    Extinct runs count as 0. Aborted runs are left out and counted.
    """
    if not moment_condition(gf, level, q, t):
        raise DomainViolation(
            f"moment condition q >= alpha (1 v e^(theta t)) with alpha in dom(kappa) fails for q={q}, t={t}")
    out = run_replications(_run_values(gf, level, [t], caps, eps,
                                       lambda run, snap: lq_statistic(snap, q)), seed, reps, workers)
    vals = [v[0] for v in out if v is not None]
    return MCEstimate.from_values(vals, aborted=sum(v is None for v in out))


@dataclass(frozen=True)
class ManyToOne:
    lhs: float
    rhs: float
    zscore: float
    lhs_se: float
    rhs_se: float


def many_to_one_compare(gf: GFCharacteristics, q_or_f, t: float, reps: int, seed: int, *,
                        level: float = math.inf, eps: float | None = None,
                        caps: Caps | None = None, workers: int = 1) -> ManyToOne:
    """Compare ``e^{-kappa(0) t} E sum f(X_i(t))`` with ``E f(chi(t))``.

    ``chi = exp(Z)`` where ``Z`` is the OU process with exponent
    ``kappa(. ) - kappa(0)`` started at 0. A number ``q`` stands for
    ``f(x) = x^q``.
    """
    g = gf.truncated(level)
    k0 = cumulant(g, 0.0)
    if math.isinf(k0):
        raise ConditionError("kappa(0) = inf: the many-to-one formula needs finitely many fragments")
    if callable(q_or_f):
        f = q_or_f
    else:
        qq = float(q_or_f)
        f = (lambda x: np.ones_like(x)) if qq == 0 else (lambda x: np.asarray(x) ** qq)

    def fsum(run, snap):
        if snap.count == 0:
            return 0.0
        return float(np.sum(f(snap.sizes)))

    out = run_replications(_run_values(gf, level, [t], caps, eps, fsum), seed, reps, workers)
    left = np.array([v[0] for v in out if v is not None]) * math.exp(-k0 * t)
    spine = OUParams(tilted_levy(g, 0.0), gf.theta)

    def spine_body(s):
        path = simulate_ou(spine, 0.0, t, derive_stream(s), eps=eps)
        z = path(t)
        return float(np.asarray(f(np.array([math.exp(z)])))[0])

    right = np.array(run_replications(spine_body, seed, reps, workers, label="spine"))
    L, R = MCEstimate.from_values(left), MCEstimate.from_values(right)
    se = math.hypot(L.stderr, R.stderr)
    z = (L.estimate - R.estimate) / se if se > 0 else (0.0 if abs(L.estimate - R.estimate) <= 1e-12 else math.inf)
    return ManyToOne(L.estimate, R.estimate, z, L.stderr, R.stderr)


# -- the F-weight of the cell system -------------------------------------------

def _jump_power_integral(levy: LevyCharacteristics, q: float) -> float:
    """``int (1 - e^y)^q Lambda(dy)``."""
    return cumulant_from_levy(levy, q) - laplace_exponent(levy, q)


def f_weight_components(levy: LevyCharacteristics, theta: float, eta: float, t: float):
    """``(F_1(t), F_eta(t))``."""
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    if t < 0:
        raise ValueError("t must be nonnegative")
    q_min = 2.0 * min(1.0, math.exp(theta * t))
    if math.isinf(cumulant_from_levy(levy, q_min)):
        raise DomainViolation("cumulant diverges on the range of exponents 2 e^{theta r}")
    i1 = integrate_exponential_scale(lambda x: laplace_exponent(levy, x), 2.0, -theta, t)
    i2 = integrate_exponential_scale(lambda x: _jump_power_integral(levy, x), 2.0, -theta, t)
    return math.exp(-i1), math.exp(-i2 / eta)


def f_weight(levy: LevyCharacteristics, theta: float, eta: float, t: float, x: float) -> float:
    """``F(t, x) = x^{2 e^{theta t}} F_1(t) F_eta(t)``."""
    f1, fe = f_weight_components(levy, theta, eta, t)
    if x == 0:
        return 0.0
    return x ** (2.0 * math.exp(theta * t)) * f1 * fe


class _FTable:
    """``log F_1`` and ``log F_eta`` on ``[0, T]``, exact up to quadrature error.

    Values on a grid come from 8-point Gauss-Legendre per cell; off-grid
    values add one more Gauss-Legendre piece from the grid point below.
    """

    def __init__(self, levy, theta, eta, T, cells=512):
        self.levy, self.theta, self.eta = levy, theta, eta
        self.grid = np.linspace(0.0, T, cells + 1)
        self.gx, self.gw = np.polynomial.legendre.leggauss(8)
        inc = np.array([self._piece(a, b) for a, b in zip(self.grid[:-1], self.grid[1:])])
        self.cum = np.vstack([np.zeros(2), np.cumsum(inc, axis=0)])

    def _rates(self, r):
        q = 2.0 * math.exp(self.theta * r)
        return laplace_exponent(self.levy, q), _jump_power_integral(self.levy, q)

    def _piece(self, a, b):
        if b <= a:
            return np.zeros(2)
        r = 0.5 * (a + b) + 0.5 * (b - a) * self.gx
        vals = np.array([self._rates(ri) for ri in r])
        return 0.5 * (b - a) * (self.gw @ vals)

    def log_components(self, t):
        k = min(int(np.searchsorted(self.grid, t, side="right")) - 1, len(self.grid) - 1)
        base = self.cum[k] + self._piece(self.grid[k], t)
        return -base[0], -base[1] / self.eta

    def log_f(self, t, logx):
        l1, le = self.log_components(t)
        return 2.0 * math.exp(self.theta * t) * logx + l1 + le


@dataclass(frozen=True)
class SupermartingaleCheck:
    mean: float
    stderr: float
    bound: float
    exact: float
    reps: int

    @property
    def passed(self) -> bool:
        return self.mean <= self.bound * (1.0 + 3.0 * self.stderr)


def f_weight_supermartingale(levy: LevyCharacteristics, theta: float, eta: float, s: float,
                             t: float, x: float, reps: int, seed: int, *,
                             eps: float | None = None, workers: int = 1) -> SupermartingaleCheck:
    """Monte Carlo check of ``E[F(s+t, X(t)) + sum_{r<=t} F(s+r, -dX(r))] <= F(s, x)``.

    ``X = exp(Z)`` with ``Z`` the OU process started at ``log x``. The exact
    value of the left side, ``x^{2e^{theta s}} F_1(s) (F_eta(s+t) + eta (F_eta(s) - F_eta(s+t)))``,
    is reported alongside.
    """
    table = _FTable(levy, theta, eta, s + t)
    params = OUParams(levy, theta)
    z0 = math.log(x)

    def body(rs):
        path = simulate_ou(params, z0, t, derive_stream(rs), eps=eps)
        zt = path(t)
        total = math.exp(table.log_f(s + t, zt)) if zt > -math.inf else 0.0
        for r, y in zip(path.jump_times, path.jump_sizes):
            pre = path.left_limit(r)
            if pre > -math.inf:
                total += math.exp(table.log_f(s + r, pre + math.log(-math.expm1(y))))
        return total

    vals = run_replications(body, seed, reps, workers)
    est = MCEstimate.from_values(vals)
    f1s, fes = f_weight_components(levy, theta, eta, s)
    _, fest = f_weight_components(levy, theta, eta, s + t)
    exact = x ** (2.0 * math.exp(theta * s)) * f1s * (fest + eta * (fes - fest))
    return SupermartingaleCheck(est.estimate, est.stderr, f_weight(levy, theta, eta, s, x), exact, est.n)


# -- dumps ---------------------------------------------------------------------

def dump_snapshots(runs: Sequence[SimRun], sizes_path, counts_path) -> None:
    """Write ``(run_id, t, rank, size)`` and ``(run_id, t, count)`` CSV files."""
    with open(sizes_path, "w", newline="") as fs, open(counts_path, "w", newline="") as fc:
        ws, wc = csv.writer(fs, lineterminator="\n"), csv.writer(fc, lineterminator="\n")
        ws.writerow(["run_id", "t", "rank", "size"])
        wc.writerow(["run_id", "t", "count"])
        for rid, run in enumerate(runs):
            for snap in run.snapshots:
                wc.writerow([rid, format(snap.t, ".17g"), snap.count])
                for rank, size in enumerate(snap.sizes, start=1):
                    ws.writerow([rid, format(snap.t, ".17g"), rank, format(float(size), ".17g")])
