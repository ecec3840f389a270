"""The thirteen acceptance criteria at their stated scales and tolerances.

Each test records one PASS/FAIL line (see ``conftest.py``) before asserting,
so the summary at the end of a pytest run lists every criterion. Seeds are
pinned; targets come from quadrature in the package and are cross-checked
against scipy where the package computes them itself.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate, special

from ougf import dislocation as dl
from ougf import gf_sim as gs
from ougf import levy_ou as lo
from ougf import rrt
from ougf.harness import generator_residuals, rrt_replications
from ougf.numerics import derive_stream

INF = math.inf
SEED = 20240611


def half_half(sigma=0.0, drift=0.0, theta=1.0):
    return dl.half_half_model(sigma, drift, theta)


def two_sample_z(a, b):
    se = math.hypot(a.stderr, b.stderr)
    return (a.estimate - b.estimate) / se


def moments_over_runs(gf, level, times, q, reps, seed, label="rep"):
    """``{t: [sum X_i(t)^q per run]}`` from one batch of runs."""
    out = {t: [] for t in times}
    for s in gs.replication_seeds(seed, reps, label):
        run = gs.simulate(gf, level, times, s)
        assert not run.aborted
        for t in times:
            out[t].append(gs.lq_statistic(run.snapshot(t), q))
    return out


def test_c01_yule_reduction(acceptance):
    t0 = time.perf_counter()
    gf = half_half()
    est = gs.estimate_moment(gf, INF, 0.0, 1.0, 10_000, SEED)
    assert dl.cumulant(gf, 0.0) == pytest.approx(1.0, abs=1e-14)
    z = (est.estimate - math.e) / est.stderr
    wall = time.perf_counter() - t0
    ok = abs(z) < 3 and wall < 60
    acceptance(1, "Yule reduction E N(1) = e",
               ok, f"{est.estimate:.5f} +- {est.stderr:.5f} vs {math.e:.5f}, z={z:+.2f}, {wall:.1f}s")
    assert ok


def test_c02_moment_formula(acceptance):
    t0 = time.perf_counter()
    gf = half_half()
    target = gs.moment_target(gf, INF, 2.0, 1.0)
    oracle, _ = integrate.quad(lambda s: 2.0 ** (1 - 2 * math.exp(-s)) - 1 + math.exp(-s), 0, 1,
                               epsabs=1e-13, epsrel=1e-13)
    assert target == pytest.approx(math.exp(oracle), rel=1e-10)
    est = gs.estimate_moment(gf, INF, 2.0, 1.0, 10_000, SEED + 2)
    z = (est.estimate - target) / est.stderr
    wall = time.perf_counter() - t0
    ok = abs(z) < 3 and wall < 120
    acceptance(2, "moment formula q=2, t=1",
               ok, f"{est.estimate:.5f} +- {est.stderr:.5f} vs {target:.7f}, z={z:+.2f}, {wall:.1f}s")
    assert ok


def test_c03_ou_laplace(acceptance):
    t0 = time.perf_counter()
    params = lo.OUParams(lo.LevyCharacteristics(1.0, 0.0), 1.0)
    target = lo.ou_laplace_transform(params, 0.0, 2.0, 1.0)
    assert target == pytest.approx(math.exp(1 - math.exp(-2)), rel=1e-12)
    root = derive_stream(SEED + 3)
    vals = np.array([math.exp(2.0 * lo.simulate_ou(params, 0.0, 1.0, root.child(i))(1.0))
                     for i in range(100_000)])
    est = gs.MCEstimate.from_values(vals)
    z = (est.estimate - target) / est.stderr
    wall = time.perf_counter() - t0
    ok = abs(z) < 3 and wall < 30
    acceptance(3, "Gaussian OU E exp(2 Z(1))",
               ok, f"{est.estimate:.5f} +- {est.stderr:.5f} vs {target:.7f}, z={z:+.2f}, {wall:.1f}s")
    assert ok


def test_c04_stationary_moments(acceptance):
    sigma, theta = 0.8, 1.5
    gf = dl.GFCharacteristics(sigma, 0.0, dl.atoms(), theta)
    errs = []
    for q in (1.0, 2.0, 4.0):
        exact = math.exp(sigma ** 2 * q ** 2 / (4 * theta))
        errs.append(abs(dl.stationary_gf_moment(gf, q) / exact - 1))
    ok = max(errs) <= 1e-8
    acceptance(4, "stationary moments of the Gaussian model", ok, f"max rel err {max(errs):.2e}")
    assert ok


def test_c05_selected_fragment(acceptance):
    gf = half_half()
    target = math.exp(integrate.quad(lambda s: dl.phi_star(gf, 2 * math.exp(-s)), 0, 1)[0])
    oracle = math.exp(integrate.quad(lambda s: 2.0 ** (-2 * math.exp(-s)) - 1 + math.exp(-s), 0, 1)[0])
    assert target == pytest.approx(oracle, rel=1e-10)
    vals = []
    for s in gs.replication_seeds(SEED + 5, 10_000):
        run = gs.simulate(gf, INF, [1.0], s)
        vals.append(gs.selected_fragment_path(run)(1.0) ** 2)
    est = gs.MCEstimate.from_values(vals)
    z = (est.estimate - target) / est.stderr
    ok = abs(z) < 3
    acceptance(5, "selected fragment E X*(1)^2",
               ok, f"{est.estimate:.5f} +- {est.stderr:.5f} vs {target:.7f}, z={z:+.2f}")
    assert ok


@pytest.mark.parametrize("theta,sigma,drift,q", [(1.0, 0.0, 0.0, 1.0), (-0.5, 0.3, 0.1, 2.0)])
def test_c06_martingales(acceptance, theta, sigma, drift, q):
    gf = half_half(sigma, drift, theta)
    times = [0.5, 1.0, 2.0]
    add, cnt = [], []
    for s in gs.replication_seeds(SEED + 6, 10_000, f"theta={theta}"):
        run = gs.simulate(gf, INF, times, s)
        add.append(gs.additive_martingale(run, q))
        cnt.append(gs.count_martingale(run))
    add, cnt = np.array(add), np.array(cnt)
    zs = []
    for j in range(len(times)):
        for arr in (add, cnt):
            e = gs.MCEstimate.from_values(arr[:, j])
            zs.append((e.estimate - 1.0) / e.stderr)
    ok = max(abs(z) for z in zs) < 3
    acceptance(6, f"martingales, theta={theta:g}",
               ok, "z at t=0.5,1,2 (additive, count): " + " ".join(f"{z:+.2f}" for z in zs))
    assert ok


def test_c07_truncation_embedding(acceptance):
    gf = dl.GFCharacteristics(0.0, 0.0, dl.atoms((1.0, (0.6, 0.3, 0.1))), 1.0)
    t, q, reps = 1.0, 2.0, 4000
    full = [gs.simulate(gf, INF, [t], s) for s in gs.replication_seeds(SEED + 7, reps, "full")]
    zs = []
    for lev in (0.5, 1.5):
        cut = gs.MCEstimate.from_values([gs.lq_statistic(gs.cut(r, lev).snapshot(t), q) for r in full])
        direct = gs.MCEstimate.from_values(moments_over_runs(gf, lev, [t], q, reps, SEED + 7, f"direct{lev}")[t])
        zs.append(two_sample_z(cut, direct))
    levels = [0.2, 0.5, 1.0, 1.5, 2.5, INF]
    monotone = True
    for r in full[:200]:
        vals = [gs.lq_statistic(gs.cut(r, lev).snapshot(t), q) if lev < INF else gs.lq_statistic(r.snapshot(t), q)
                for lev in levels]
        monotone &= all(a <= b for a, b in zip(vals, vals[1:]))
    ok = max(abs(z) for z in zs) < 3 and monotone
    acceptance(7, "cut of a level-inf run vs direct runs",
               ok, f"z at levels 0.5, 1.5: {zs[0]:+.2f} {zs[1]:+.2f}; monotone in level: {monotone}")
    assert ok


def test_c08_many_to_one(acceptance):
    gf = half_half()
    res = [gs.many_to_one_compare(gf, q, 1.0, 10_000, SEED + 8) for q in (2.0, 0.0)]
    ok = all(abs(r.zscore) < 3 for r in res)
    acceptance(8, "many-to-one, f=x^2 and f=1",
               ok, " ".join(f"{r.lhs:.5f} vs {r.rhs:.5f} (z={r.zscore:+.2f})" for r in res))
    assert ok


def test_c09_law_of_large_numbers(acceptance):
    gf = half_half()
    target = dl.stationary_gf_moment(gf, 2.0)

    def averages(times, reps, label):
        out = {t: [] for t in times}
        for s in gs.replication_seeds(SEED + 9, reps, label):
            run = gs.simulate(gf, INF, times, s)
            for t in times:
                snap = run.snapshot(t)
                if snap.count:
                    out[t].append(gs.empirical_average(snap, lambda x: x ** 2))
        return {t: gs.MCEstimate.from_values(v) for t, v in out.items()}

    est = averages([3.0, 6.0], 400, "lln")
    est[9.0] = averages([9.0], 40, "lln9")[9.0]
    gaps = {t: e.estimate - target for t, e in est.items()}
    e6 = est[6.0]
    within = abs(gaps[6.0]) <= 3 * e6.stderr + 0.05 * target
    approach = abs(gaps[3.0]) >= abs(gaps[6.0]) >= abs(gaps[9.0])
    ok = within and approach
    acceptance(9, "LLN of the empirical mean of x^2",
               ok, f"target {target:.5f}; " + ", ".join(
                   f"t={t:g}: {e.estimate:.5f} +- {e.stderr:.5f}" for t, e in sorted(est.items()))
               + f"; t=6 within 3SE+5%: {within}; monotone approach: {approach}")
    assert ok


def test_c10_generator_residual(acceptance):
    gf = half_half(0.5, 0.1, 1.0)
    res, arr = generator_residuals(gf, 0.5, [0.1, 0.05], 20_000, SEED + 10)
    paired = gs.MCEstimate.from_values(arr[:, 1] - 0.5 * arr[:, 0])
    z = paired.estimate / paired.stderr
    ok = abs(z) < 3
    acceptance(10, "generator residual halves with h",
               ok, f"r(0.1)={res[0.1].estimate:+.4f}+-{res[0.1].stderr:.4f}, "
                   f"r(0.05)={res[0.05].estimate:+.4f}+-{res[0.05].stderr:.4f}, "
                   f"r(0.05)-r(0.1)/2={paired.estimate:+.4f}+-{paired.stderr:.4f}")
    assert ok


def test_c11_random_recursive_tree(acceptance):
    t0 = time.perf_counter()
    t, q = math.log(4 / 3), 2.0
    target = rrt.rrt_moment(q, t)
    assert target == pytest.approx(4 / math.sqrt(math.pi), rel=1e-13)
    assert target == pytest.approx(special.gamma(2) / special.gamma(1.5) * 1 / (1.5 - 1), rel=1e-13)
    n_values = [1000, 10_000, 100_000]
    arr = rrt_replications(n_values, [t], [q], 200, SEED + 11)
    est = [gs.MCEstimate.from_values(arr[:, a, 0, 0]) for a in range(len(n_values))]
    gaps = [abs(e.estimate - target) for e in est]
    close = gaps[-1] <= max(3 * est[-1].stderr, 0.05 * target)
    monotone = gaps[0] >= gaps[1] >= gaps[2]
    wall = time.perf_counter() - t0
    ok = close and monotone and wall < 300
    acceptance(11, "random recursive tree sum of squared weights",
               ok, ", ".join(f"n={n}: {e.estimate:.4f}+-{e.stderr:.4f}" for n, e in zip(n_values, est))
               + f" vs {target:.7f}; gaps nonincreasing: {monotone}; {wall:.1f}s")
    assert ok


def test_c12_binary_correspondence(acceptance):
    levy = lo.atom_levy([-math.log(2.0)], [1.0])
    gf = half_half()
    kerr = max(abs(dl.cumulant_from_levy(levy, q) - dl.cumulant(gf, q)) for q in np.linspace(0.1, 6, 60))
    cell_vals = []
    for s in gs.replication_seeds(SEED + 12, 10_000, "cell"):
        run = gs.cell_system_simulate(levy, 1.0, None, [1.0], s)
        cell_vals.append(gs.lq_statistic(run.snapshot(1.0), 2.0))
    cell = gs.MCEstimate.from_values(cell_vals)
    atom = gs.estimate_moment(gf, INF, 2.0, 1.0, 10_000, SEED + 12)
    z = two_sample_z(cell, atom)
    ok = abs(z) < 3 and kerr <= 1e-10
    acceptance(12, "cell system vs binary atom model",
               ok, f"cell {cell.estimate:.5f}+-{cell.stderr:.5f}, atom {atom.estimate:.5f}+-{atom.stderr:.5f}, "
                   f"z={z:+.2f}; max |kappa difference| {kerr:.1e}")
    assert ok


def test_c13_f_weight_supermartingale(acceptance):
    levy = lo.atom_levy([-math.log(2.0)], [1.0])
    chk = gs.f_weight_supermartingale(levy, 1.0, 0.5, 0.0, 1.0, 1.0, 10_000, SEED + 13)
    ok = chk.passed
    acceptance(13, "F-weight supermartingale inequality",
               ok, f"mean {chk.mean:.5f}+-{chk.stderr:.5f} <= F(0,1)={chk.bound:.5f}; "
                   f"exact left side {chk.exact:.5f}")
    assert ok
