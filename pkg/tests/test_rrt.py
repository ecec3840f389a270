import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from ougf import dislocation as dl
from ougf import rrt
from ougf.numerics import EULER_GAMMA, DomainError, derive_stream, integrate_exponential_scale


def tree_and_clock(n, seed):
    s = derive_stream(seed)
    return rrt.build_tree(n, s.child("tree")), rrt.destruction_schedule(n, s.child("clock"))


# -- trees and destruction -----------------------------------------------------

def test_small_trees():
    t1 = rrt.build_tree(1, derive_stream(0))
    assert t1.parent.tolist() == [0]
    t2 = rrt.build_tree(2, derive_stream(0))
    assert t2.parent.tolist() == [0, 1]
    with pytest.raises(ValueError):
        rrt.build_tree(0, derive_stream(0))


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 300), seed=st.integers(0, 10 ** 6))
def test_parents_precede_children(n, seed):
    tree = rrt.build_tree(n, derive_stream(seed))
    i = np.arange(2, n + 1)
    assert np.all((tree.parent[1:] >= 1) & (tree.parent[1:] < i))


def test_attachment_is_uniform():
    # P(parent of vertex i is 1) = 1 / (i - 1).
    reps, n = 4000, 8
    hits = np.zeros(n + 1)
    for r in range(reps):
        tree = rrt.build_tree(n, derive_stream(r))
        hits[2:] += tree.parent[1:] == 1
    for i in range(2, n + 1):
        p = 1.0 / (i - 1)
        assert abs(hits[i] / reps - p) <= 4 * math.sqrt(p * (1 - p) / reps)


def test_destroy_extremes():
    tree, sched = tree_and_clock(50, 3)
    whole = rrt.destroy_at(tree, sched, 0.0)
    assert whole.n_clusters == 1 and whole.sizes.tolist() == [50]
    dust = rrt.destroy_at(tree, sched, math.inf)
    assert dust.n_clusters == 50 and np.all(dust.sizes == 1)
    with pytest.raises(ValueError):
        rrt.destroy_at(tree, sched, -1.0)


def test_destroy_path_example():
    tree = rrt.RecursiveTree(3, np.array([0, 1, 2]))
    sched = rrt.DestructionSchedule(np.array([math.inf, 0.5, 2.0]))
    part = rrt.destroy_at(tree, sched, 1.0)
    assert part.members(0).tolist() == [1]
    assert part.members(1).tolist() == [2, 3]


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 200), seed=st.integers(0, 10 ** 6),
       t1=st.floats(0.0, 4.0), t2=st.floats(0.0, 4.0))
def test_destruction_refines_over_time(n, seed, t1, t2):
    a, b = sorted((t1, t2))
    tree, sched = tree_and_clock(n, seed)
    pa, pb = rrt.destroy_at(tree, sched, a), rrt.destroy_at(tree, sched, b)
    assert pa.sizes.sum() == pb.sizes.sum() == n
    # Every later cluster sits inside one earlier cluster.
    for cid in range(pb.n_clusters):
        assert np.unique(pa.cluster_of[pb.members(cid) - 1]).size == 1
    assert pb.n_clusters >= pa.n_clusters


def test_mean_cluster_count():
    # Each of the n - 1 edges is gone by time t with probability 1 - e^{-t}.
    n, t, reps = 40, 0.7, 2000
    counts = np.array([rrt.destroy_at(*tree_and_clock(n, r), t).n_clusters for r in range(reps)])
    exact = 1 + (n - 1) * -math.expm1(-t)
    assert abs(counts.mean() - exact) < 4 * counts.std(ddof=1) / math.sqrt(reps)


def test_restrict_is_a_prefix():
    tree, sched = tree_and_clock(30, 1)
    sub = tree.restrict(10)
    assert sub.n == 10 and np.array_equal(sub.parent, tree.parent[:10])
    assert np.array_equal(sched.restrict(10).clock, sched.clock[:10])
    with pytest.raises(ValueError):
        tree.restrict(31)


def test_weights_examples():
    part = rrt.ClusterPartition(0.0, np.zeros(4, dtype=int), np.array([4]))
    assert rrt.cluster_weights(part, 4, 0.0).tolist() == [1.0]
    part = rrt.ClusterPartition(math.log(2), np.array([0, 1, 1, 1]), np.array([1, 3]))
    w = rrt.cluster_weights(part, 4, math.log(2))
    np.testing.assert_allclose(w, [1.5, 0.5], rtol=1e-14)


def test_weight_moments_shape_and_values():
    tree, sched = tree_and_clock(64, 2)
    out = rrt.weight_moments(tree, sched, 2.0, [0.0, 1.0], sizes=[16, 64])
    assert out.shape == (2, 2)
    np.testing.assert_allclose(out[:, 0], [1.0, 1.0], rtol=1e-14)
    part = rrt.destroy_at(tree, sched, 1.0)
    w = rrt.cluster_weights(part, 64, 1.0)
    assert out[1, 1] == pytest.approx(float(np.sum(w ** 2)), rel=1e-14)


# -- closed forms --------------------------------------------------------------

def test_kappa_rrt_values():
    assert rrt.kappa_rrt(2.0) == pytest.approx(4 - 2 * EULER_GAMMA, rel=1e-14)
    assert rrt.kappa_rrt(3.0) == pytest.approx(6 - 3 * EULER_GAMMA, rel=1e-14)
    for q in (0.5, 1.0):
        with pytest.raises(DomainError):
            rrt.kappa_rrt(q)


@pytest.mark.parametrize("q", [1.3, 2.0, 3.5, 6.0])
def test_kappa_rrt_matches_cumulant(q):
    assert rrt.kappa_rrt(q) == pytest.approx(dl.cumulant(dl.rrt_gf(), q), rel=1e-9)


def test_rrt_moment_values():
    assert rrt.rrt_moment(2.0, 0.0) == pytest.approx(1.0, rel=1e-14)
    assert rrt.rrt_moment(2.0, math.log(4 / 3)) == pytest.approx(4 / math.sqrt(math.pi), rel=1e-13)
    with pytest.raises(DomainError):
        rrt.rrt_moment(2.0, math.log(2.0))
    with pytest.raises(ValueError):
        rrt.rrt_moment(2.0, -0.1)


@pytest.mark.parametrize("q,t", [(3.0, 0.5), (2.5, 0.2)])
def test_rrt_moment_matches_general_formula(q, t):
    gf = dl.rrt_gf()
    log_growth = integrate_exponential_scale(lambda x: dl.cumulant(gf, x), q, 1.0, t)
    assert rrt.rrt_moment(q, t) == pytest.approx(math.exp(log_growth), rel=1e-8)


# -- split sampler -------------------------------------------------------------

def test_split_sampler_support_and_shape():
    level = 3.0
    pairs = rrt.sample_rrt_split(level, derive_stream(1), 1000)
    assert pairs.shape == (1000, 2)
    np.testing.assert_allclose(pairs.sum(axis=1), 1.0, rtol=0, atol=1e-15)
    assert np.all(pairs[:, 0] >= 0.5) and np.all(pairs[:, 1] >= math.exp(-level) * (1 - 1e-12))
    single = rrt.sample_rrt_split(level, derive_stream(1))
    assert isinstance(single, dl.MassPartition) and len(single) == 2
    with pytest.raises(ValueError):
        rrt.sample_rrt_split(0.0, derive_stream(1))


def test_split_normalisation():
    # Binary part of (s^{-2} + (1 - s)^{-2}) ds at level log 4 lives on
    # [1/2, 3/4] and has mass 8/3.
    nu = dl.rrt_dislocation(math.log(4.0))
    assert dl.multi_mass(nu) == pytest.approx(8 / 3, rel=1e-10)
    assert rrt.rrt_split_cdf(0.5, math.log(4.0)) == 0.0
    assert rrt.rrt_split_cdf(0.75, math.log(4.0)) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("level", [math.log(4.0), 2.0, 8.0])
def test_split_sampler_ks(level):
    s1 = rrt.sample_rrt_split(level, derive_stream(7), 100_000)[:, 0]
    res = stats.kstest(s1, lambda s: rrt.rrt_split_cdf(s, level))
    assert res.statistic < 0.01


# -- dumps ---------------------------------------------------------------------

def test_dump_weights(tmp_path):
    tree, sched = tree_and_clock(20, 4)
    part = rrt.destroy_at(tree, sched, 0.8)
    path = tmp_path / "w.csv"
    rrt.dump_weights([(0, 0.8, part, 20)], path)
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert sum(int(r["cluster_size"]) for r in rows) == 20
    np.testing.assert_allclose([float(r["weight"]) for r in rows],
                               rrt.cluster_weights(part, 20, 0.8), rtol=1e-15)
