import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import brute_classify, classify_instance, matches_brute, random_family, tube_ball_hit
from restriction_lab.extension import FrequencyGrid, TwoScaleSetup
from restriction_lab.tubes import (CountStats, TubeFamily, build_partition, classify, count_experiment, count_trial,
                                   frequency_lattice, growth_ratio, lattice_ensemble, nu_counts, pi_surface,
                                   tube_meets_balls)

SETUP1 = TwoScaleSetup.paraboloid_pair(1)
SETUP2 = TwoScaleSetup.paraboloid_pair(2)


def test_partition_example():
    P = build_partition(16, 0.25, SETUP1)
    assert (P.t0, P.t1) == (8, 16)
    assert np.allclose(P.cells / 4, np.round(P.cells / 4))
    assert P.C_ov == 4


@pytest.mark.parametrize("setup,R", [(SETUP1, 64.0), (SETUP2, 16.0)])
def test_partition_cover_and_overlap(setup, R, rng):
    P = build_partition(R, 0.125, setup)
    pts = P.sample_q_r(1000, rng)
    mult = P.cell_multiplicity(pts)
    assert mult.min() >= 1 and mult.max() <= 2 ** (setup.d + 1)
    assert P.box_multiplicity(pts).min() >= 1


def test_partition_preconditions():
    with pytest.raises(ValueError):
        build_partition(8, 0.1, SETUP1)
    with pytest.raises(ValueError):
        build_partition(64, 0.5, SETUP1)
    with pytest.raises(MemoryError):
        build_partition(4096, 0.1, SETUP2, budget=100)


@given(st.floats(-300, 300), st.floats(-2, 2), st.floats(0, 100), st.floats(-300, 300), st.floats(1, 40))
def test_tube_ball_closed_form_d1(x, v, t, xc, r):
    fam = TubeFamily(np.array([[x]]), np.array([[0.0]]), np.array([[v]]), 64.0)
    hit = tube_meets_balls(fam, np.array([[t, xc]]), r)[0, 0]
    assert hit == tube_ball_hit([x], [v], (t, xc), r, 8.0)


@given(st.lists(st.floats(-60, 60), min_size=2, max_size=2), st.lists(st.floats(-2, 2), min_size=2, max_size=2),
       st.floats(0, 30), st.lists(st.floats(-60, 60), min_size=2, max_size=2), st.floats(1, 20))
def test_tube_ball_d2(x, v, t, xc, r):
    fam = TubeFamily(np.array([x]), np.zeros((1, 2)), np.array([v]), 16.0)
    centre = np.array([t, *xc])
    from restriction_lab.tubes import _tube_ball_distance

    dist = _tube_ball_distance(fam.x, fam.v, centre[None, :], 4.0)[0, 0]
    if abs(dist - r) > 1e-6:
        assert tube_meets_balls(fam, centre[None, :], r)[0, 0] == tube_ball_hit(x, v, centre, r, 4.0)


def test_classify_single_tube():
    P = build_partition(64, 0.125, SETUP1)
    q = 10
    c = P.cells[q]
    fam = TubeFamily(np.array([[c[1]]]), np.zeros((1, 1)), np.zeros((1, 1)), 64.0)
    tab = classify((fam, TubeFamily.empty(64.0)), P, 1, 1, 1, 1)
    assert tab.inc[1][q, 0]
    assert tab.counts[2].max() == 0 and not tab.q_class.any()  # Q(1,1) needs one tube of each side


def test_classify_parallel_disjoint():
    P = build_partition(64, 0.25, SETUP1)
    x = np.array([[-60.0], [60.0]])
    fam1 = TubeFamily(x, np.zeros((2, 1)), np.zeros((2, 1)), 64.0)
    tab = classify((fam1, fam1), P, 1, 1, 1, 1)
    both = tab.inc[1][:, 0] & tab.inc[1][:, 1]
    assert not both.any()


def test_classify_rejects_non_dyadic():
    P = build_partition(64, 0.25, SETUP1)
    e = TubeFamily.empty(64.0)
    with pytest.raises(ValueError):
        classify((e, e), P, 3, 1, 1, 1)
    with pytest.raises(ValueError):
        classify((e, e), P, 1, 1, 2.0**40, 1)


@pytest.mark.parametrize("seed", [0, 1])
def test_classify_matches_brute_force_d1(seed):
    f1, f2, P, mu, lam = classify_instance(seed, 1)
    tab = classify((f1, f2), P, *mu, *lam)
    assert tab.q_class.any() and tab.t_class[1].any()
    assert matches_brute(tab, brute_classify(f1, f2, P, mu, lam, 8.0))


def test_sim_definition_audit():
    f1, f2, P, mu, lam = classify_instance(3, 1)
    tab = classify((f1, f2), P, *mu, *lam)
    contain = P.box_in_scaled(tab.C)
    for j in (1, 2):
        for t in np.nonzero(tab.t_class[j])[0]:
            bb = tab.best_box[j][t]
            assert tab.box_counts[j][t, bb] == tab.box_counts[j][t].max()
            assert np.array_equal(tab.sim[j][t], contain[:, bb])
        assert not tab.sim[j][~tab.t_class[j]].any()


def test_pi_surface_examples():
    fg = FrequencyGrid.box(1, 256, 0.25)
    a, b = np.array([0.05]), np.array([-0.1])
    surf = pi_surface((a, b), SETUP1, fg, 0.0)
    assert surf.value(a)[0] == 0 and surf.contains(a)[0]
    z = fg.nodes().reshape(-1, 1)
    e1 = np.array([1.0])
    closed = (a @ a - np.sum(z * z, axis=1)) + np.sum((z - a + b - e1) ** 2, axis=1) - (b - e1) @ (b - e1)
    assert np.allclose(surf.value(z), closed, atol=1e-15)
    assert np.all(surf.value(surf.nodes) == 0)
    assert surf.gradient_ok


def test_pi_surface_role_swap():
    z = np.random.default_rng(0).uniform(-0.2, 0.2, (50, 2))
    a, b = (0.03, -0.02), (0.1, 0.05)
    s1 = pi_surface((a, b), SETUP2, z, 0.01, side=1)
    s2 = pi_surface((a, b), SETUP2.swapped(), z, 0.01, side=2)
    assert np.array_equal(s1.value(z), s2.value(z))


def test_pi_surface_errors():
    with pytest.raises(ValueError):
        pi_surface(((1.0,), (0.0,)), SETUP1, np.zeros((1, 1)), 0.1)
    degenerate = TwoScaleSetup.paraboloid_pair(1, transversal=False)
    with pytest.raises(ValueError, match="gradient"):
        pi_surface(((0.0,), (0.0,)), degenerate, FrequencyGrid.box(1, 64, 0.25), 0.1, strict=True)


def _table(R=256.0, n=60, seed=0):
    rng = np.random.default_rng(seed)
    P = build_partition(R, 0.125, SETUP1)
    f1 = random_family(SETUP1, 1, R, rng, n)
    f2 = random_family(SETUP1, 2, R, rng, n)
    return P, f1, f2, classify((f1, f2), P, 1, 1, 1, 1)


def test_nu_counts_bounds_and_empty():
    P, f1, f2, tab = _table()
    nu = nu_counts(tab, (f1, f2), SETUP1)
    assert np.all(nu.nu1 <= tab.counts[1]) and np.all(nu.nu2 <= tab.counts[2])
    e = TubeFamily.empty(64.0)
    tab0 = classify((e, e), P, 1, 1, 1, 1)
    nu0 = nu_counts(tab0, (e, e), SETUP1)
    assert not nu0.nu1.any() and not nu0.nu2.any()


def test_nu_counts_single_frequency():
    R = 64.0
    P = build_partition(R, 0.125, SETUP1)
    xi0 = np.array([0.0])
    x = np.arange(-10, 11)[:, None] * 8.0
    v = SETUP1.h(1).gradient(xi0[None, :])
    f1 = TubeFamily(x, np.zeros_like(x), np.broadcast_to(v, x.shape), R, 1)
    e = TubeFamily.empty(R, side=2)
    tab = classify((f1, e), P, 1, 1, 1, 1)
    nu = nu_counts(tab, (f1, e), SETUP1, anchors1=[xi0], anchors2=[[0.0]])
    assert np.array_equal(nu.nu1, tab.counts[1])


def test_nu_counts_monotone():
    P, f1, f2, tab = _table(n=80)
    sub = (f1.subset(np.arange(40)), f2.subset(np.arange(40)))
    tab_sub = classify(sub, P, 1, 1, 1, 1)
    big = nu_counts(tab, (f1, f2), SETUP1)
    small = nu_counts(tab_sub, sub, SETUP1)
    assert np.all(small.nu1 <= big.nu1) and np.all(small.nu2 <= big.nu2)


def test_nu_counts_budget():
    P, f1, f2, tab = _table()
    with pytest.raises(RuntimeError):
        nu_counts(tab, (f1, f2), SETUP1, budget=0)
    assert nu_counts(tab, (f1, f2), SETUP1, budget=1, subsample=True).subsampled


def test_lattice_ensemble_meets_q_r(rng):
    fam = lattice_ensemble(SETUP1, 2, 256.0, rng)
    assert len(fam) > 0 and np.allclose(fam.x / 16, np.round(fam.x / 16))
    assert np.allclose(fam.v, SETUP1.h(2).gradient(fam.xi).reshape(fam.v.shape), atol=1e-12)
    assert len(lattice_ensemble(SETUP1, 2, 256.0, rng, n=5)) == 5


def test_frequency_lattice():
    pts = frequency_lattice(SETUP2, 1, 256.0)
    assert np.all(np.linalg.norm(pts, axis=1) < SETUP2.radius(1))
    assert np.allclose(pts * 16, np.round(pts * 16))


def test_count_trial_single_tubes_bound(rng):
    R = 64.0
    P = build_partition(R, 0.09375, SETUP1)
    for _ in range(5):
        c, _ = count_trial(1, SETUP1, R, 0.09375, rng, P)
        assert 0 <= c <= P.n_cells * 64


def test_count_experiment_deterministic():
    a = count_experiment(1, SETUP1, 64.0, trials=5, seed=7)
    b = count_experiment(1, SETUP1, 64.0, trials=5, seed=7)
    assert np.array_equal(a.counts, b.counts) and a.seeds == b.seeds
    assert a.csv_rows()[0].count(",") == CountStats.CSV_HEADER.count(",")
    with pytest.raises(ValueError):
        count_experiment(3, SETUP1, 64.0, trials=1)


def test_growth_ratio_zero_handling():
    z = CountStats(1, 64, 0.1, np.zeros(3, int), (1, 2, 3), 0.0, False)
    nz = CountStats(1, 256, 0.1, np.array([1, 4, 2]), (1, 2, 3), 0.0, False)
    assert growth_ratio(z, z) == 1.0 and growth_ratio(z, nz) == math.inf
    assert growth_ratio(nz, nz) == 1.0
