import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from restriction_lab.config import ExperimentConfig
from restriction_lab.experiments import bump_suite, tapered_gaussian, wavepacket_setup
from restriction_lab.extension import FrequencyGrid, SpacetimeGrid, SupportError, TwoScaleSetup, extend
from restriction_lab.norms import lq_spacetime
from restriction_lab.wavepacket import (almost_orthogonality, bump, decompose, plateau_cutoff, reconstruct,
                                        slab_indices, smooth_step, summed_profile, support_violation,
                                        time_slab_pieces, verify_packet_properties)


@pytest.fixture(scope="module")
def suite():
    return wavepacket_setup(ExperimentConfig())


@pytest.fixture(scope="module")
def packets(suite):
    phase, f, region, grid, R = suite
    return decompose(f, phase, R, region=region)


def rel_err(a, b):
    return lq_spacetime(a - b, 2, "region").value / lq_spacetime(b, 2, "region").value


@given(st.floats(-2, 3))
def test_smooth_step_partition(v):
    assert smooth_step(v) + smooth_step(1 - v) == pytest.approx(1.0)


def test_cutoffs():
    assert bump(np.zeros(1)) == 1.0 and bump(np.array([1.0])) == 0.0
    assert plateau_cutoff(2.0) == 1.0 and plateau_cutoff(3.0) == 0.0


def test_zero_data_gives_no_packets(suite):
    phase, f, region, grid, R = suite
    assert decompose(f.zeros(), phase, R) == []


def test_single_bump_concentration(suite):
    phase, f, _, _, R = suite
    s = math.sqrt(R)
    P = decompose(bump_suite(f, R, [(0.0, 0.0, 2.0)]), phase, R)
    c = np.array([abs(p.coefficient) ** 2 for p in P])
    dist = np.array([np.linalg.norm(p.tube.x) for p in P])
    assert c[dist <= 6 * s].sum() >= 0.99 * c.sum()
    assert c[dist <= s].sum() >= 0.4 * c.sum()


def test_two_bumps_split(suite):
    phase, f, _, _, R = suite
    s = math.sqrt(R)
    P = decompose(bump_suite(f, R, [(-4 / s, 0.0, 1.0), (4 / s, 0.0, 1.0)]), phase, R)
    c = np.array([abs(p.coefficient) ** 2 for p in P])
    xi = np.array([p.tube.xi[0] for p in P])
    neither = (np.abs(xi + 4 / s) > 2.5 / s) & (np.abs(xi - 4 / s) > 2.5 / s)
    assert c[neither].sum() < 1e-6 * c.sum()
    assert c[xi < 0].sum() == pytest.approx(c[xi > 0].sum(), rel=1e-6)


def test_reconstruction(suite, packets):
    phase, f, region, grid, R = suite
    assert rel_err(reconstruct(packets, grid), extend(phase, f, grid)) < 1e-3


def test_single_packet_and_zeroed(suite, packets):
    _, _, _, grid, _ = suite
    p = packets[0]
    one = reconstruct([p.with_coefficient(1.0)], grid)
    assert np.allclose(one.samples, p.field(grid).samples)
    zero = reconstruct([q.with_coefficient(0.0) for q in packets[:20]], grid)
    assert not np.any(zero.samples)


def test_mixed_provenance_rejected(suite, packets):
    phase, f, _, grid, R = suite
    other = decompose(f, phase, R, M=2)
    with pytest.raises(ValueError):
        reconstruct([packets[0], other[0]], grid)


def test_free_wave_identity(suite, packets):
    phase, _, _, grid, _ = suite
    for p in packets[:5]:
        a = p.field(grid).samples
        b = extend(phase, p.profile(), grid, check=False).samples
        assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(b))


def test_support_exact_and_negative_control(packets):
    assert max(support_violation(p) for p in packets[:50]) == 0.0
    assert support_violation(packets[0].widened(4.0)) > 1e-3


def test_linearity(suite):
    phase, f, _, _, R = suite
    g = bump_suite(f, R, [(0.03, 100.0, 1.0)])
    a = decompose(f, phase, R, prune=0)
    b = decompose(g, phase, R, prune=0)
    c = decompose(f + g, phase, R, prune=0)
    key = lambda p: (p.tube.x, p.tube.xi)
    da = {key(p): p.coefficient for p in a}
    db = {key(p): p.coefficient for p in b}
    for p in c:
        assert p.coefficient == pytest.approx(da.get(key(p), 0) + db.get(key(p), 0), abs=1e-12)


def test_summed_profile_is_f(suite):
    phase, f, _, _, R = suite
    P = decompose(f, phase, R, prune=0)
    assert np.allclose(summed_profile(P).samples, f.samples, atol=1e-12)


def test_properties(suite, packets):
    _, _, _, grid, _ = suite
    rep = verify_packet_properties(packets, grid, n_vectors=20)
    assert rep.ell2 <= 4 and rep.ortho_constant <= 10 and rep.support_violation == 0
    assert rep.n_packets == len(packets) and rep.C_decay > 0


def test_residual_monotone_in_M(suite):
    phase, f, region, grid, R = suite
    ref = extend(phase, f, grid)
    errs = [rel_err(reconstruct(decompose(f, phase, R, region=region, M=M), grid), ref) for M in (2, 4, 6)]
    assert errs[0] > errs[1] > errs[2]


def test_small_R_rejected(suite):
    phase, f, _, _, _ = suite
    with pytest.raises(ValueError):
        decompose(f, phase, 2.0)


# -- time slabs -----------------------------------------------------------

def test_slab_tiling():
    for k1 in (0, 1, 2):
        setup = TwoScaleSetup.paraboloid_pair(1, k1, 0, 4)
        R = 64.0
        sl = slab_indices(setup, R)
        t0, t1 = setup.q_r_times(R)
        assert sl[0][1] == t0 and sl[-1][2] == t1
        assert all(a[2] == b[1] for a, b in zip(sl, sl[1:]))


def slab_data(k1, R, frac=0.5):
    """Unit tapered Gaussian whose extension focuses at ``t0 + frac (t1 - t0)`` inside ``Q_R``."""
    setup = TwoScaleSetup.paraboloid_pair(1, k1, 0, 4)
    fg = FrequencyGrid.box(1, 4096, 0.4)
    t0, t1 = setup.q_r_times(R)
    tc = t0 + frac * (t1 - t0)
    F = tapered_gaussian(setup.c0 / 4, setup.c0)
    f = fg.sample(lambda x: F(x) * np.exp(-1j * tc * setup.h(2).value(x)))
    return setup, f * (1 / f.l2_norm())


def test_single_slab_identity():
    setup, f = slab_data(0, 64.0)
    (sl,) = time_slab_pieces(f, setup, 64.0)
    assert sl.j == 0
    assert (sl.piece + f * -1).l2_norm() < 1e-6 * f.l2_norm()
    assert almost_orthogonality([sl], f) == pytest.approx(1.0, abs=1e-6)


def test_zero_slabs():
    setup, f = slab_data(1, 64.0)
    assert all(not np.any(s.piece.samples) for s in time_slab_pieces(f.zeros(), setup, 64.0))
    with pytest.raises(ValueError):
        almost_orthogonality(time_slab_pieces(f, setup, 64.0), f.zeros())


def test_slab_support_errors():
    setup, f = slab_data(1, 64.0)
    wide = f.like(np.ones_like(f.samples))
    with pytest.raises(SupportError):
        time_slab_pieces(wide, setup, 64.0)
    with pytest.raises(ValueError):
        time_slab_pieces(f, setup, 64.0, budget=1)


def test_two_piece_band():
    setup, f = slab_data(2, 64.0, 0.2)
    _, g = slab_data(2, 64.0, 0.8)
    h = f + g
    # the constant grows with the cutoff scale C; a narrow cutoff keeps slabs apart
    ratio = almost_orthogonality(time_slab_pieces(h, setup, 64.0, C=1.5), h)
    assert 0.25 <= ratio <= 4
