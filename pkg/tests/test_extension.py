import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import direct_extension
from restriction_lab.extension import (AliasingError, AliasingWarning, FrequencyGrid, SpacetimeGrid, SupportError,
                                       TwoScaleSetup, extend, extend_direct, kappa, two_scale_operators,
                                       weighted_extend)
from restriction_lab.hypersurface import EllipticPhase, RadialPhase, affine_density

PARAB = RadialPhase.monomial(2)


def gaussian_grid(d=1, n=256, hw=1.0, width=0.2, center=0.0):
    fg = FrequencyGrid.box(d, n, hw)
    return fg.sample(lambda x: np.exp(-np.sum((x - center) ** 2, axis=-1) / (2 * width**2)))


def test_grid_invariants():
    with pytest.raises(ValueError):
        FrequencyGrid.box(1, 100, 1.0)
    fg = FrequencyGrid.box(1, 8, 1.0)
    with pytest.raises(ValueError):
        fg.like(np.full(8, np.nan))
    assert fg.h == 0.25 and fg.half_width == 1.0


def test_single_node_is_plane_wave():
    fg = FrequencyGrid.box(1, 64, 2.0)
    k = 40
    xi0 = fg.axis()[k]
    s = np.zeros(64, complex)
    s[k] = 1 / fg.h
    f = fg.like(s)
    g = SpacetimeGrid.conjugate(f, [0.0])
    E = extend(PARAB, f, g).samples[0]
    assert np.allclose(E, np.exp(1j * g.x_axis() * xi0), atol=1e-12)


def test_t_zero_is_inverse_transform():
    f = gaussian_grid()
    g = SpacetimeGrid.conjugate(f, [0.0])
    E = extend(PARAB, f, g).samples[0]
    x = g.x_axis()[::17]
    ref = [direct_extension(np.zeros(f.n), f.nodes(), f.samples, f.h, 0.0, [xx]) for xx in x]
    assert np.allclose(E[::17], ref, rtol=0, atol=1e-12 * np.abs(E).max())


def test_gaussian_matches_direct_quadrature(rng):
    f = gaussian_grid(n=512)
    t = rng.uniform(-3, 3, 5)
    g = SpacetimeGrid.conjugate(f, np.sort(t), time_weights=np.ones(5))
    F = extend(PARAB, f, g).samples
    x = g.x_axis()
    idx = len(x) // 2 + rng.integers(-20, 20, 5)  # where the packet lives
    vals = np.array([F[i, j] for i, j in enumerate(idx)])
    ref = extend_direct(PARAB, f, np.sort(t), x[idx])
    assert np.max(np.abs(vals - ref) / np.abs(ref)) < 1e-8


@given(st.floats(-50, 50), st.sampled_from([1, 2]))
def test_plancherel(t, d):
    f = gaussian_grid(d=d, n=64 if d == 2 else 256, width=0.3, center=0.1)
    g = SpacetimeGrid.conjugate(f, [t], pad=2)
    E = extend(PARAB, f, g, check=False).samples[0]
    l2 = math.sqrt(np.sum(np.abs(E) ** 2) * g.dx**d)
    assert l2 == pytest.approx(kappa(d) * f.l2_norm(), rel=1e-10)


def test_modulation_translates(rng):
    f = gaussian_grid(n=256)
    g = SpacetimeGrid.conjugate(f, [0.0, 1.5, 4.0])
    k = 7
    x0 = k * g.dx
    fm = f.like(f.samples * np.exp(1j * x0 * f.nodes()[..., 0]))
    A = extend(PARAB, f, g).samples
    B = extend(PARAB, fm, g).samples
    assert np.allclose(B, np.roll(A, -k, axis=1), atol=1e-12)


def test_monomial_scaling_on_grid():
    lam = 2.0
    P = RadialPhase.monomial(4)
    f = gaussian_grid(n=256, hw=1.0, width=0.2, center=0.3)
    f_lam = FrequencyGrid(1, f.n, f.h / lam, tuple(np.array(f.lower) / lam), f.samples)  # samples of f(lam xi)
    ts = np.array([0.0, 0.5, 1.0])
    A = extend(P, f, SpacetimeGrid.conjugate(f, ts)).samples
    B = extend(P, f_lam, SpacetimeGrid.conjugate(f_lam, lam**4 * ts)).samples
    assert np.allclose(B, A / lam, atol=1e-12)


def test_aliasing_policy():
    f = gaussian_grid(n=64, hw=1.0)
    period = 2 * math.pi / f.h
    vmax = 2 * np.max(np.abs(f.support_nodes()))
    with pytest.raises(AliasingError):
        extend(PARAB, f, SpacetimeGrid.conjugate(f, [1.5 * period / vmax]))
    with pytest.warns(AliasingWarning):
        extend(PARAB, f, SpacetimeGrid.conjugate(f, [0.75 * period / vmax]))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        extend(PARAB, f, SpacetimeGrid.conjugate(f, [0.25 * period / vmax]))


def test_support_violation():
    g = EllipticPhase.quadratic(1, domain_radius=0.5)
    f = FrequencyGrid.box(1, 64, 1.0).sample(lambda x: np.ones(x.shape[:-1]))
    with pytest.raises(SupportError):
        extend(g, f, SpacetimeGrid.conjugate(f, [0.0]))


def test_weighted_extend_examples():
    f = gaussian_grid(n=128)
    g = SpacetimeGrid.conjugate(f, [0.0, 1.0])
    A = weighted_extend(PARAB, f, 2.0, g).samples
    assert np.allclose(A, 2 ** (1 / 3 * 0.5) * extend(PARAB, f, g).samples)
    P4 = RadialPhase.monomial(4)
    fg = FrequencyGrid.box(1, 128, 1.0)
    f = fg.sample(lambda x: ((np.abs(x[..., 0]) >= 0.5) & (np.abs(x[..., 0]) <= 1)).astype(float))
    from restriction_lab.extension import weighted_density

    w = weighted_density(P4, f, math.inf)
    xi = fg.nodes()[..., 0]
    assert np.allclose(w.samples, np.abs(12 * xi**2) ** (1 / 3) * f.samples)
    s = np.zeros(128, complex)
    s[64] = 1.0  # the node xi = 0
    tiny = fg.like(s)
    out = weighted_extend(P4, tiny, 2.0, SpacetimeGrid.conjugate(tiny, [0.0]))
    assert np.max(np.abs(out.samples)) == 0.0


def test_two_scale_examples():
    fg = FrequencyGrid.box(1, 256, 0.2)
    setup = TwoScaleSetup.paraboloid_pair(1, 0, 0, 4, transversal=False)
    f1 = fg.sample(lambda x: np.exp(-x[..., 0] ** 2 / 0.001) * (np.abs(x[..., 0]) < 0.1))
    g = SpacetimeGrid.conjugate(fg, [0.0, 2.0])
    E1, E2, prod = two_scale_operators(setup, f1, f1, g)
    ref = extend(EllipticPhase.quadratic(1), f1, g).samples
    assert np.allclose(E1.samples, ref) and np.allclose(E2.samples, ref)
    _, _, prod = two_scale_operators(setup, f1, fg.zeros(), g)
    assert not np.any(prod.samples)
    quartic = EllipticPhase.from_radial(RadialPhase.monomial(4), 1)
    s3 = TwoScaleSetup(quartic, EllipticPhase.quadratic(1), 3, 0, 4.0)
    xi = np.linspace(-0.015, 0.015, 7)[:, None]
    assert np.allclose(s3.h(1).value(xi), 2.0**-12 * (8 * xi[:, 0]) ** 4, rtol=1e-13)
    with pytest.raises(SupportError):
        two_scale_operators(s3, fg.sample(lambda x: np.ones(x.shape[:-1])), f1, g)
