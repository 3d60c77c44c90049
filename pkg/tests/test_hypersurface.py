import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import fd_affine_density
from restriction_lab.hypersurface import (EllipticPhase, RadialPhase, affine_density, ellipticity_diagnose,
                                          eval_radial, read_phase_file, rescale_annulus)

coef_lists = st.lists(st.floats(0.0, 10.0), min_size=1, max_size=4).filter(lambda c: any(a > 0.01 for a in c))


def test_eval_radial_examples():
    assert eval_radial(RadialPhase.monomial(2), 1.0) == (1.0, 2.0, 2.0)
    assert eval_radial(RadialPhase.monomial(4), 2.0) == (16.0, 32.0, 48.0)
    assert eval_radial(RadialPhase.polynomial([1, 1]), 1.0) == (2.0, 6.0, 14.0)


def test_eval_radial_matches_finite_differences():
    P = RadialPhase.polynomial([1, 1])
    h = 1e-5
    v, d1, d2 = eval_radial(P, 1.0)
    assert d1 == pytest.approx((P(1 + h) - P(1 - h)) / (2 * h), rel=1e-6)
    assert d2 == pytest.approx((P(1 + h) - 2 * P(1.0) + P(1 - h)) / h**2, rel=1e-4)


def test_eval_radial_rejects_negative():
    with pytest.raises(ValueError):
        eval_radial(RadialPhase.monomial(2), -1.0)


@pytest.mark.parametrize("bad", [dict(exponents=(1,), coefficients=(1,)),
                                 dict(exponents=(4, 2), coefficients=(1, 1)),
                                 dict(exponents=(2,), coefficients=(-1,)),
                                 dict(exponents=(2, 4), coefficients=(0, 0))])
def test_radial_phase_invariants(bad):
    with pytest.raises(ValueError):
        RadialPhase(**bad)


def test_affine_density_examples():
    assert affine_density(RadialPhase.monomial(2), np.array([0.3, -0.7])) == pytest.approx(4 ** 0.25)
    assert affine_density(RadialPhase.monomial(4), np.zeros(2)) == 0.0
    assert affine_density(RadialPhase.monomial(4), 1.0, d=1) == pytest.approx(12 ** (1 / 3))


def test_affine_density_origin_limit():
    P = RadialPhase.polynomial([3.0, 1.0])
    # P'(r)/r -> P''(0) = 6 at the origin, so the d = 2 density is 36^{1/4}
    assert affine_density(P, np.zeros(2)) == pytest.approx(36 ** 0.25)


@given(coef_lists, st.floats(0.05, 4.0), st.floats(0, 2 * math.pi), st.sampled_from([1, 2]))
def test_affine_density_matches_fd_hessian(coefs, r, ang, d):
    P = RadialPhase.polynomial(coefs)
    xi = np.array([r]) if d == 1 else r * np.array([math.cos(ang), math.sin(ang)])
    exact = affine_density(P, xi)
    oracle = fd_affine_density(P, xi, step=1e-4 * max(r, 0.1))
    assert exact == pytest.approx(oracle, rel=2e-5, abs=1e-9)


def test_ellipticity_examples():
    g = EllipticPhase.quadratic(2)
    rep = ellipticity_diagnose(g, 100)
    assert rep.passed and rep.eps0_est == pytest.approx(0.5)
    quartic = EllipticPhase.from_radial(RadialPhase.monomial(4), 2)
    rep = ellipticity_diagnose(quartic, 100)
    assert not rep.passed and rep.eps0_est == pytest.approx(0.0, abs=1e-12)
    # j = 2 needs 2^-k in J_2 = [1, inf), i.e. k <= 0
    rep = ellipticity_diagnose(rescale_annulus(RadialPhase.polynomial([1, 1]), 2, -3, dim=2), 200)
    assert rep.passed and rep.eps0_est > 0.05


def test_ellipticity_is_deterministic():
    g = rescale_annulus(RadialPhase.polynomial([1, 1]), 2, -1, dim=2)
    assert ellipticity_diagnose(g, 64) == ellipticity_diagnose(g, 64)


def test_rescale_annulus_examples():
    g = rescale_annulus(RadialPhase.monomial(4), 2, 5)
    xi = np.array([[0.5], [0.8], [1.0]])
    assert np.allclose(g.value(xi), xi[:, 0] ** 4)
    g = rescale_annulus(RadialPhase.polynomial([1, 1]), 2, -1)
    assert g.coefficients == pytest.approx((0.25, 1.0))
    with pytest.raises(ValueError):
        rescale_annulus(RadialPhase.polynomial([1, 1]), 2, 3)


@given(st.lists(st.floats(0.01, 100.0), min_size=2, max_size=4), st.integers(-6, 6))
def test_rescale_annulus_identity(coefs, k):
    P = RadialPhase.polynomial(coefs)
    from restriction_lab.decomposition import monomial_intervals

    owners = [J.index for J in monomial_intervals(P) if J.contains(2.0**-k)]
    j = owners[0]
    g = rescale_annulus(P, j, k)
    e_j, a_j = P.term(j)
    assert max(g.coefficients) <= 1 + 1e-12
    r = np.linspace(0.5, 1.0, 100)
    ref = 2.0 ** (k * e_j) * P(2.0**-k * r) / a_j
    assert np.allclose(g.value(r[:, None]), ref, rtol=1e-12)


def test_read_phase_file(tmp_path):
    p = tmp_path / "phase.txt"
    p.write_text("# quartic plus quadratic\n4 1.0\n2 0.5   # leading\n\n")
    P = read_phase_file(p)
    assert P.exponents == (2.0, 4.0) and P.coefficients == (0.5, 1.0)
    p.write_text("2\n")
    with pytest.raises(ValueError):
        read_phase_file(p)
