"""3-point Dirichlet problem on [0, 2]: determinant, eigenvalues, containment."""

import numpy as np
import pytest

import oracles
from bqspec.ode_engine import ThirdOrderPropagator, integrate_third_order
from bqspec.periodic_fn import CoefficientPair, TrigSeries
from bqspec.three_point import (containment_slack, eigenfunction, locate_mu,
                                three_point_determinant, trace_interval)


def test_free_determinant_vanishes_at_mu(u_zero):
    mu1 = oracles.free_mu(1)
    F = three_point_determinant(u_zero, mu1, steps=512)
    # scale by the determinant's own terms (it cancels heavily on the axis)
    prop = ThirdOrderPropagator(u_zero, 512)
    M1, M2, _ = prop.monodromy_batch(np.array([mu1]), units=2)
    scale = abs(M1[0, 1, 0] * M2[0, 2, 0]) + abs(M1[0, 2, 0] * M2[0, 1, 0])
    assert abs(F) <= 1e-9 * scale


def test_free_determinant_closed_form(u_zero):
    F = three_point_determinant(u_zero, 1.0, steps=512)
    ref = oracles.free_three_point(1.0)
    assert abs(F - ref) < 1e-9 * abs(ref)


@pytest.mark.parametrize("lam", [2.0, -10.0, 30.0, -5.0 + 3.0j])
def test_determinant_matches_exponential_basis(u_zero, lam):
    F = three_point_determinant(u_zero, lam, steps=512)
    ref = oracles.free_three_point(lam)
    assert abs(F - ref) < 1e-9 * max(1.0, abs(ref))


def test_imaginary_part_vanishes_for_real_lambda(u_example):
    F = three_point_determinant(u_example, complex(33.3), steps=512)
    assert abs(np.imag(F)) <= 1e-10 * (1.0 + abs(F))


def test_locate_free_field(u_zero):
    for n in (1, -2):
        eig = locate_mu(u_zero, n, steps=512)
        assert eig.mu == pytest.approx(oracles.free_mu(n), rel=1e-8)


def test_locate_against_collocation(u_example):
    eig = locate_mu(u_example, 1, steps=2048)
    ref = oracles.collocation_mu(u_example, K=256, target=eig.mu)
    assert abs(eig.mu - ref) <= 1e-6 * abs(ref)


def test_mu_in_trace_interval(u_example):
    for n in (1, -1, 2):
        eig = locate_mu(u_example, n, steps=512)
        lo, hi = trace_interval(n)
        assert lo < eig.mu < hi


def test_reflect_star_symmetry():
    # mu_{-n}(u) = -mu_n(u*^-) for n = 1..4
    rng = np.random.default_rng(31)
    co = lambda: rng.uniform(-1, 1, 2)
    u = CoefficientPair(TrigSeries(co(), co()), TrigSeries(co(), co()))
    s = 0.04 / u.ball_norm()
    u = CoefficientPair(s * u.p, s * u.q)
    usr = u.star_reflect()
    for n in range(1, 5):
        a = locate_mu(u, -n, steps=512).mu
        b = locate_mu(usr, n, steps=512).mu
        assert abs(a + b) <= 1e-6 * (1.0 + abs(a))


def test_containment_with_slack(u_example):
    for n in (1, -1, 2, 3):
        mu, bp, slack = containment_slack(u_example, n, steps=512)
        assert slack <= 1e-8
        assert bp.n == n


def test_eigenfunction_boundary_residuals(u_example):
    eig = locate_mu(u_example, 1, steps=2048)
    x, traj = eigenfunction(u_example, eig.mu, steps=2048)
    assert traj[0, 0] == 0.0
    assert traj[0, 1] == 1.0
    i1 = np.argmin(np.abs(x - 1.0))
    assert abs(x[i1] - 1.0) < 1e-12
    assert abs(traj[i1, 0]) <= 1e-7
    assert abs(traj[-1, 0]) <= 1e-7


def test_eigen_data_consistency(u_example):
    # y'(1) and y''(0) reported on the eigen object match a direct integration
    eig = locate_mu(u_example, 1, steps=2048)
    y = integrate_third_order(u_example, eig.mu, [0.0, 1.0, eig.y_second_zero],
                              x_end=1.0, steps=2048)
    assert np.real(y[1]) == pytest.approx(eig.y1_prime, rel=1e-9)
    assert eig.residual < 1e-9


def test_count_verification_default_on(u_example):
    eig = locate_mu(u_example, 2, steps=512, verify_count=True)
    assert eig.n == 2
