"""Hill reduction: Floquet solution, transformed potential, spectra, gap map."""

import numpy as np
import pytest

import oracles
from bqspec.hill_side import (E_to_lam, floquet_solution, gap_coordinates,
                              hill_spectra, hill_window, lam_to_E, potential_V,
                              transform_residual, transform_solution)
from bqspec.ode_engine import monodromy2
from bqspec.periodic_fn import CoefficientPair, TrigSeries
from bqspec.floquet_surface import locate_branch_points, select_tau
from bqspec.three_point import locate_mu


def test_energy_lambda_maps_inverse():
    for E in (5.0, 20.0, 100.0):
        assert lam_to_E(E_to_lam(E)) == pytest.approx(E, rel=1e-14)


def test_hill_window_geometry():
    lo, hi = hill_window(2)
    assert lo == pytest.approx((2 * np.pi - 1.0) ** 2, rel=1e-15)
    assert hi == pytest.approx((2 * np.pi + 1.0) ** 2, rel=1e-15)


def test_floquet_free_small_lambda(u_zero):
    sol = floquet_solution(u_zero, 8.0, steps=512)
    assert sol.tau == pytest.approx(np.e**2, rel=1e-9)
    assert np.allclose(sol.init, [1.0, 2.0, 4.0], rtol=1e-9)
    # f(x) = e^{2x} along the whole trajectory
    assert np.max(np.abs(sol.states[:, 0] - np.exp(2.0 * sol.x))) < 1e-8 * np.e**4


def test_floquet_free_large_lambda(u_zero):
    sol = floquet_solution(u_zero, 1000.0, steps=512)
    i1 = np.argmin(np.abs(sol.x - 1.0))
    assert sol.states[i1, 0] == pytest.approx(np.e**10, rel=1e-8)


def test_floquet_eigenvector_residual(u_pcos):
    sol = floquet_solution(u_pcos, 100.0, steps=512)
    assert sol.eig_residual <= 1e-8


def test_floquet_multiplier_periodicity(u_example):
    sol = floquet_solution(u_example, 90.0, steps=512)
    i1 = np.argmin(np.abs(sol.x - 1.0))
    # f(x+1) = tau f(x) at x = 0, and again at x = 1 (trajectory runs to 2)
    assert np.max(np.abs(sol.states[i1] - sol.tau * sol.init)) \
        <= 1e-8 * sol.tau * np.max(np.abs(sol.init))
    assert sol.states[-1, 0] == pytest.approx(sol.tau**2, rel=1e-8)
    assert sol.fmin > 0.0


def test_potential_free_field_vanishes(u_zero):
    x = np.linspace(0.0, 1.0, 64, endpoint=False)
    for E in (5.0, 20.0, 100.0):
        V = potential_V(u_zero, E, steps=512)
        assert np.max(np.abs(V(x))) < 1e-8


def test_potential_periodicity(u_example):
    V = potential_V(u_example, 12.0, steps=512)
    assert abs(V(np.array([1.3]))[0] - V(np.array([0.3]))[0]) < 1e-8


def test_potential_first_order_shape():
    # V + 2p is O(delta) with the hand-derived shape; the remainder is O(delta^2).
    # Note sup|V + 2p| = 1.5275 delta -- the first-order correction on top of
    # -2p is NOT small (see the decisions ledger on this example's size).
    x = np.linspace(0.0, 1.0, 64, endpoint=False)
    for delta in (0.01, 0.005):
        u = CoefficientPair(TrigSeries([delta], []), TrigSeries([], []))
        V = potential_V(u, np.pi**2, steps=512)
        vp2 = V(x) + 2.0 * u.p(x)
        resid = np.max(np.abs(vp2 - delta * oracles.first_order_hill_shape(x)))
        assert resid <= 0.03 * delta**2
        assert np.max(np.abs(vp2)) == pytest.approx(1.5275 * delta, rel=1e-3)


def test_potential_rejects_bad_energy(u_zero):
    from bqspec.errors import DomainError
    with pytest.raises(DomainError):
        potential_V(u_zero, 0.5)


def test_transform_residual_free(u_zero):
    # the exponential-cancellation floor is ~1.5e-7 at E = 10 even for u = 0
    assert transform_residual(u_zero, 10.0, steps=512) < 1e-6
    assert transform_residual(u_zero, 2.0, steps=512) < 1e-8


def test_transform_residual_nonzero_field():
    u = CoefficientPair(TrigSeries([0.008], [0.004]), TrigSeries([-0.004], [0.008]))
    assert transform_residual(u, 10.0, steps=512, n_probe=64) <= 1e-6


def test_transform_solution_shape(u_pcos):
    x, w = transform_solution(u_pcos, E_to_lam(10.0), [0.0, 1.0, 0.0], steps=512)
    assert x[0] == 0.0 and x[-1] == 2.0
    assert w.shape == x.shape


def test_hill_spectra_free(u_zero):
    h = hill_spectra(u_zero, [2], steps=512)[0]
    want = 4.0 * np.pi**2
    assert h.E_minus == pytest.approx(want, rel=1e-8)
    assert h.E_plus == pytest.approx(want, rel=1e-8)
    assert h.gm == pytest.approx(want, rel=1e-8)
    assert h.closed


def test_hill_spectra_identities(u_example):
    # the two-pipeline cross-check at n = 1 (acceptance covers n = 1..4)
    h = hill_spectra(u_example, [1], steps=512)[0]
    bp = locate_branch_points(u_example, 1, steps=512)
    assert h.E_minus == pytest.approx(0.75 * bp.lam_minus ** (2 / 3), rel=1e-6)
    assert h.E_plus == pytest.approx(0.75 * bp.lam_plus ** (2 / 3), rel=1e-6)
    mu_star = locate_mu(u_example.star(), -1, steps=512).mu
    assert h.gm == pytest.approx(0.75 * (-mu_star) ** (2 / 3), rel=1e-6)


def test_hill_phi_prime_product_identity(u_example):
    # phi'(1, m_n) = y'_{-n}(1, u*) tau^{-1/2}(-mu_{-n}(u*), u)
    h = hill_spectra(u_example, [1], steps=512)[0]
    eig = locate_mu(u_example.star(), -1, steps=512)
    tau = select_tau(u_example, -eig.mu, steps=512)
    assert tau > 0.0          # dominant multiplier is real positive here
    rhs = eig.y1_prime * tau ** (-0.5)
    assert h.phi1_prime == pytest.approx(rhs, rel=1e-6)


def test_hill_spectra_invariants(u_example):
    for h in hill_spectra(u_example, [1, 2, 3], steps=512):
        lo, hi = hill_window(h.n)
        assert lo < h.E_minus <= h.E_plus < hi
        # a closed-flagged gap hides sub-noise openings; the Dirichlet point
        # may sit anywhere inside the hidden band.  edge_sigma is the scale
        # of that band from the vertex curvature model, not a hard bound --
        # borderline-closed gaps (excess right at the 30-noise threshold)
        # overshoot it by a few percent, hence the factor 2.
        slack = 2.0 * h.edge_sigma + 1e-8
        assert h.E_minus - slack <= h.gm <= h.E_plus + slack
        # the 2-periodic eigenvalue condition on the Hill side
        V = potential_V(u_example, h.E_minus, steps=512)
        m = monodromy2(V, h.E_minus, steps=512)
        assert m.discriminant() ** 2 == pytest.approx(1.0, abs=1e-8)


def test_gap_coordinates_zero_potential():
    for g in gap_coordinates(None, 3, steps=512):
        assert abs(g.psi_c) < 1e-10
        assert abs(g.psi_s) < 1e-10
        assert g.closed


def test_gap_circle_identity():
    v = TrigSeries([0.2], [])
    g = gap_coordinates(v, 1, steps=512)[0]
    assert np.hypot(g.psi_c, g.psi_s) == pytest.approx(0.5 * g.width, abs=1e-8)
    assert g.width == pytest.approx(0.2, rel=1e-2)   # first-order opening = amp


def test_gap_opening_pattern_second_harmonic():
    # v = 0.2 cos 4pi x opens the second gap at first order, not the first
    v = TrigSeries([0.0, 0.2], [])
    gaps = gap_coordinates(v, 2, steps=512)
    assert np.hypot(gaps[0].psi_c, gaps[0].psi_s) <= 1e-3
    assert np.hypot(gaps[1].psi_c, gaps[1].psi_s) >= 0.05


def test_gap_dirichlet_is_phi_zero():
    v = TrigSeries([0.2], [])
    g = gap_coordinates(v, 1, steps=512)[0]
    m = monodromy2(v, g.dirichlet, steps=512)
    assert abs(m.phi1) < 1e-9 * (1.0 + abs(m.phi1_prime))
