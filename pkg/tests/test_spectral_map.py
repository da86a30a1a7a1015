"""Gap-coordinate map g and its Newton inversion."""

import numpy as np
import pytest

from bqspec.errors import NoConvergence
from bqspec.floquet_surface import locate_branch_points
from bqspec.periodic_fn import CoefficientPair, TrigSeries
from bqspec.spectral_map import (GapDatum, SpectralData, coefficients_to_vector,
                                 forward_map, invert_map,
                                 vector_to_coefficients)
from bqspec.three_point import locate_mu


def test_forward_zero_field(u_zero):
    sd = forward_map(u_zero, 2, steps=512)
    assert np.max(np.abs(sd.flatten())) < 1e-8
    for n in (1, -1, 2, -2):
        assert sd.datum(n).closed


def test_forward_resolution_doubling(u_pcos):
    a = forward_map(u_pcos, 2, steps=512).flatten()
    b = forward_map(u_pcos, 2, steps=1024).flatten()
    assert np.max(np.abs(a - b)) <= 1e-7
    # |g_{+-1}| carries the first harmonic; the n = 2 data is second order
    assert np.max(np.abs(a[:4])) > 10.0 * np.max(np.abs(a[4:]))


def test_forward_manual_assembly(u_example):
    # rebuild g_c1 from the published definition with the standalone locators
    sd = forward_map(u_example, 1, steps=512)
    bp = locate_branch_points(u_example, 1, steps=512, closed_rtol=1e-12)
    mu_star = locate_mu(u_example.star(), -1, steps=512).mu
    gc = 0.75 * (0.5 * (bp.lam_plus ** (2 / 3) + bp.lam_minus ** (2 / 3))
                 - (-mu_star) ** (2 / 3))
    assert sd.datum(1).g_c == pytest.approx(gc, abs=1e-9)
    gamma = 0.75 * (bp.lam_plus ** (2 / 3) - bp.lam_minus ** (2 / 3))
    assert sd.datum(1).gamma == pytest.approx(gamma, abs=1e-9)


def test_circle_bound(u_example):
    sd = forward_map(u_example, 2, steps=512)
    for n in (1, -1, 2, -2):
        d = sd.datum(n)
        assert abs(d.g_s) <= 0.5 * d.gamma + 1e-8


def test_negative_index_is_starred_reflection(u_example):
    sd = forward_map(u_example, 2, steps=512)
    sd_sr = forward_map(u_example.star_reflect(), 2, steps=512)
    for n in (1, 2):
        assert sd.datum(-n).g_c == sd_sr.datum(n).g_c   # bit-exact by routing
        assert sd.datum(-n).g_s == sd_sr.datum(n).g_s


def test_spectral_data_json_round_trip(u_example):
    sd = forward_map(u_example, 2, steps=512)
    doc = sd.to_dict()
    back = SpectralData.from_dict(doc)
    assert np.array_equal(back.flatten(), sd.flatten())


def test_gap_datum_rejects_unknown_fields():
    with pytest.raises(ValueError):
        GapDatum.from_dict({"n": 1, "g_c": 0.0, "g_s": 0.0, "phase": 1.0})


def test_spectral_data_requires_full_index_set():
    doc = {"n_max": 2, "data": [{"n": 1, "g_c": 0.0, "g_s": 0.0},
                                {"n": -1, "g_c": 0.0, "g_s": 0.0}]}
    with pytest.raises(ValueError):
        SpectralData.from_dict(doc)


def test_flatten_order(u_example):
    sd = forward_map(u_example, 2, steps=512)
    v = sd.flatten()
    assert v[0] == sd.datum(1).g_c
    assert v[1] == sd.datum(1).g_s
    assert v[2] == sd.datum(-1).g_c
    assert v[5] == sd.datum(2).g_s
    assert v.size == 8


def test_vector_coefficient_round_trip():
    x = np.arange(1.0, 9.0)
    u = vector_to_coefficients(x, 2)
    assert np.array_equal(coefficients_to_vector(u, 2), x)


def test_invert_zero_target(u_zero):
    u, info = invert_map(SpectralData.zero_target(2), full_output=True)
    assert info["iterations"] == 0
    assert u.is_zero()


def test_invert_round_trip_example():
    # the published example: two low harmonics, started from zero
    u_bar = CoefficientPair(TrigSeries([0.03], []), TrigSeries([], [0.02]))
    target = forward_map(u_bar, 1, steps=512)
    u = invert_map(target)
    assert np.max(np.abs(u.p.cos_coeffs - u_bar.p.cos_coeffs)) <= 1e-6
    assert np.max(np.abs(u.q.sin_coeffs - [0.02])) <= 1e-6


def test_invert_exact_dimension_three_harmonics():
    rng = np.random.default_rng(17)
    co = lambda: rng.uniform(-1, 1, 3)
    u_bar = CoefficientPair(TrigSeries(co(), co()), TrigSeries(co(), co()))
    s = 0.04 / u_bar.ball_norm()
    u_bar = CoefficientPair(s * u_bar.p, s * u_bar.q)
    target = forward_map(u_bar, 3, steps=512)
    u, info = invert_map(target, full_output=True)
    got = coefficients_to_vector(u, 3)
    want = coefficients_to_vector(u_bar, 3)
    assert np.max(np.abs(got - want)) <= 1e-6
    assert info["residual"] <= 1e-8


def test_forward_scaling_quadratic(u_example):
    g1 = forward_map(u_example, 2, steps=512).flatten()

    def g_of(t):
        ut = CoefficientPair(t * u_example.p, t * u_example.q)
        return forward_map(ut, 2, steps=512).flatten()
    # g(tu) - t g(u) = (t^2 - t) Q(u) + O(t^3): the deviation from linearity
    # scales like |t^2 - t|, and the extracted Q must agree across t
    d_half = np.linalg.norm(g_of(0.5) - 0.5 * g1)
    d_quarter = np.linalg.norm(g_of(0.25) - 0.25 * g1)
    q_half = d_half / abs(0.5 ** 2 - 0.5)
    q_quarter = d_quarter / abs(0.25 ** 2 - 0.25)
    assert q_half > 1e-7          # the quadratic term is genuinely there
    assert abs(q_quarter / q_half - 1.0) < 0.05


def test_jacobian_smallest_singular_value(seeded_fields):
    # local injectivity evidence at two of the seeded fields (n_max = 2)
    h = 1e-3
    for u in seeded_fields[:2]:
        x0 = coefficients_to_vector(u, 2)
        cols = []
        for j in range(x0.size):
            xp, xm = x0.copy(), x0.copy()
            xp[j] += h * (1.0 + abs(x0[j]))
            xm[j] -= h * (1.0 + abs(x0[j]))
            gp = forward_map(vector_to_coefficients(xp, 2), 2, steps=512).flatten()
            gm = forward_map(vector_to_coefficients(xm, 2), 2, steps=512).flatten()
            cols.append((gp - gm) / (xp[j] - xm[j]))
        J = np.stack(cols, axis=1)
        smin = np.linalg.svd(J, compute_uv=False)[-1]
        assert smin >= 1e-4


def test_invert_reports_no_convergence():
    target = SpectralData.zero_target(1)
    target.data[1].g_c = 0.5   # far outside the image of the small ball
    with pytest.raises(NoConvergence) as exc:
        invert_map(target, max_iter=2)
    assert len(exc.value.history) >= 1
