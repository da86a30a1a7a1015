"""Coefficient-space basics: evaluation, derivative, norms, symmetries, JSON."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bqspec.errors import BallNormWarning
from bqspec.periodic_fn import (CoefficientPair, TrigSeries, apply_symmetry,
                                ball_norm, check_ball, dump_coefficients,
                                load_coefficients)


def test_zero_series_evaluates_to_zero():
    assert TrigSeries([], [])(0.37) == 0.0


def test_pure_cos_at_half():
    assert TrigSeries([1.0], [])(0.5) == pytest.approx(-1.0, abs=1e-15)


def test_pure_sin_at_quarter():
    assert TrigSeries([], [1.0])(0.25) == pytest.approx(1.0, abs=1e-15)


def test_derivative_of_cos():
    d = TrigSeries([1.0], []).derivative()
    # cos 2pi x -> -2pi sin 2pi x
    assert d.cos_coeffs[0] == 0.0
    assert d.sin_coeffs[0] == pytest.approx(-2.0 * np.pi, rel=1e-15)


def test_derivative_of_zero():
    d = TrigSeries([], []).derivative()
    assert d.order == 0


def test_derivative_of_sin_4pi():
    d = TrigSeries([], [0.0, 1.0]).derivative()
    # sin 4pi x -> 4pi cos 4pi x
    assert d.cos_coeffs[1] == pytest.approx(4.0 * np.pi, rel=1e-15)
    assert d.sin_coeffs[1] == 0.0


def test_ball_norm_examples(u_zero):
    assert ball_norm(u_zero) == 0.0
    u1 = CoefficientPair(TrigSeries([0.01], []), TrigSeries([], []))
    assert ball_norm(u1) == pytest.approx(2.0 * np.pi * 0.01 / np.sqrt(2), rel=1e-12)
    u2 = CoefficientPair(TrigSeries([], []), TrigSeries([], [0.02]))
    assert ball_norm(u2) == pytest.approx(0.02 / np.sqrt(2), rel=1e-12)


def test_star_flips_q_only():
    u = CoefficientPair(TrigSeries([0.3], [0.1]), TrigSeries([], [1.0]))
    v = apply_symmetry(u, "star")
    assert np.array_equal(v.p.cos_coeffs, u.p.cos_coeffs)
    assert np.array_equal(v.p.sin_coeffs, u.p.sin_coeffs)
    assert np.array_equal(v.q.sin_coeffs, [-1.0])


def test_reflect_on_sin():
    u = CoefficientPair(TrigSeries([], [1.0]), TrigSeries([], []))
    v = apply_symmetry(u, "reflect")
    # sin 2pi n (1 - x) = -sin 2pi n x
    assert np.array_equal(v.p.sin_coeffs, [-1.0])
    x = np.linspace(0, 1, 7)
    assert np.allclose(v.p(x), u.p(1.0 - x), atol=1e-15)


def test_unknown_symmetry_rejected(u_example):
    with pytest.raises(ValueError):
        apply_symmetry(u_example, "rotate")


def test_symmetries_are_involutions():
    rng = np.random.default_rng(5)
    for _ in range(10):
        u = CoefficientPair(TrigSeries(rng.uniform(-1, 1, 4), rng.uniform(-1, 1, 4)),
                            TrigSeries(rng.uniform(-1, 1, 4), rng.uniform(-1, 1, 4)))
        for which in ("star", "reflect", "star_reflect"):
            v = apply_symmetry(apply_symmetry(u, which), which)
            for got, want in ((v.p, u.p), (v.q, u.q)):
                # exact: the involutions only flip signs
                assert np.array_equal(got.cos_coeffs, want.cos_coeffs)
                assert np.array_equal(got.sin_coeffs, want.sin_coeffs)


def test_star_reflect_composes():
    rng = np.random.default_rng(6)
    u = CoefficientPair(TrigSeries(rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)),
                        TrigSeries(rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)))
    v = apply_symmetry(apply_symmetry(u, "star"), "reflect")
    w = apply_symmetry(u, "star_reflect")
    assert np.array_equal(v.p.sin_coeffs, w.p.sin_coeffs)
    assert np.array_equal(v.q.cos_coeffs, w.q.cos_coeffs)
    assert np.array_equal(v.q.sin_coeffs, w.q.sin_coeffs)


def test_parseval_vs_trapezoid():
    rng = np.random.default_rng(11)
    u = CoefficientPair(TrigSeries(rng.uniform(-1, 1, 6), rng.uniform(-1, 1, 6)),
                        TrigSeries(rng.uniform(-1, 1, 6), rng.uniform(-1, 1, 6)))
    x = np.arange(4096) / 4096.0
    quad = np.mean(u.p.derivative()(x) ** 2 + u.q(x) ** 2)
    assert ball_norm(u) ** 2 == pytest.approx(quad, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_derivative_matches_finite_differences(order, seed):
    rng = np.random.default_rng(seed)
    f = TrigSeries(rng.uniform(-1, 1, order), rng.uniform(-1, 1, order))
    df = f.derivative()
    x = rng.uniform(0, 1, 16)
    h = 1e-5
    fd = (f(x + h) - f(x - h)) / (2 * h)
    # central-difference truncation is f'''(x) h^2 / 6; budget it explicitly
    # so high harmonics (f''' ~ (2 pi k)^3) don't fail a flat tolerance
    k = np.arange(1, order + 1)
    third = np.sum((2 * np.pi * k) ** 3 * (np.abs(f.cos_coeffs) + np.abs(f.sin_coeffs)))
    tol = 1.25 * third * h ** 2 / 6.0 + 1e-9 * (1.0 + third * h)
    assert np.max(np.abs(df(x) - fd)) < tol


def test_json_round_trip(tmp_path, u_example):
    path = tmp_path / "u.json"
    dump_coefficients(u_example, path)
    v = load_coefficients(path)
    assert np.array_equal(v.p.cos_coeffs, u_example.p.cos_coeffs)
    assert np.array_equal(v.q.sin_coeffs, u_example.q.sin_coeffs)


def test_absent_arrays_mean_zero():
    u = load_coefficients({"p": {"cos": [0.1]}, "q": {}})
    assert u.p.cos_coeffs[0] == 0.1
    assert u.q.order == 0


def test_const_field_rejected():
    with pytest.raises(ValueError):
        load_coefficients({"p": {"cos": [0.1], "const": 1.0}, "q": {}})


def test_unknown_field_rejected():
    with pytest.raises(ValueError):
        load_coefficients({"p": {"cos": [0.1]}, "q": {}, "weights": []})


def test_json_file_shape(tmp_path, u_example):
    path = tmp_path / "u.json"
    dump_coefficients(u_example, path)
    doc = json.loads(path.read_text())
    assert set(doc) == {"p", "q"}
    assert doc["p"]["cos"] == [0.05]


def test_ball_warning_fires():
    big = CoefficientPair(TrigSeries([2.0], []), TrigSeries([], []))
    with pytest.warns(BallNormWarning):
        check_ball(big)


def test_ball_no_warning_inside(recwarn):
    # note u_example itself is NOT inside: its p-part carries the 2 pi
    # derivative weight (ball norm 0.22)
    small = CoefficientPair(TrigSeries([0.01], []), TrigSeries([], [0.01]))
    check_ball(small)
    assert not [w for w in recwarn if issubclass(w.category, BallNormWarning)]
