"""Shared fixtures: the seeded field set and a one-time kernel warmup."""

import numpy as np
import pytest

from bqspec.periodic_fn import CoefficientPair, TrigSeries


def scaled_pair(rng, n_harm, ball):
    """Random pair with n_harm harmonics, rescaled to an exact ball norm."""
    co = lambda: rng.uniform(-1.0, 1.0, n_harm)
    u = CoefficientPair(TrigSeries(co(), co()), TrigSeries(co(), co()))
    s = ball / u.ball_norm()
    return CoefficientPair(s * u.p, s * u.q)


@pytest.fixture(scope="session")
def seeded_fields():
    """The five random in-ball fields shared by the acceptance criteria."""
    rng = np.random.default_rng(7712)
    return [scaled_pair(rng, 3, 0.05) for _ in range(5)]


@pytest.fixture
def u_zero():
    return CoefficientPair(TrigSeries([], []), TrigSeries([], []))


@pytest.fixture
def u_example():
    # the (0.05 cos 2pi x, 0.05 sin 2pi x) field most module examples use
    return CoefficientPair(TrigSeries([0.05], []), TrigSeries([], [0.05]))


@pytest.fixture
def u_pcos():
    return CoefficientPair(TrigSeries([0.05], []), TrigSeries([], []))


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    """Compile every numba kernel once so per-test timings mean something."""
    from bqspec.ode_engine import HillPropagator, ThirdOrderPropagator

    u = CoefficientPair(TrigSeries([0.01], []), TrigSeries([], []))
    prop = ThirdOrderPropagator(u, 32)
    prop.monodromy_batch(np.array([5.0]), units=2)
    prop.monodromy_batch(np.array([5.0 + 1.0j]), units=2)
    prop.trajectory_batch(np.array([5.0]), np.array([0.0, 1.0, 0.0]), units=2)
    hill = HillPropagator(TrigSeries([0.1], []), 32)
    hill.monodromy_batch(np.array([2.0]))
    hill.monodromy_batch(np.array([2.0 + 1.0j]))
    HillPropagator(None, 32).monodromy_batch(np.array([2.0]))
