"""Monodromy and initial-value solves for the third-order operator.

The operator is  H y = y''' + 2 p y' + (p' + q) y  acting on 1-periodic
coefficients; H y = lam y is integrated as a first-order companion system
with a fixed-step RK8 scheme (DOP853 core, no adaptivity, so runs are
bitwise reproducible).  The monodromy matrix follows the convention
M[j, k] = phi_{j+1}^{(k)}(1, lam) where phi_j are the solutions normalized
by phi_j^{(k-1)}(0) = delta_jk -- i.e. M is the transpose of the fundamental
matrix at x = 1.

Coefficient values at every RK stage abscissa are tabulated once per
(coefficient pair, step count); a batch of lambdas then reuses the tables,
which is where all the speed comes from.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._tableau import C
from .errors import NonFinite
from .periodic_fn import CoefficientPair, TrigSeries

DEFAULT_STEPS = 2048        # steps per unit period for the one-off public API
STIFF_LAMBDA = 1e4          # |lam| above which the step count is doubled


def _stage_grid(steps, h):
    """x-coordinates of every stage abscissa, shape (steps, n_stages)."""
    m = np.arange(steps)[:, None]
    return (m + C[None, :]) * h


def _tabulate(fns, grid):
    """Evaluate a list of scalar functions on the stage grid -> (ntab, steps, stages)."""
    out = np.empty((len(fns), grid.shape[0], grid.shape[1]))
    flat = grid.ravel()
    for t, f in enumerate(fns):
        out[t] = np.asarray(f(flat), dtype=float).reshape(grid.shape)
    return out


class ThirdOrderPropagator:
    """Batched monodromy/trajectory solver bound to coefficient pairs.

    pairs: a CoefficientPair or list of them (a "table" per pair — symmetry
    variants of the same u are typically loaded together so searches over
    several variants batch into single kernel calls).
    """

    def __init__(self, pairs, steps_per_unit=DEFAULT_STEPS):
        if isinstance(pairs, CoefficientPair):
            pairs = [pairs]
        self.pairs = list(pairs)
        self.steps = int(steps_per_unit)
        self.h = 1.0 / self.steps
        grid = _stage_grid(self.steps, self.h)
        self.P = _tabulate([u.p for u in self.pairs], grid)
        self.DP = _tabulate([u.p.derivative() for u in self.pairs], grid)
        self.Q = _tabulate([u.q for u in self.pairs], grid)
        self._fine = None  # lazily built 2x-step propagator for large |lam|

    @property
    def n_tables(self):
        return len(self.pairs)

    def _fine_prop(self):
        if self._fine is None:
            self._fine = ThirdOrderPropagator(self.pairs, 2 * self.steps)
        return self._fine

    def _prep(self, lam, tab):
        lam = np.atleast_1d(np.asarray(lam))
        if np.iscomplexobj(lam):
            lam = lam.astype(np.complex128)
            dtype = np.complex128
        else:
            lam = lam.astype(np.float64)
            dtype = np.float64
        if tab is None:
            tabsel = np.zeros(lam.shape[0], dtype=np.int64)
        else:
            tabsel = np.broadcast_to(np.asarray(tab, dtype=np.int64), lam.shape).copy()
        return lam, tabsel, dtype

    def monodromy_batch(self, lam, tab=None, units=1):
        """Monodromy matrices for a batch of lambdas.

        Returns (M1, M2, ok); M2 is filled only when units == 2.  Items with
        |lam| > STIFF_LAMBDA are rerouted through a double-resolution table.
        """
        lam, tabsel, dtype = self._prep(lam, tab)
        n = lam.shape[0]
        M1 = np.empty((n, 3, 3), dtype=dtype)
        M2 = np.empty((n, 3, 3), dtype=dtype) if units == 2 else M1
        ok = np.empty(n, dtype=np.uint8)
        stiff = np.abs(lam) > STIFF_LAMBDA
        if stiff.any():
            idx = np.nonzero(stiff)[0]
            rest = np.nonzero(~stiff)[0]
            f1, f2, fok = self._fine_prop().monodromy_batch(lam[idx], tabsel[idx], units)
            M1[idx], ok[idx] = f1, fok
            if units == 2:
                M2[idx] = f2
            if rest.size:
                _kernels.mono3_kernel(lam[rest], tabsel[rest], self.P, self.DP, self.Q,
                                      self.steps, units, self.h,
                                      M1v := np.empty((rest.size, 3, 3), dtype=dtype),
                                      M2v := (np.empty((rest.size, 3, 3), dtype=dtype)
                                              if units == 2 else M1v),
                                      okv := np.empty(rest.size, dtype=np.uint8))
                M1[rest], ok[rest] = M1v, okv
                if units == 2:
                    M2[rest] = M2v
            return M1, M2, ok
        _kernels.mono3_kernel(lam, tabsel, self.P, self.DP, self.Q,
                              self.steps, units, self.h, M1, M2, ok)
        return M1, M2, ok

    def trajectory_batch(self, lam, y0, tab=None, units=1):
        """States (y, y', y'') at all step ends; shape (n, units*steps + 1, 3)."""
        lam, tabsel, dtype = self._prep(lam, tab)
        y0 = np.asarray(y0)
        if np.iscomplexobj(y0):
            dtype = np.complex128
            lam = lam.astype(np.complex128)
        y0 = np.broadcast_to(y0.astype(dtype), (lam.shape[0], 3)).copy()
        traj = np.empty((lam.shape[0], units * self.steps + 1, 3), dtype=dtype)
        ok = np.empty(lam.shape[0], dtype=np.uint8)
        _kernels.traj3_kernel(lam, tabsel, self.P, self.DP, self.Q,
                              self.steps, units, self.h, y0, traj, ok)
        return traj, ok

    def dirichlet_shoot_batch(self, lam, tab=None):
        """Renormalized 3-point shooting function G(lam); real lam only.

        G has the zeros and sign changes of the 3-point determinant F but is
        computed at O(1) scale with no exponential cancellation, so roots can
        be located to full precision on the positive axis too.
        """
        lam, tabsel, dtype = self._prep(lam, tab)
        if dtype == np.complex128:
            raise ValueError("renormalized shooting is restricted to real lambda")
        n = lam.shape[0]
        G = np.empty(n)
        ok = np.empty(n, dtype=np.uint8)
        stiff = np.abs(lam) > STIFF_LAMBDA
        if stiff.any():
            idx = np.nonzero(stiff)[0]
            rest = np.nonzero(~stiff)[0]
            G[idx], ok[idx] = self._fine_prop().dirichlet_shoot_batch(lam[idx], tabsel[idx])
            if rest.size:
                _kernels.dirichlet_shoot_kernel(lam[rest], tabsel[rest], self.P, self.DP,
                                                self.Q, self.steps, self.h,
                                                Gv := np.empty(rest.size),
                                                okv := np.empty(rest.size, dtype=np.uint8))
                G[rest], ok[rest] = Gv, okv
            return G, ok
        _kernels.dirichlet_shoot_kernel(lam, tabsel, self.P, self.DP, self.Q,
                                        self.steps, self.h, G, ok)
        return G, ok

    def coupled_batch(self, lam, f0, tab=None):
        """Integrate the Floquet factor together with its induced Hill system.

        Real lambda only.  Returns (W, f1, fmin, ok): the 2x2 fundamental
        matrix of -u'' + (V - E)u = 0 at x = 1, the factor state at x = 1,
        and the minimum of the factor over step ends.
        """
        lam, tabsel, dtype = self._prep(lam, tab)
        if dtype == np.complex128:
            raise ValueError("coupled integration is restricted to real lambda")
        f0 = np.broadcast_to(np.asarray(f0, dtype=float), (lam.shape[0], 3)).copy()
        n = lam.shape[0]
        W = np.empty((n, 2, 2))
        f1 = np.empty((n, 3))
        fmin = np.empty(n)
        ok = np.empty(n, dtype=np.uint8)
        stiff = np.abs(lam) > STIFF_LAMBDA
        if stiff.any():
            idx = np.nonzero(stiff)[0]
            rest = np.nonzero(~stiff)[0]
            W[idx], f1[idx], fmin[idx], ok[idx] = \
                self._fine_prop().coupled_batch(lam[idx], f0[idx], tabsel[idx])
            if rest.size:
                _kernels.coupled_hill_kernel(lam[rest], tabsel[rest], self.P, self.DP,
                                             self.Q, self.steps, self.h, f0[rest],
                                             Wv := np.empty((rest.size, 2, 2)),
                                             f1v := np.empty((rest.size, 3)),
                                             fmv := np.empty(rest.size),
                                             okv := np.empty(rest.size, dtype=np.uint8))
                W[rest], f1[rest], fmin[rest], ok[rest] = Wv, f1v, fmv, okv
            return W, f1, fmin, ok
        _kernels.coupled_hill_kernel(lam, tabsel, self.P, self.DP, self.Q,
                                     self.steps, self.h, f0, W, f1, fmin, ok)
        return W, f1, fmin, ok


class HillPropagator:
    """Fundamental 2x2 solver for -u'' + V u = E u with tabulated potential.

    V may be a TrigSeries, any callable of x, or None for the free case.
    """

    def __init__(self, potential, steps_per_unit=DEFAULT_STEPS):
        self.steps = int(steps_per_unit)
        self.h = 1.0 / self.steps
        grid = _stage_grid(self.steps, self.h)
        if potential is None:
            vals = np.zeros(grid.shape)
        else:
            vals = np.asarray(potential(grid.ravel()), dtype=float).reshape(grid.shape)
        self.V = vals[None, :, :]

    def monodromy_batch(self, E):
        E = np.atleast_1d(np.asarray(E))
        dtype = np.complex128 if np.iscomplexobj(E) else np.float64
        E = E.astype(dtype)
        tabsel = np.zeros(E.shape[0], dtype=np.int64)
        W = np.empty((E.shape[0], 2, 2), dtype=dtype)
        ok = np.empty(E.shape[0], dtype=np.uint8)
        _kernels.hill2_kernel(E, tabsel, self.V, self.steps, self.h, W, ok)
        return W, ok


@dataclass
class Monodromy3:
    """Third-order monodromy at x = 1 (and x = 2 when computed)."""

    lam: complex
    M: np.ndarray
    M2: np.ndarray = None

    def det_defect(self):
        """|det M - 1|; the Wronskian is constant so this is pure solver error."""
        return abs(np.linalg.det(self.M) - 1.0)

    def trace(self):
        return self.M.trace()


@dataclass
class Monodromy2:
    """Hill fundamental data at x = 1: [[theta, phi], [theta', phi']]."""

    E: complex
    W: np.ndarray = field(repr=False)

    @property
    def theta1(self):
        return self.W[0, 0]

    @property
    def phi1(self):
        return self.W[0, 1]

    @property
    def theta1_prime(self):
        return self.W[1, 0]

    @property
    def phi1_prime(self):
        return self.W[1, 1]

    def discriminant(self):
        """Delta(E) = (theta(1) + phi'(1)) / 2."""
        return 0.5 * (self.W[0, 0] + self.W[1, 1])

    def wronskian_defect(self):
        return abs(self.W[0, 0] * self.W[1, 1] - self.W[0, 1] * self.W[1, 0] - 1.0)


def _check_ok(ok, lam):
    if not np.all(ok == 1):
        bad = np.asarray(lam).ravel()[np.nonzero(ok != 1)[0][:3]]
        raise NonFinite(f"integration overflowed or went non-finite at lambda ~ {bad}")


def monodromy3(u, lam, steps=DEFAULT_STEPS, with_second=True):
    """Monodromy matrix of the third-order operator at a single lambda."""
    prop = ThirdOrderPropagator(u, steps)
    units = 2 if with_second else 1
    M1, M2, ok = prop.monodromy_batch(lam, units=units)
    _check_ok(ok, lam)
    return Monodromy3(lam, M1[0], M2[0] if with_second else None)


def monodromy2(potential, E, steps=DEFAULT_STEPS):
    """Hill monodromy data for -u'' + V u = E u at a single energy E."""
    prop = HillPropagator(potential, steps)
    W, ok = prop.monodromy_batch(E)
    _check_ok(ok, E)
    return Monodromy2(E, W[0])


def integrate_third_order(u, lam, y0, x_end=1.0, steps=DEFAULT_STEPS,
                          return_trajectory=False):
    """Integrate H y = lam y from 0 to x_end with initial state y0 = (y, y', y'').

    x_end need not be a whole period; the step size is x_end/n with the same
    per-unit resolution.  Returns the final state, or (x-grid, states) when
    return_trajectory is set.
    """
    if x_end <= 0:
        raise ValueError("x_end must be positive")
    x_end = float(x_end)
    if x_end == int(x_end) and int(x_end) in (1, 2):
        prop = ThirdOrderPropagator(u, steps)
        units = int(x_end)
    else:
        n_steps = max(16, int(np.ceil(steps * x_end)))
        h = x_end / n_steps
        prop = ThirdOrderPropagator.__new__(ThirdOrderPropagator)
        prop.pairs = [u]
        prop.steps = n_steps
        prop.h = h
        grid = _stage_grid(n_steps, h)
        prop.P = _tabulate([u.p], grid)
        prop.DP = _tabulate([u.p.derivative()], grid)
        prop.Q = _tabulate([u.q], grid)
        prop._fine = None
        units = 1
    traj, ok = prop.trajectory_batch(lam, np.asarray(y0), units=units)
    _check_ok(ok, lam)
    if return_trajectory:
        x = np.linspace(0.0, x_end, traj.shape[1])
        return x, traj[0]
    return traj[0, -1]
