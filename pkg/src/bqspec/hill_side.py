"""Reduction of the third-order spectral problem to a Hill equation.

For real lam > 1 the monodromy has a distinguished real multiplier
tau(lam) ~ e^{lam^{1/3}} whose Floquet solution f(x, lam) is positive.  The
substitution u = f^{3/2} (y / f)' sends solutions y of the third-order
equation at lam to solutions of a Hill equation -u'' + V u = E u with the
1-periodic potential

    V(x) = E - 2 p(x) - (3/2) f''/f + (3/4) (f'/f)^2,    E = (3/4) lam^{2/3}.

The potential depends on E through f, so the Hill problem is evaluated
on-shell: every probe energy E gets the factor f at its own
lam(E) = (4E/3)^{3/2}.  The coupled kernel integrates f together with the
Hill fundamental pair (theta, phi) in one pass, so V is never interpolated
during spectra computations.

Geometry: the E-image of the n-th real domain trace is exactly the window
Omega_n = ((pi n - 1)^2, (pi n + 1)^2); there the on-shell Hill problem has
one periodic/antiperiodic pair E_n^- <= E_n^+ (the image of the branch
points) and one Dirichlet eigenvalue m_n.  At the free field V vanishes
identically, Delta(E) = cos sqrt(E), and everything closes at (pi n)^2.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

from ._search import bracket_zeros, cubic_polish_max, find_sign_changes, \
    golden_max, grid_scan, parabola_fit_max
from .errors import (AmbiguousSelection, CountMismatch, DomainError, NonFinite,
                     NonRealData, NormalizationFailure, PositivityFailure)
from .floquet_surface import CLOSED_FACTOR, NOISE_REL, REALNESS_FACTOR
from .ode_engine import DEFAULT_STEPS, HillPropagator, ThirdOrderPropagator
from .periodic_fn import check_ball


def E_to_lam(E):
    """lam = (4 E / 3)^{3/2}; inverse of the energy normalization."""
    E = np.asarray(E, dtype=float)
    if np.any(E <= 0):
        raise DomainError("the energy map needs E > 0")
    return (4.0 * E / 3.0) ** 1.5


def lam_to_E(lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise DomainError("the energy map needs lam > 0")
    return 0.75 * lam ** (2.0 / 3.0)


def hill_window(n):
    """Omega_n, the E-image of the n-th real domain trace (n >= 1)."""
    if n < 1:
        raise DomainError("Hill windows are indexed by n >= 1")
    return ((np.pi * n - 1.0) ** 2, (np.pi * n + 1.0) ** 2)


# -- the positive Floquet factor ---------------------------------------------


@dataclass
class FloquetSolution:
    """Floquet solution of the third-order equation for the multiplier tau."""

    lam: float
    tau: float
    init: np.ndarray          # (f, f', f'')(0), normalized f(0) = 1
    x: np.ndarray
    states: np.ndarray        # (len(x), 3)
    fmin: float               # min of f over the grid
    eig_residual: float       # ||Phi v - tau v|| / (tau ||v||)


def _floquet_init_batch(prop, lams, tabs=None):
    """Initial states of the tau-Floquet solutions, batched; real lam > 1."""
    lams = np.asarray(lams, dtype=float)
    if np.any(lams <= 1.0):
        raise DomainError("the positive Floquet factor needs real lam > 1; "
                          f"got {lams[lams <= 1.0][:3]}")
    M1, _, ok = prop.monodromy_batch(lams, tabs, units=1)
    if not np.all(ok == 1):
        raise NonFinite("monodromy integration failed during factor setup")
    Phi = np.swapaxes(M1, 1, 2)  # fundamental matrix at x = 1
    ts = np.linalg.eigvals(Phi)
    target = np.exp(np.cbrt(lams))
    d = np.abs(ts - target[:, None]) / np.maximum(np.abs(ts), target[:, None])
    order = np.argsort(d, axis=1)
    rows = np.arange(lams.size)
    tau = ts[rows, order[:, 0]]
    second = ts[rows, order[:, 1]]
    sep = np.abs(tau - second) / np.maximum(np.abs(tau), np.abs(second))
    if np.any(sep <= 1e-6):
        i = int(np.argmin(sep))
        raise AmbiguousSelection(
            f"two multipliers within relative {sep[i]:.2e} of the growing branch "
            f"at lam = {lams[i]:.6g}")
    if np.any(np.abs(tau.imag) > 1e-8 * np.abs(tau)):
        i = int(np.argmax(np.abs(tau.imag) / np.abs(tau)))
        raise NonRealData(f"growing multiplier not real at lam = {lams[i]:.6g}")
    tau = tau.real
    A = Phi - tau[:, None, None] * np.eye(3)
    # eigenvector from the best-conditioned pair of row cross products
    cands = np.stack([np.cross(A[:, 0], A[:, 1]),
                      np.cross(A[:, 0], A[:, 2]),
                      np.cross(A[:, 1], A[:, 2])], axis=1)
    norms = np.linalg.norm(cands, axis=2)
    v = cands[rows, np.argmax(norms, axis=1)]
    vn = np.linalg.norm(v, axis=1)
    if np.any(np.abs(v[:, 0]) <= 1e-12 * vn):
        i = int(np.argmin(np.abs(v[:, 0]) / vn))
        raise NormalizationFailure(
            f"Floquet solution vanishes at x = 0 (lam = {lams[i]:.6g}); "
            "cannot normalize f(0) = 1")
    v = v / v[:, :1]
    res = np.linalg.norm(np.einsum("kij,kj->ki", Phi, v) - tau[:, None] * v,
                         axis=1) / (np.abs(tau) * np.linalg.norm(v, axis=1))
    return v, tau, res


def floquet_solution(u, lam, steps=DEFAULT_STEPS, units=2):
    """The positive Floquet solution f at real lam > 1, on a dense grid."""
    check_ball(u)
    prop = ThirdOrderPropagator(u, steps)
    v, tau, res = _floquet_init_batch(prop, [float(lam)])
    traj, ok = prop.trajectory_batch(np.asarray([float(lam)]), v[0], units=units)
    if not np.all(ok == 1):
        raise NonFinite("Floquet trajectory integration failed")
    fmin = float(traj[0, :, 0].min())
    if fmin <= 0.0:
        raise PositivityFailure(
            f"Floquet solution loses positivity (min f = {fmin:.3e}) at lam = {lam}")
    x = np.linspace(0.0, float(units), traj.shape[1])
    return FloquetSolution(float(lam), float(tau[0]), v[0], x, traj[0],
                           fmin, float(res[0]))


# -- the transformed potential as a callable ----------------------------------

_BARY_W8 = np.array([(-1.0) ** j * comb(7, j) for j in range(8)])


def _interp8(vals, h, x):
    """Barycentric 8-point interpolation on the uniform grid k*h, k=0..len-1."""
    x = np.asarray(x, dtype=float)
    t = x / h
    i0 = np.clip(np.floor(t).astype(np.int64) - 3, 0, vals.size - 8)
    d = (t - i0)[:, None] - np.arange(8.0)
    exact = np.abs(d) < 1e-12
    dsafe = np.where(exact, 1.0, d)
    wd = _BARY_W8 / dsafe
    out = (wd * vals[i0[:, None] + np.arange(8)]).sum(axis=1) / wd.sum(axis=1)
    hit = exact.any(axis=1)
    if hit.any():
        out[hit] = vals[i0[hit] + np.argmax(exact[hit], axis=1)]
    return out


class TransformedPotential:
    """V(x) of the Hill reduction at a fixed energy, callable on [0, 2].

    Values come from the dense Floquet trajectory; off-grid evaluation uses
    8-point barycentric interpolation, so the 1-periodicity of V (a theorem,
    not a construction: f(x+1) = tau f(x) makes the ratios periodic) can be
    checked honestly across the two computed periods.
    """

    def __init__(self, u, E, steps=DEFAULT_STEPS):
        self.E = float(E)
        self.lam = float(E_to_lam(self.E))
        sol = floquet_solution(u, self.lam, steps, units=2)
        f, fp, fpp = sol.states.T
        self.solution = sol
        self.x_grid = sol.x
        self.h = sol.x[1] - sol.x[0]
        self.values = (self.E - 2.0 * u.p(sol.x) - 1.5 * fpp / f
                       + 0.75 * (fp / f) ** 2)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xf = np.atleast_1d(x)
        if np.any(xf < 0.0) or np.any(xf > 2.0):
            raise DomainError("the transformed potential is tabulated on [0, 2]")
        out = _interp8(self.values, self.h, xf)
        return float(out[0]) if scalar else out

    def periodicity_defect(self, xs=None):
        """max |V(x+1) - V(x)| over sample points in [0, 1]."""
        if xs is None:
            xs = np.linspace(0.0, 1.0, 257)
        xs = np.asarray(xs, dtype=float)
        return float(np.max(np.abs(self(xs + 1.0) - self(xs))))


def potential_V(u, E, steps=DEFAULT_STEPS):
    """The 1-periodic potential of the Hill reduction at energy E > 1."""
    if not (np.isrealobj(E) and np.ndim(E) == 0 and E > 1.0):
        raise DomainError(f"the Hill reduction needs real E > 1, got E = {E}")
    return TransformedPotential(u, float(E), steps)


def transform_solution(u, lam, y_init, steps=DEFAULT_STEPS):
    """Apply u_H = f^{3/2} (y/f)' to the third-order solution with data y_init.

    Returns (x, u_H values) on the dense [0, 2] grid.  This realizes the
    substitution behind the Hill reduction directly; it exists purely as a
    verification utility -- transform_residual checks that the output really
    solves the Hill equation.  The spectra pipeline never calls it.
    """
    check_ball(u)
    prop = ThirdOrderPropagator(u, steps)
    lam = float(lam)
    sol_v, tau, _ = _floquet_init_batch(prop, [lam])
    ftraj, ok1 = prop.trajectory_batch(np.asarray([lam]), sol_v[0], units=2)
    ytraj, ok2 = prop.trajectory_batch(np.asarray([lam]),
                                       np.asarray(y_init, dtype=float), units=2)
    if not (np.all(ok1 == 1) and np.all(ok2 == 1)):
        raise NonFinite("trajectory integration failed in the transform")
    f, fp = ftraj[0, :, 0], ftraj[0, :, 1]
    if f.min() <= 0:
        raise PositivityFailure("Floquet factor not positive on [0, 2]")
    y, yp = ytraj[0, :, 0], ytraj[0, :, 1]
    x = np.linspace(0.0, 2.0, f.size)
    return x, (yp * f - y * fp) / np.sqrt(f)


def transform_residual(u, E, steps=DEFAULT_STEPS, n_probe=64):
    """Pointwise defect of -u_H'' + V u_H = E u_H for a transformed solution.

    u_H comes from transform_solution applied to phi_2; the second derivative
    is taken by an 8th-order central stencil on the dense grid and the defect
    is normalized by the local scale of the three terms.  Small output means
    the substitution u_H = f^{3/2}(y/f)' really intertwines the operators.

    Only meaningful at moderate E: y'f - yf' cancels the shared dominant
    exponential, so roundoff in the difference grows like exp(c sqrt(E)) and
    swamps the defect somewhere around E ~ 20.
    """
    lam = float(E_to_lam(float(E)))
    x, w = transform_solution(u, lam, [0.0, 1.0, 0.0], steps)
    V = TransformedPotential(u, float(E), steps)
    h = x[1] - x[0]
    # 8th-order second-derivative stencil
    c = np.array([-1.0 / 560, 8.0 / 315, -1.0 / 5, 8.0 / 5, -205.0 / 72,
                  8.0 / 5, -1.0 / 5, 8.0 / 315, -1.0 / 560])
    idx = np.linspace(8, x.size - 9, n_probe).astype(int)
    wpp = sum(c[j] * w[idx + j - 4] for j in range(9)) / h**2
    Vx = V(x[idx])
    defect = -wpp + (Vx - float(E)) * w[idx]
    scale = np.maximum(np.abs(wpp) + np.abs((Vx - float(E)) * w[idx]), 1.0)
    return float(np.max(np.abs(defect) / scale))


# -- window locators (shared by the on-shell and plain-Hill routes) -----------


def _locate_window_pairs(ev, ns, lo, hi, *, closed_rtol, scan_pts=21,
                         what="Hill discriminant excess"):
    """Zero pair of ev per window; ev >= 0 on the gap, < 0 towards the edges.

    Same extremum-then-bracket strategy as the third-order branch point
    locator; returns (e_minus, e_plus, e_star, peak, closed, noise,
    edge_sigma) arrays.  edge_sigma is the endpoint uncertainty: a closed
    gap hides any opening whose excess bump stays under the noise band.
    """
    k = len(ns)
    items = np.arange(k)
    X, V, N = grid_scan(ev, items, lo, hi, scan_pts)
    edge = np.stack([V[:, 0], V[:, -1]], axis=1)
    edge_noise = np.stack([N[:, 0], N[:, -1]], axis=1)
    if np.any(edge > CLOSED_FACTOR * edge_noise):
        bad = int(np.nonzero((edge > CLOSED_FACTOR * edge_noise).any(axis=1))[0][0])
        raise CountMismatch(
            f"{what} positive at the window edge for n={ns[bad]}; "
            "the spectral pair is not isolated by the window")
    j = np.argmax(V, axis=1)
    a = X[items, np.clip(j - 1, 0, scan_pts - 1)]
    b = X[items, np.clip(j + 1, 0, scan_pts - 1)]
    x_star, f_star, width, nz = golden_max(ev, items, a, b)
    hw1 = np.maximum(4.0 * width, 1e-6 * (1.0 + np.abs(x_star)))
    xv, fv, curv, n1 = parabola_fit_max(ev, items, x_star, hw1)
    hw2 = np.where(curv < 0,
                   np.sqrt(400.0 * np.maximum(n1, 1e-300)
                           / np.maximum(np.abs(curv), 1e-300)),
                   hw1)
    hw2 = np.clip(hw2, hw1, (hi - lo) / 8.0)
    xv, fv, curv, n2 = parabola_fit_max(ev, items, xv, hw2)
    # cubic refit on a wider stencil to cancel the parabola's odd-order
    # vertex bias (same third stage as the branch-point locator)
    L = np.maximum((hi - lo) / 2.0, 1e-6 * (1.0 + np.abs(xv)))
    with np.errstate(invalid="ignore", divide="ignore"):
        hw3 = (np.maximum(n2, 1e-300) * L**2
               / np.maximum(np.abs(curv), 1e-300)) ** 0.25
    hw3 = np.where(curv < 0, hw3, hw2)
    hw3 = np.clip(hw3, hw2, (hi - lo) / 6.0)
    xv3, fv3, curv3, n3 = cubic_polish_max(ev, items, xv, hw3)
    keep = (curv3 < 0) & (np.abs(xv3 - xv) <= hw3)
    xv = np.where(keep, xv3, xv)
    n2 = np.maximum(n2, n3)
    xv = np.clip(xv, lo, hi)
    f_meas, n_meas = ev(xv, items)
    eta = np.maximum(n2, n_meas)
    if np.any(f_meas < -REALNESS_FACTOR * eta):
        bad = int(np.argmin(f_meas / eta))
        raise CountMismatch(
            f"{what} never reaches zero in the window for n={ns[bad]} "
            f"(peak {f_meas[bad]:.3e}, noise {eta[bad]:.3e})")
    closed = f_meas <= CLOSED_FACTOR * eta
    e_minus, e_plus = xv.copy(), xv.copy()
    open_idx = np.nonzero(~closed)[0]
    if open_idx.size:
        zi = np.concatenate([open_idx, open_idx])
        roots = bracket_zeros(
            ev, items[zi],
            np.concatenate([lo[open_idx], xv[open_idx]]),
            np.concatenate([xv[open_idx], hi[open_idx]]),
            np.concatenate([V[open_idx, 0], f_meas[open_idx]]),
            np.concatenate([f_meas[open_idx], V[open_idx, -1]]))
        m = open_idx.size
        e_minus[open_idx] = roots[:m]
        e_plus[open_idx] = roots[m:]
        merge = e_plus - e_minus <= closed_rtol * (1.0 + np.abs(xv))
        closed |= merge
        e_minus[merge] = xv[merge]
        e_plus[merge] = xv[merge]
    with np.errstate(divide="ignore", invalid="ignore"):
        c_abs = np.maximum(np.abs(curv), 1e-300)
        half = np.maximum(0.5 * (e_plus - e_minus), 1e-300)
        sigma = np.where(closed,
                         np.sqrt((CLOSED_FACTOR + 1.0) * eta / c_abs),
                         eta / (c_abs * half))
    sigma = np.minimum(sigma, hi - lo)
    return e_minus, e_plus, xv, f_meas, closed, eta, sigma


def _locate_window_zero(ev, ns, lo, hi, *, panels=32, what="Dirichlet value"):
    """The single sign change of ev per window."""
    k = len(ns)
    out = np.empty(k)
    todo = list(range(k))
    for npanels in (panels, 4 * panels):
        if not todo:
            break
        ti = np.asarray(todo)
        X, V, _ = grid_scan(ev, ti, lo[ti], hi[ti], npanels + 1)
        crossings = find_sign_changes(X, V)
        zi, zlo, zhi, zflo, zfhi, still = [], [], [], [], [], []
        for row, i in enumerate(ti):
            c = crossings[row]
            if len(c) == 1:
                zi.append(i)
                zlo.append(X[row, c[0]])
                zhi.append(X[row, c[0] + 1])
                zflo.append(V[row, c[0]])
                zfhi.append(V[row, c[0] + 1])
            elif len(c) > 1:
                raise CountMismatch(
                    f"{len(c)} sign changes of the {what} in window n={ns[i]}; "
                    "expected exactly one")
            else:
                still.append(i)
        if zi:
            out[np.asarray(zi)] = bracket_zeros(ev, zi, zlo, zhi, zflo, zfhi)
        todo = still
    if todo:
        raise CountMismatch(
            f"no sign change of the {what} in window n={ns[todo[0]]}")
    return out


# -- on-shell Hill spectra ------------------------------------------------------


@dataclass
class HillSpectra:
    """Periodic/antiperiodic pair and Dirichlet data of the reduced problem."""

    n: int
    E_minus: float
    E_plus: float
    gm: float                # the Dirichlet eigenvalue m_n in Omega_n
    phi1_prime: float        # phi'(1, m_n), the slope entering the gap height
    E_star: float            # extremum of the discriminant excess
    closed: bool
    noise: float
    edge_sigma: float = 0.0  # endpoint uncertainty (closed gaps hide
                             # sub-noise openings; see the surface locator)

    @property
    def width(self):
        return self.E_plus - self.E_minus


class HillSideWorkspace:
    """Batched on-shell Hill evaluations for one coefficient pair."""

    def __init__(self, u, steps=DEFAULT_STEPS):
        self.prop = ThirdOrderPropagator(u, steps)

    def hill_values(self, Es, tabs=None):
        """(Delta, phi1, phi1_prime, noise) of the on-shell Hill problem."""
        Es = np.asarray(Es, dtype=float)
        lams = E_to_lam(Es)
        f0, tau, _ = _floquet_init_batch(self.prop, lams, tabs)
        W, f1, fmin, ok = self.prop.coupled_batch(lams, f0, tabs)
        if np.any(ok == 2):
            bad = Es[ok == 2][0]
            raise PositivityFailure(
                f"Floquet factor too close to zero during coupled run at E = {bad:.6g}")
        if not np.all(ok == 1):
            raise NonFinite("coupled integration failed")
        if np.any(fmin <= 0.0):
            bad = Es[fmin <= 0.0][0]
            raise PositivityFailure(
                f"Floquet factor loses positivity at E = {bad:.6g}")
        delta = 0.5 * (W[:, 0, 0] + W[:, 1, 1])
        noise = NOISE_REL * 0.5 * (np.abs(W[:, 0, 0]) + np.abs(W[:, 1, 1]) + 2.0)
        return delta, W[:, 0, 1], W[:, 1, 1], noise

    def locate_pairs(self, ns, *, closed_rtol=1e-6, scan_pts=21):
        ns = [int(n) for n in ns]
        signs = np.array([(-1.0) ** n for n in ns])

        def ev(xs, it):
            delta, _, _, noise = self.hill_values(xs)
            return signs[it] * delta - 1.0, noise

        lo = np.array([hill_window(n)[0] for n in ns])
        hi = np.array([hill_window(n)[1] for n in ns])
        return _locate_window_pairs(ev, ns, lo, hi, closed_rtol=closed_rtol,
                                    scan_pts=scan_pts)

    def locate_dirichlet(self, ns, *, panels=32):
        ns = [int(n) for n in ns]

        def ev(xs, it):
            _, phi1, _, noise = self.hill_values(xs)
            return phi1, noise

        lo = np.array([hill_window(n)[0] for n in ns])
        hi = np.array([hill_window(n)[1] for n in ns])
        m = _locate_window_zero(ev, ns, lo, hi, panels=panels)
        _, _, phi1p, _ = self.hill_values(m)
        return m, phi1p


def hill_spectra(u, ns, steps=DEFAULT_STEPS, closed_rtol=1e-6):
    """On-shell Hill data (E_n^-, E_n^+, m_n, phi'(1, m_n)) for each n >= 1."""
    check_ball(u)
    scalar = np.isscalar(ns)
    ns = [int(ns)] if scalar else [int(n) for n in ns]
    ws = HillSideWorkspace(u, steps)
    em, ep, es, peak, closed, eta, sig = ws.locate_pairs(ns, closed_rtol=closed_rtol)
    m, phi1p = ws.locate_dirichlet(ns)
    out = [HillSpectra(ns[i], float(em[i]), float(ep[i]), float(m[i]),
                       float(phi1p[i]), float(es[i]), bool(closed[i]),
                       float(eta[i]), edge_sigma=float(sig[i]))
           for i in range(len(ns))]
    return out[0] if scalar else out


# -- gap coordinates of a plain Hill operator ---------------------------------


@dataclass
class HillGapData:
    """One gap of a plain Hill operator -u'' + v u = E u in its window."""

    n: int
    lam_minus: float         # the 2-periodic pair of the plain operator
    lam_plus: float
    dirichlet: float
    h_s: float               # log |phi'(1, m_n)|
    psi_c: float
    psi_s: float
    closed: bool

    @property
    def width(self):
        return self.lam_plus - self.lam_minus


def gap_coordinates(potential, n_max, steps=DEFAULT_STEPS, closed_rtol=1e-6,
                    slope_dead_zone=1e-10):
    """Gap coordinates (psi_c, psi_s) of a plain 1-periodic Hill operator.

    potential is any callable on [0, 1] (a TrigSeries or a TransformedPotential
    both work); None means the free operator.  n_max means n = 1..n_max; a
    list selects specific windows.  psi_c = (lam^- + lam^+)/2 - m_n and
    psi_s = sqrt(|width^2/4 - psi_c^2|) carries the sign of log |phi'(1, m_n)|,
    zeroed inside the dead zone where that log is numerically indistinct from 0.
    """
    ns = list(range(1, int(n_max) + 1)) if np.isscalar(n_max) \
        else [int(n) for n in n_max]
    prop = HillPropagator(potential, steps)

    def ev_pair(xs, it):
        W, ok = prop.monodromy_batch(xs)
        if not np.all(ok == 1):
            raise NonFinite("Hill integration failed")
        delta = 0.5 * (W[:, 0, 0] + W[:, 1, 1])
        noise = NOISE_REL * 0.5 * (np.abs(W[:, 0, 0]) + np.abs(W[:, 1, 1]) + 2.0)
        return signs[it] * delta - 1.0, noise

    def ev_diri(xs, it):
        W, ok = prop.monodromy_batch(xs)
        if not np.all(ok == 1):
            raise NonFinite("Hill integration failed")
        return W[:, 0, 1], NOISE_REL * (np.abs(W[:, 0, 1]) + 1.0)

    signs = np.array([(-1.0) ** n for n in ns])
    lo = np.array([hill_window(n)[0] for n in ns])
    hi = np.array([hill_window(n)[1] for n in ns])
    em, ep, es, peak, closed, eta, _ = _locate_window_pairs(
        ev_pair, ns, lo, hi, closed_rtol=closed_rtol)
    m = _locate_window_zero(ev_diri, ns, lo, hi)
    W, ok = prop.monodromy_batch(m)
    if not np.all(ok == 1):
        raise NonFinite("Hill integration failed")
    phi1p = W[:, 1, 1]

    out = []
    for i, n in enumerate(ns):
        h = float(np.log(np.abs(phi1p[i])))
        psi_c = 0.5 * (em[i] + ep[i]) - m[i]
        gap_sq = 0.25 * (ep[i] - em[i]) ** 2 - psi_c**2
        mag = np.sqrt(abs(gap_sq))
        sgn = 0.0 if abs(h) < slope_dead_zone else np.sign(h)
        out.append(HillGapData(n, float(em[i]), float(ep[i]), float(m[i]),
                               h, float(psi_c), float(sgn * mag), bool(closed[i])))
    return out
