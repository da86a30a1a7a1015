"""The 3-point Dirichlet problem y(0) = y(1) = y(2) = 0 on two periods.

Its eigenvalues mu_n (one simple eigenvalue per spectral domain, n != 0)
interlace the branch points r_n^- <= mu_n <= r_n^+ and provide the auxiliary
spectrum of the gap coordinate map.  The characteristic function is

    F(lam) = phi_2(1, lam) phi_3(2, lam) - phi_3(1, lam) phi_2(2, lam),

whose sign changes are what the locator actually hunts (through the
renormalized shooting form of F; the raw product formula above loses
exponential accuracy on the positive axis, see floquet_surface).
"""

from dataclasses import dataclass

import numpy as np

from .errors import CountMismatch, NormalizationFailure
from .floquet_surface import SurfaceWorkspace, real_trace
from .ode_engine import DEFAULT_STEPS, ThirdOrderPropagator
from .periodic_fn import check_ball


@dataclass
class ThreePointEigen:
    """One eigenvalue of the 3-point problem with its shooting data.

    The eigenfunction is normalized by y(0) = 0, y'(0) = 1; then
    y''(0) = c with c = -phi_2(1, mu) / phi_3(1, mu).
    """

    n: int
    mu: float
    y1_prime: float          # y'(1, mu)
    y_second_zero: float     # c above
    residual: float          # (|y(1)| + |y(2)|) / entry scale


def three_point_determinant(u, lam, steps=DEFAULT_STEPS):
    """F(lam) by the raw product formula (fine off the positive axis).

    On the positive real axis this cancels like e^{-1.5 lam^{1/3}} relative
    to its terms; use locate_three_point_eigenvalue for root finding there.
    """
    prop = ThirdOrderPropagator(u, steps)
    lam_arr = np.asarray([lam])
    M1, M2, ok = prop.monodromy_batch(lam_arr, units=2)
    if not np.all(ok == 1):
        raise ValueError(f"integration failed at lam = {lam}")
    F = M1[0, 1, 0] * M2[0, 2, 0] - M1[0, 2, 0] * M2[0, 1, 0]
    return complex(F) if np.iscomplexobj(M1) else float(F.real if np.iscomplexobj(F) else F)


def eigen_data_at(prop, mu, tab=0, n=0):
    """Shooting data of the 3-point eigenfunction at a located mu."""
    mu_arr = np.atleast_1d(np.asarray(mu, dtype=float))
    tabs = np.broadcast_to(np.asarray(tab, dtype=np.int64), mu_arr.shape)
    M1, M2, ok = prop.monodromy_batch(mu_arr, tabs, units=2)
    if not np.all(ok == 1):
        raise ValueError("integration failed during eigen data evaluation")
    phi21, phi31 = M1[:, 1, 0], M1[:, 2, 0]
    denom_scale = np.abs(phi21) + np.abs(phi31)
    if np.any(np.abs(phi31) <= 1e-12 * denom_scale):
        raise NormalizationFailure(
            "phi_3(1, mu) vanishes; eigenfunction cannot be normalized by y'(0)=1"
        )
    c = -phi21 / phi31
    y1 = phi21 + c * phi31                      # 0 by construction
    y2 = M2[:, 1, 0] + c * M2[:, 2, 0]          # the actual eigen condition
    y1p = M1[:, 1, 1] + c * M1[:, 2, 1]
    scale = (np.abs(M1[:, 1, 0]) + np.abs(c * M1[:, 2, 0])
             + np.abs(M2[:, 1, 0]) + np.abs(c * M2[:, 2, 0]))
    res = (np.abs(y1) + np.abs(y2)) / np.maximum(scale, 1e-300)
    return c, y1p, res


def locate_mu(u, n, steps=DEFAULT_STEPS, panels=64, verify_count=True):
    """The single eigenvalue mu_n in domain n, with shooting data.

    verify_count runs the argument-principle census of 3-point determinant
    zeros inside the domain boundary (must be exactly one).
    """
    check_ball(u)
    ws = SurfaceWorkspace([u, u.star()], [1, 0], steps)
    mu = float(ws.locate_mu([0], [n], panels=panels)[0])
    if verify_count:
        count = int(ws.count_zeros([0], [n], kind="dirichlet")[0])
        if count != 1:
            raise CountMismatch(
                f"domain n={n} contains {count} zeros of the 3-point "
                "determinant, expected exactly 1")
    c, y1p, res = eigen_data_at(ws.prop, mu)
    return ThreePointEigen(n, mu, float(y1p[0]), float(c[0]), float(res[0]))


def eigenfunction(u, mu, steps=DEFAULT_STEPS):
    """Trajectory of the eigenfunction candidate y with y(0)=0, y'(0)=1.

    Returns (x, states) over [0, 2]; states[:, 0] is y itself.  mu may be any
    real number -- for a true 3-point eigenvalue the endpoint values vanish.
    """
    prop = ThirdOrderPropagator(u, steps)
    c, _, _ = eigen_data_at(prop, mu)
    traj, ok = prop.trajectory_batch(np.asarray([mu], dtype=float),
                                     np.array([0.0, 1.0, float(c[0])]), units=2)
    if not np.all(ok == 1):
        raise ValueError("integration failed while building the eigenfunction")
    x = np.linspace(0.0, 2.0, traj.shape[1])
    return x, traj[0]


def containment_slack(u, n, steps=DEFAULT_STEPS):
    """mu_n and its branch points, with the (scaled) slack of the containment
    r_n^- <= mu_n <= r_n^+.  Negative slack means the containment holds.

    The branch-point endpoints are only known to within bp.edge_sigma (a
    nearly closed gap hides any opening below the discriminant noise floor),
    so that uncertainty is subtracted before scaling.
    """
    ws = SurfaceWorkspace([u, u.star()], [1, 0], steps)
    bp = ws.locate_pairs([0], [n])[0]
    mu = float(ws.locate_mu([0], [n])[0])
    s = 1.0 + abs(mu)
    slack = (max(bp.lam_minus - mu, mu - bp.lam_plus) - bp.edge_sigma) / s
    return mu, bp, slack


def trace_interval(n):
    """Search interval for domain n (re-export of the domain geometry)."""
    return real_trace(n)
