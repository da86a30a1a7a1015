"""Floquet multiplier surface of the third-order operator.

The three multipliers tau_j(lam) are the eigenvalues of the monodromy matrix;
their collisions are the zeros of the discriminant

    rho = 18 c1 c2 - 4 c2^3 + c1^2 c2^2 - 4 c1^3 - 27,

the resultant-form discriminant of t^3 - c2 t^2 + c1 t - 1 with
c2 = tr M(lam) and c1 = tr M(lam)^{-1}.  Per spectral-domain index n the two
zeros r_n^- <= r_n^+ on the real trace are branch points of the surface; they
bound the n-th gap.

Conditioning note (this drives the whole design): on the positive real axis
one multiplier grows like e^z, z = lam^{1/3}, while the colliding pair decays
like e^{-z/2}.  Any formula fed from the forward monodromy alone loses a
factor e^{3z/2} to cancellation, which already at n = 4..5 destroys the gap
location.  But tr M^{-1} for coefficients (p, q) equals tr M at -lam for the
star pair (p, -q) -- the adjoint equation is the starred equation at mirrored
spectral parameter -- so running the integrator a second time on the star
pair delivers c1 at full relative precision.  Real-axis evaluations therefore
always do the twin run; complex contour evaluations only need phases and use
the forward matrix alone.
"""

from dataclasses import dataclass

import numpy as np

from ._search import (bracket_zeros, cubic_polish_max, find_sign_changes,
                      golden_max, grid_scan, parabola_fit_max, winding_numbers)
from .errors import (AmbiguousSelection, CountMismatch, DomainError, NonFinite,
                     NonRealData, NormalizationFailure, RealnessViolation)
from .ode_engine import DEFAULT_STEPS, ThirdOrderPropagator
from .periodic_fn import check_ball

# relative noise floor of one discriminant evaluation (twin-run route); the
# absolute floor is this times the term magnitudes, see _rho_from_invariants
NOISE_REL = 1e-14
# peak below CLOSED_FACTOR * noise counts as a closed gap
CLOSED_FACTOR = 30.0
# peak below -REALNESS_FACTOR * noise means no real multiplier collision at
# all on the trace -- that contradicts the theory for admissible coefficients
REALNESS_FACTOR = 60.0

Z_RADIUS = 2.0 / np.sqrt(3.0)


def z_center(n):
    """Center of the n-th spectral domain in the z = lam^{1/3} plane."""
    return 2.0 * np.pi * abs(n) / np.sqrt(3.0)


def real_trace(n):
    """The open interval D_n cuts out of the real lambda axis."""
    if n == 0:
        r = Z_RADIUS**3
        return (-r, r)
    zc = z_center(n)
    lo, hi = (zc - Z_RADIUS) ** 3, (zc + Z_RADIUS) ** 3
    if n < 0:
        return (-hi, -lo)
    return (lo, hi)


def contour(n, thetas):
    """Points of the domain boundary, positively oriented, at angles thetas."""
    thetas = np.asarray(thetas, dtype=float)
    if n == 0:
        return Z_RADIUS**3 * np.exp(1j * thetas)
    ring = (z_center(n) + Z_RADIUS * np.exp(1j * thetas)) ** 3
    return -ring if n < 0 else ring


def _rho_from_invariants(c1, c2, with_noise=True):
    t1 = 18.0 * c1 * c2
    t2 = -4.0 * c2**3
    t3 = (c1 * c2) ** 2
    t4 = -4.0 * c1**3
    rho = t1 + t2 + t3 + t4 - 27.0
    if not with_noise:
        return rho, None
    noise = NOISE_REL * (np.abs(t1) + np.abs(t2) + np.abs(t3) + np.abs(t4) + 27.0)
    return rho, noise


@dataclass
class DiscriminantValue:
    lam: complex
    rho: complex
    c1: complex
    c2: complex
    noise: float = None  # absolute evaluation noise; real-axis evaluations only


@dataclass
class BranchPoints:
    """The two discriminant zeros on the real trace of domain n."""

    n: int
    lam_minus: float
    lam_plus: float
    lam_star: float     # interior extremum of rho (the gap collapses onto it)
    rho_star: float
    closed: bool
    noise: float
    count: int = None   # argument-principle zero count, when verified
    edge_sigma: float = 0.0   # endpoint uncertainty from the rho noise floor

    @property
    def width(self):
        return self.lam_plus - self.lam_minus


class SurfaceWorkspace:
    """Batched discriminant machinery over a family of coefficient pairs.

    pairs[star_map[t]] must be the star (p, -q) of pairs[t]; loading symmetry
    variants together lets one kernel call serve every search that is active.
    """

    def __init__(self, pairs, star_map=None, steps=DEFAULT_STEPS):
        if star_map is None:
            # default layout: [u, u*]
            pairs = [pairs, pairs.star()] if not isinstance(pairs, list) else pairs
            star_map = [1, 0]
        self.prop = ThirdOrderPropagator(pairs, steps)
        self.star_map = np.asarray(star_map, dtype=np.int64)

    # -- pointwise evaluators ------------------------------------------------

    def invariants_real(self, lams, tabs):
        """(c1, c2) at real lams via the twin forward/star runs."""
        lams = np.asarray(lams, dtype=float)
        tabs = np.asarray(tabs, dtype=np.int64)
        k = lams.size
        both = np.concatenate([lams, -lams])
        tsel = np.concatenate([tabs, self.star_map[tabs]])
        M1, _, ok = self.prop.monodromy_batch(both, tsel, units=1)
        if not np.all(ok == 1):
            raise NonFinite("monodromy integration failed during invariant evaluation")
        tr = np.einsum("kii->k", M1)
        return tr[k:], tr[:k]  # c1 from the star run, c2 from the forward run

    def rho_real(self, lams, tabs):
        c1, c2 = self.invariants_real(lams, tabs)
        return _rho_from_invariants(c1, c2)

    def rho_complex(self, lams, tabs):
        lams = np.asarray(lams, dtype=complex)
        tabs = np.asarray(tabs, dtype=np.int64)
        M1, _, ok = self.prop.monodromy_batch(lams, tabs, units=1)
        if not np.all(ok == 1):
            raise NonFinite("monodromy integration failed on the contour")
        c2 = np.einsum("kii->k", M1)
        m2 = np.einsum("kij,kji->k", M1, M1)
        c1 = 0.5 * (c2**2 - m2)
        return _rho_from_invariants(c1, c2, with_noise=False)[0]

    def dirichlet_det_real(self, lams, tabs):
        """F(lam) = phi_2(1) phi_3(2) - phi_3(1) phi_2(2) on the real axis."""
        lams = np.asarray(lams, dtype=float)
        tabs = np.asarray(tabs, dtype=np.int64)
        M1, M2, ok = self.prop.monodromy_batch(lams, tabs, units=2)
        if not np.all(ok == 1):
            raise NonFinite("monodromy integration failed during 3-point evaluation")
        a = M1[:, 1, 0] * M2[:, 2, 0]
        b = M1[:, 2, 0] * M2[:, 1, 0]
        return a - b, NOISE_REL * (np.abs(a) + np.abs(b))

    def dirichlet_det_complex(self, lams, tabs):
        lams = np.asarray(lams, dtype=complex)
        tabs = np.asarray(tabs, dtype=np.int64)
        M1, M2, ok = self.prop.monodromy_batch(lams, tabs, units=2)
        if not np.all(ok == 1):
            raise NonFinite("monodromy integration failed on the contour")
        return M1[:, 1, 0] * M2[:, 2, 0] - M1[:, 2, 0] * M2[:, 1, 0]

    def shoot_real(self, lams, tabs):
        """Renormalized shooting function: same zeros as F, O(1) scale."""
        lams = np.asarray(lams, dtype=float)
        tabs = np.asarray(tabs, dtype=np.int64)
        G, ok = self.prop.dirichlet_shoot_batch(lams, tabs)
        if np.any(ok == 2):
            bad = lams[ok == 2][0]
            raise NormalizationFailure(
                f"every y(0)=0 solution vanishes at x=1 near lam = {bad:.6g}; "
                "cannot normalize the 3-point shooting direction"
            )
        if not np.all(ok == 1):
            raise NonFinite("renormalized shooting failed")
        return G, np.full(G.shape, 5e-13)

    # -- gap locator ----------------------------------------------------------

    def locate_pairs(self, tabs, ns, *, closed_rtol=1e-6, scan_pts=21):
        """Locate (r_n^-, r_n^+) for each (tab, n) item, all in lockstep.

        Returns a list of BranchPoints (count field unset).  The extremum of
        rho on the trace is found by golden section until the noise floor,
        then polished by a least-squares parabola whose stencil is sized so
        the quadratic term stands well above the noise.
        """
        tabs = np.asarray(tabs, dtype=np.int64)
        ns = np.asarray(ns, dtype=int)
        k = tabs.size
        items = np.arange(k)

        def ev(xs, it):
            return self.rho_real(xs, tabs[it])

        lo = np.array([real_trace(n)[0] for n in ns])
        hi = np.array([real_trace(n)[1] for n in ns])
        X, V, N = grid_scan(ev, items, lo, hi, scan_pts)

        # the trace endpoints lie between gaps where the complex pair is
        # genuinely non-real, so rho must be negative there
        edge = np.stack([V[:, 0], V[:, -1]], axis=1)
        edge_noise = np.stack([N[:, 0], N[:, -1]], axis=1)
        if np.any(edge > CLOSED_FACTOR * edge_noise):
            bad = int(np.nonzero((edge > CLOSED_FACTOR * edge_noise).any(axis=1))[0][0])
            raise CountMismatch(
                f"discriminant positive at the trace edge of domain n={ns[bad]}; "
                "gap structure inconsistent with the domain geometry"
            )

        j = np.argmax(V, axis=1)
        jl = np.clip(j - 1, 0, scan_pts - 1)
        jr = np.clip(j + 1, 0, scan_pts - 1)
        a = X[items, jl]
        b = X[items, jr]
        x_star, f_star, width, nz = golden_max(ev, items, a, b)

        # curvature from a wide probe fit, then a noise-matched refit
        scale = 1.0 + np.abs(x_star)
        hw1 = np.maximum(4.0 * width, 1e-6 * scale)
        xv, fv, curv, n1 = parabola_fit_max(ev, items, x_star, hw1)
        good = curv < 0
        hw2 = np.where(
            good,
            np.sqrt(400.0 * np.maximum(n1, 1e-300) / np.maximum(np.abs(curv), 1e-300)),
            hw1,
        )
        hw2 = np.clip(hw2, hw1, (hi - lo) / 8.0)
        xv, fv, curv, n2 = parabola_fit_max(ev, items, xv, hw2)

        # third stage: cubic refit on a wider stencil.  The parabola vertex
        # carries an odd-order bias ~ H^2/L (L = scale on which rho varies,
        # here the trace half-width); fitting the t^3 term pushes that to
        # H^3/L^2, which buys roughly another decade and a half at n ~ 5.
        L = np.maximum((hi - lo) / 2.0, 1e-6 * scale)
        with np.errstate(invalid="ignore", divide="ignore"):
            hw3 = (np.maximum(n2, 1e-300) * L**2
                   / np.maximum(np.abs(curv), 1e-300)) ** 0.25
        hw3 = np.where(curv < 0, hw3, hw2)
        hw3 = np.clip(hw3, hw2, (hi - lo) / 6.0)
        xv3, fv3, curv3, n3 = cubic_polish_max(ev, items, xv, hw3)
        keep = (curv3 < 0) & (np.abs(xv3 - xv) <= hw3)
        xv = np.where(keep, xv3, xv)
        curv = np.where(keep, curv3, curv)
        n2 = np.maximum(n2, n3)

        xv = np.clip(xv, lo, hi)
        f_meas, n_meas = ev(xv, items)
        eta = np.maximum(n2, n_meas)

        if np.any(f_meas < -REALNESS_FACTOR * eta):
            bad = int(np.argmin(f_meas / eta))
            raise RealnessViolation(
                f"discriminant peak in domain n={ns[bad]} is negative "
                f"({f_meas[bad]:.3e} vs noise {eta[bad]:.3e}); multipliers do not "
                "collide on the real trace"
            )

        closed = f_meas <= CLOSED_FACTOR * eta
        lam_minus = xv.copy()
        lam_plus = xv.copy()

        open_idx = np.nonzero(~closed)[0]
        if open_idx.size:
            # both roots of every open gap as one lockstep zero-finder batch
            zi = np.concatenate([open_idx, open_idx])
            zlo = np.concatenate([lo[open_idx], xv[open_idx]])
            zhi = np.concatenate([xv[open_idx], hi[open_idx]])
            zflo = np.concatenate([V[open_idx, 0], f_meas[open_idx]])
            zfhi = np.concatenate([f_meas[open_idx], V[open_idx, -1]])
            roots = bracket_zeros(ev, items[zi], zlo, zhi, zflo, zfhi)
            m = open_idx.size
            lam_minus[open_idx] = roots[:m]
            lam_plus[open_idx] = roots[m:]
            # merge back to closed when the separation is below tolerance
            merge = lam_plus - lam_minus <= closed_rtol * (1.0 + np.abs(xv))
            closed |= merge
            lam_minus[merge] = xv[merge]
            lam_plus[merge] = xv[merge]

        # how far an endpoint could really sit from where we put it: a closed
        # gap hides any opening whose rho bump stays under the noise band
        # (half-width sqrt(eta/|curv|)); an open root moves by noise over the
        # local slope |curv| * halfwidth
        with np.errstate(divide="ignore", invalid="ignore"):
            c_abs = np.maximum(np.abs(curv), 1e-300)
            half = np.maximum(0.5 * (lam_plus - lam_minus), 1e-300)
            sigma = np.where(
                closed,
                np.sqrt((CLOSED_FACTOR + 1.0) * eta / c_abs),
                eta / (c_abs * half),
            )
        sigma = np.minimum(sigma, hi - lo)

        return [
            BranchPoints(int(ns[i]), float(lam_minus[i]), float(lam_plus[i]),
                         float(xv[i]), float(f_meas[i]), bool(closed[i]),
                         float(eta[i]), edge_sigma=float(sigma[i]))
            for i in range(k)
        ]

    # -- Dirichlet-type eigenvalue locator ------------------------------------

    def locate_mu(self, tabs, ns, *, panels=64):
        """The single zero of F on the real trace of each domain (n != 0).

        Root location runs on the renormalized shooting function, which shares
        the zeros and sign structure of F without its exponential cancellation.
        """
        tabs = np.asarray(tabs, dtype=np.int64)
        ns = np.asarray(ns, dtype=int)
        if np.any(ns == 0):
            raise DomainError("the 3-point problem has no eigenvalue in domain 0")
        k = tabs.size
        items = np.arange(k)

        def ev(xs, it):
            return self.shoot_real(xs, tabs[it])

        lo = np.array([real_trace(n)[0] for n in ns])
        hi = np.array([real_trace(n)[1] for n in ns])
        mu = np.empty(k)
        todo = list(range(k))
        for npanels in (panels, 4 * panels):
            if not todo:
                break
            ti = np.asarray(todo)
            X, V, _ = grid_scan(ev, ti, lo[ti], hi[ti], npanels + 1)
            crossings = find_sign_changes(X, V)
            zi, zlo, zhi, zflo, zfhi = [], [], [], [], []
            still = []
            for row, i in enumerate(ti):
                c = crossings[row]
                if len(c) == 1:
                    zi.append(i)
                    zlo.append(X[row, c[0]])
                    zhi.append(X[row, c[0] + 1])
                    zflo.append(V[row, c[0]])
                    zfhi.append(V[row, c[0] + 1])
                elif len(c) > 1 and (max(c) - min(c)) <= 2:
                    # a near-tangential wiggle across adjacent panels -- treat
                    # the middle crossing as the zero
                    cm = c[len(c) // 2]
                    zi.append(i)
                    zlo.append(X[row, cm])
                    zhi.append(X[row, cm + 1])
                    zflo.append(V[row, cm])
                    zfhi.append(V[row, cm + 1])
                elif len(c) > 1:
                    raise CountMismatch(
                        f"{len(c)} sign changes of the 3-point determinant in "
                        f"domain n={ns[i]}; expected exactly one eigenvalue"
                    )
                else:
                    still.append(i)
            if zi:
                mu[np.asarray(zi)] = bracket_zeros(ev, zi, zlo, zhi, zflo, zfhi)
            todo = still
        if todo:
            # no sign change even on the refined scan: go after a tangential
            # near-zero by minimizing |F|
            ti = np.asarray(todo)

            def neg_abs(xs, it):
                v, n = ev(xs, it)
                return -np.abs(v), n

            X, V, N = grid_scan(neg_abs, ti, lo[ti], hi[ti], 4 * panels + 1)
            j = np.argmax(V, axis=1)
            aa = X[np.arange(ti.size), np.clip(j - 1, 0, 4 * panels)]
            bb = X[np.arange(ti.size), np.clip(j + 1, 0, 4 * panels)]
            xb, fb, _, nb = golden_max(neg_abs, ti, aa, bb)
            okmask = -fb <= 1e3 * nb
            if not np.all(okmask):
                i = int(ti[np.nonzero(~okmask)[0][0]])
                raise CountMismatch(
                    f"no zero of the 3-point determinant found in domain n={ns[i]} "
                    f"(min |F| = {-fb[~okmask][0]:.3e} above noise)"
                )
            mu[ti] = xb
        return mu

    # -- argument-principle counts --------------------------------------------

    def count_zeros(self, tabs, ns, kind="rho", npts=512):
        """Zeros of rho or F inside each domain boundary, by winding number."""
        tabs = np.asarray(tabs, dtype=np.int64)
        ns = np.asarray(ns, dtype=int)
        items = np.arange(tabs.size)

        def ev_theta(thetas, it):
            lams = np.empty(thetas.size, dtype=complex)
            for i in np.unique(it):
                sel = it == i
                lams[sel] = contour(int(ns[i]), thetas[sel])
            if kind == "rho":
                return self.rho_complex(lams, tabs[it])
            return self.dirichlet_det_complex(lams, tabs[it])

        return winding_numbers(ev_theta, items, npts=npts)

    # -- multiplier selection ---------------------------------------------------

    def multipliers(self, lams, tabs):
        """All three Floquet multipliers, from the twin-run invariants (real lam)."""
        c1, c2 = self.invariants_real(lams, tabs)
        k = np.asarray(lams).size
        comp = np.zeros((k, 3, 3), dtype=complex)
        comp[:, 0, 0] = c2
        comp[:, 0, 1] = -c1
        comp[:, 0, 2] = 1.0
        comp[:, 1, 0] = 1.0
        comp[:, 2, 1] = 1.0
        return np.linalg.eigvals(comp)

    def select_tau_batch(self, lams, tabs):
        """The distinguished multiplier tau(lam) ~ e^{lam^{1/3}} for real lam > 1."""
        lams = np.asarray(lams, dtype=float)
        if np.any(lams <= 1.0):
            raise DomainError("tau selection requires |lam| > 1 inside the sector; "
                              f"got lam = {lams[lams <= 1.0][:3]}")
        ts = self.multipliers(lams, tabs)
        target = np.exp(np.cbrt(lams))
        d = np.abs(ts - target[:, None]) / np.maximum(np.abs(ts), target[:, None])
        order = np.argsort(d, axis=1)
        best = ts[np.arange(ts.shape[0]), order[:, 0]]
        second = ts[np.arange(ts.shape[0]), order[:, 1]]
        gap = np.abs(best - second) / np.maximum(np.abs(best), np.abs(second))
        if np.any(gap <= 1e-6):
            i = int(np.argmin(gap))
            raise AmbiguousSelection(
                f"two nearest multipliers within relative {gap[i]:.2e} at "
                f"lam = {lams[i]:.6g}; lambda too near a branch point"
            )
        if np.any(np.abs(best.imag) > 1e-8 * np.abs(best)):
            i = int(np.argmax(np.abs(best.imag) / np.abs(best)))
            raise NonRealData(
                f"selected multiplier at real lam = {lams[i]:.6g} is not real "
                f"(tau = {best[i]:.6e})"
            )
        return best.real


# -- one-off public wrappers ----------------------------------------------------


def discriminant(u, lam, steps=DEFAULT_STEPS):
    """rho(lam) with the monodromy invariants it came from."""
    ws = SurfaceWorkspace([u, u.star()], [1, 0], steps)
    if np.iscomplexobj(np.asarray(lam)) and np.imag(lam) != 0:
        rho = ws.rho_complex([lam], [0])[0]
        M1, _, _ = ws.prop.monodromy_batch(np.asarray([complex(lam)]), units=1)
        c2 = M1[0].trace()
        c1 = 0.5 * (c2**2 - (M1[0] @ M1[0]).trace())
        return DiscriminantValue(lam, rho, c1, c2)
    c1, c2 = ws.invariants_real([float(np.real(lam))], [0])
    rho, noise = _rho_from_invariants(c1, c2)
    return DiscriminantValue(float(np.real(lam)), float(rho[0]), float(c1[0]),
                             float(c2[0]), float(noise[0]))


def locate_branch_points(u, n, *, steps=DEFAULT_STEPS, closed_rtol=1e-6,
                         verify_count=True, scan_pts=21):
    """r_n^-, r_n^+ in domain n (any integer n, 0 included).

    verify_count also runs the argument-principle check that exactly two
    discriminant zeros live inside the domain boundary.
    """
    check_ball(u)
    ws = SurfaceWorkspace([u, u.star()], [1, 0], steps)
    bp = ws.locate_pairs([0], [n], closed_rtol=closed_rtol, scan_pts=scan_pts)[0]
    if verify_count:
        count = int(ws.count_zeros([0], [n], kind="rho")[0])
        bp.count = count
        if count != 2:
            raise CountMismatch(
                f"domain n={n} contains {count} discriminant zeros, expected 2"
            )
    return bp


def count_discriminant_zeros(u, n, steps=DEFAULT_STEPS, npts=512):
    ws = SurfaceWorkspace([u, u.star()], [1, 0], steps)
    return int(ws.count_zeros([0], [n], kind="rho", npts=npts)[0])


def multipliers(u, lam, steps=DEFAULT_STEPS):
    """The three Floquet multipliers at real lam (sorted by modulus)."""
    ws = SurfaceWorkspace([u, u.star()], [1, 0], steps)
    t = ws.multipliers([float(lam)], [0])[0]
    return t[np.argsort(np.abs(t))]


def select_tau(u, lam, steps=DEFAULT_STEPS):
    """The multiplier continuing e^{lam^{1/3}}; real lam in the sector only.

    Defined on |lam| > 1 within the sector |arg lam| < 3 pi / 4; the real-axis
    slice lam > 1 is what the spectral data pipeline consumes.
    """
    lam_c = complex(lam)
    if abs(lam_c) <= 1.0 or not (-0.75 * np.pi < np.angle(lam_c) < 0.75 * np.pi):
        raise DomainError(
            f"lam = {lam} outside the multiplier-selection sector "
            "(|lam| > 1, |arg lam| < 3 pi/4)"
        )
    if lam_c.imag != 0:
        raise DomainError("off-axis tau selection is not supported; use real lam")
    ws = SurfaceWorkspace([u, u.star()], [1, 0], steps)
    return float(ws.select_tau_batch([lam_c.real], [0])[0])
