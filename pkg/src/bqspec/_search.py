"""Lockstep 1-D search utilities over batched evaluators.

Every routine here drives many independent scalar searches simultaneously
through a single evaluator

    ev(xs, items) -> (values, noise)

where xs is a float array of abscissae and items an int array saying which
search each point belongs to (the evaluator uses it to pick coefficient
tables, domain indices, ...).  noise is a per-point estimate of the absolute
evaluation noise floor; searches stop refining once they hit it.  One
evaluator call per iteration regardless of how many searches are active --
that is what keeps the ODE kernel batched.
"""

import numpy as np

from .errors import CountMismatch

_GOLDEN = 0.5 * (np.sqrt(5.0) - 1.0)  # 0.618...


def grid_scan(ev, items, lo, hi, npts):
    """Evaluate each search on its own uniform grid in one batched call.

    Returns (X, V, N) with shape (n_items, npts).
    """
    items = np.asarray(items, dtype=np.int64)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    k = items.size
    t = np.linspace(0.0, 1.0, npts)
    X = lo[:, None] + (hi - lo)[:, None] * t[None, :]
    vals, noise = ev(X.ravel(), np.repeat(items, npts))
    return X, vals.reshape(k, npts), noise.reshape(k, npts)


def golden_max(ev, items, a, b, *, rel_tol=1e-9, flat_factor=8.0, max_iter=90):
    """Lockstep golden-section maximization on brackets [a, b].

    Stops a search when its bracket is below rel_tol*(1+|x|) or when the
    value spread across the bracket has sunk into the noise floor (the
    peak is then flat and only a least-squares fit can do better; see
    parabola_fit_max).  Returns (x_best, f_best, width, noise_at_best).
    """
    items = np.asarray(items, dtype=np.int64)
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    k = items.size
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f, nz = ev(np.concatenate([x1, x2]), np.concatenate([items, items]))
    f1, f2 = f[:k], f[k:]
    n1, n2 = nz[:k], nz[k:]
    active = np.ones(k, dtype=bool)
    for _ in range(max_iter):
        width = b - a
        scale = 1.0 + np.maximum(np.abs(a), np.abs(b))
        flat = np.abs(f1 - f2) <= flat_factor * np.maximum(n1, n2)
        # only trust the flatness signal once the bracket has shrunk a bit,
        # otherwise a genuinely wide plateau would stop the search too early
        active &= width > rel_tol * scale
        active &= ~(flat & (width <= 1e-3 * scale))
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        go_left = f1[idx] > f2[idx]
        xl = idx[go_left]
        xr = idx[~go_left]
        # shrink toward the better interior point, reusing the survivor
        b[xl] = x2[xl]
        x2[xl], f2[xl], n2[xl] = x1[xl], f1[xl], n1[xl]
        x1[xl] = b[xl] - _GOLDEN * (b[xl] - a[xl])
        a[xr] = x1[xr]
        x1[xr], f1[xr], n1[xr] = x2[xr], f2[xr], n2[xr]
        x2[xr] = a[xr] + _GOLDEN * (b[xr] - a[xr])
        xs = np.concatenate([x1[xl], x2[xr]])
        its = np.concatenate([items[xl], items[xr]])
        v, nn = ev(xs, its)
        f1[xl], n1[xl] = v[: xl.size], nn[: xl.size]
        f2[xr], n2[xr] = v[xl.size:], nn[xl.size:]
    best_is_1 = f1 >= f2
    x_best = np.where(best_is_1, x1, x2)
    f_best = np.where(best_is_1, f1, f2)
    n_best = np.where(best_is_1, n1, n2)
    return x_best, f_best, b - a, n_best


def parabola_fit_max(ev, items, center, halfwidth, npts=11):
    """Least-squares quadratic fit around a flat peak; one batched call.

    Returns (x_vertex, f_vertex, curvature, noise_max) where curvature is the
    second derivative estimate (negative at a maximum).  The vertex is clipped
    to twice the stencil so garbage fits cannot fling it away.
    """
    items = np.asarray(items, dtype=np.int64)
    center = np.asarray(center, dtype=float)
    halfwidth = np.asarray(halfwidth, dtype=float)
    t = np.linspace(-1.0, 1.0, npts)
    X = center[:, None] + halfwidth[:, None] * t[None, :]
    vals, noise = ev(X.ravel(), np.repeat(items, npts))
    V = vals.reshape(items.size, npts)
    N = noise.reshape(items.size, npts)
    # same normalized Vandermonde for every item -> one pseudo-inverse
    A = np.vander(t, 3, increasing=True)          # [1, t, t^2]
    pinv = np.linalg.pinv(A)                      # (3, npts)
    coef = V @ pinv.T                             # (k, 3): c0 + c1 t + c2 t^2
    c0, c1, c2 = coef[:, 0], coef[:, 1], coef[:, 2]
    safe = c2 < 0
    tv = np.where(safe, -c1 / np.where(c2 == 0, -1.0, 2.0 * c2), 0.0)
    tv = np.clip(tv, -2.0, 2.0)
    xv = center + tv * halfwidth
    fv = c0 + c1 * tv + c2 * tv * tv
    curv = 2.0 * c2 / halfwidth**2
    return xv, fv, curv, N.max(axis=1)


def cubic_polish_max(ev, items, center, halfwidth, npts=11):
    """Least-squares cubic refit of a maximum; one batched call.

    A quadratic fit leaves an odd-order bias in the vertex (error ~ H^2 over
    the scale of the underlying function); carrying the t^3 term pushes that
    to H^3, so this pays off on a stencil wider than the parabola's.  Returns
    (x_vertex, f_vertex, curvature, noise_max); items whose fit has no
    interior maximum keep their center unchanged with curvature 0.
    """
    items = np.asarray(items, dtype=np.int64)
    center = np.asarray(center, dtype=float)
    halfwidth = np.asarray(halfwidth, dtype=float)
    t = np.linspace(-1.0, 1.0, npts)
    X = center[:, None] + halfwidth[:, None] * t[None, :]
    vals, noise = ev(X.ravel(), np.repeat(items, npts))
    V = vals.reshape(items.size, npts)
    N = noise.reshape(items.size, npts)
    A = np.vander(t, 4, increasing=True)          # [1, t, t^2, t^3]
    pinv = np.linalg.pinv(A)
    coef = V @ pinv.T
    c0, c1, c2, c3 = coef[:, 0], coef[:, 1], coef[:, 2], coef[:, 3]
    # stationary points of c1 + 2 c2 t + 3 c3 t^2; at the two roots f''/2
    # equals -+sqrt(disc), so the maximum is q/(3 c3) when c2 >= 0 and c1/q
    # otherwise (stable quadratic-root pair, no cancellation either way)
    disc = c2 * c2 - 3.0 * c1 * c3
    tiny = np.abs(c3) <= 1e-12 * np.maximum(np.abs(c2), 1e-300)
    quad_tv = -c1 / np.where(c2 == 0, -1.0, 2.0 * c2)
    with np.errstate(invalid="ignore", divide="ignore"):
        q = -(c2 + np.where(c2 >= 0, 1.0, -1.0) * np.sqrt(np.maximum(disc, 0.0)))
        root = np.where(c2 >= 0, q / (3.0 * np.where(c3 == 0, 1.0, c3)),
                        c1 / np.where(q == 0, 1.0, q))
    tv = np.where(tiny | (disc < 0), quad_tv, root)
    ok = (c2 + 3.0 * c3 * tv < 0) & (np.abs(tv) <= 2.0)
    tv = np.where(ok, tv, 0.0)
    xv = center + tv * halfwidth
    fv = ((c3 * tv + c2) * tv + c1) * tv + c0
    curv = np.where(ok, (2.0 * c2 + 6.0 * c3 * tv) / halfwidth**2, 0.0)
    return xv, fv, curv, N.max(axis=1)


def bracket_zeros(ev, items, lo, hi, flo, fhi, *, rel_tol=1e-13, max_iter=80):
    """Lockstep safeguarded secant/bisection on sign-change brackets.

    flo, fhi are the already-known values at the endpoints (opposite signs
    required).  Returns the root abscissae.
    """
    items = np.asarray(items, dtype=np.int64)
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    flo = np.array(flo, dtype=float)
    fhi = np.array(fhi, dtype=float)
    if np.any(flo * fhi > 0):
        raise ValueError("bracket_zeros needs sign changes on every bracket")
    active = np.ones(items.size, dtype=bool)
    x = 0.5 * (lo + hi)
    # Illinois bookkeeping: +1/-1 = which end the last replacement hit
    last_side = np.zeros(items.size, dtype=np.int8)
    for _ in range(max_iter):
        scale = 1.0 + np.maximum(np.abs(lo), np.abs(hi))
        active &= (hi - lo) > rel_tol * scale
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        # regula-falsi candidate, clipped into the middle 98% of the bracket
        denom = fhi[idx] - flo[idx]
        t = np.where(denom != 0.0, -flo[idx] / np.where(denom == 0.0, 1.0, denom), 0.5)
        t = np.clip(t, 0.01, 0.99)
        xc = lo[idx] + t * (hi[idx] - lo[idx])
        v, _ = ev(xc, items[idx])
        left = v * flo[idx] > 0  # candidate on the lo side of the root
        lo[idx] = np.where(left, xc, lo[idx])
        flo[idx] = np.where(left, v, flo[idx])
        hi[idx] = np.where(left, hi[idx], xc)
        fhi[idx] = np.where(left, fhi[idx], v)
        # Illinois: same end replaced twice running -> halve the stale value,
        # which stops regula falsi from stagnating against a curved function
        side = np.where(left, 1, -1).astype(np.int8)
        rep = side == last_side[idx]
        fhi[idx] = np.where(rep & left, 0.5 * fhi[idx], fhi[idx])
        flo[idx] = np.where(rep & ~left, 0.5 * flo[idx], flo[idx])
        last_side[idx] = side
        x[idx] = np.where(np.abs(flo[idx]) < np.abs(fhi[idx]), lo[idx], hi[idx])
    return x


def find_sign_changes(X, V):
    """Sign-change panels of scanned values; returns list of (col_lo, col_hi) per item."""
    out = []
    for i in range(V.shape[0]):
        s = np.sign(V[i])
        cross = np.nonzero(s[:-1] * s[1:] <= 0)[0]
        # collapse exact zeros counted twice
        keep = []
        for c in cross:
            if s[c] == 0 and keep and keep[-1] == c - 1:
                continue
            keep.append(int(c))
        out.append(keep)
    return out


def winding_numbers(ev_theta, items, npts=512, max_levels=12, tol=0.1):
    """Zero counts inside closed contours by the argument principle.

    ev_theta(thetas, items) -> complex values on the contour of each item.
    Segments whose phase jump exceeds pi/2 are bisected (batched per level).
    Raises CountMismatch when refinement cannot settle the winding or the
    total misses an integer by more than tol.
    """
    items = np.asarray(items, dtype=np.int64)
    k = items.size
    thetas = [np.linspace(0.0, 2.0 * np.pi, npts + 1) for _ in range(k)]
    base = ev_theta(np.concatenate([t[:-1] for t in thetas]), np.repeat(items, npts))
    vals = []
    pos = 0
    for i in range(k):
        v = np.empty(npts + 1, dtype=complex)
        v[:npts] = base[pos: pos + npts]
        v[npts] = v[0]
        if np.any(v == 0):
            raise CountMismatch("contour passes exactly through a zero")
        vals.append(v)
        pos += npts
    for _ in range(max_levels):
        need_i = []
        need_t = []
        for i in range(k):
            dphi = np.angle(vals[i][1:] / vals[i][:-1])
            bad = np.nonzero(np.abs(dphi) > 0.5 * np.pi)[0]
            for bseg in bad:
                need_i.append(i)
                need_t.append(0.5 * (thetas[i][bseg] + thetas[i][bseg + 1]))
        if not need_i:
            break
        new_vals = ev_theta(np.asarray(need_t), items[np.asarray(need_i, dtype=int)])
        for i, tm, vm in zip(need_i, need_t, new_vals):
            j = np.searchsorted(thetas[i], tm)
            thetas[i] = np.insert(thetas[i], j, tm)
            vals[i] = np.insert(vals[i], j, vm)
    counts = np.empty(k, dtype=int)
    for i in range(k):
        dphi = np.angle(vals[i][1:] / vals[i][:-1])
        if np.any(np.abs(dphi) > 0.5 * np.pi):
            raise CountMismatch("contour phase could not be resolved by refinement")
        w = dphi.sum() / (2.0 * np.pi)
        if abs(w - round(w)) > tol:
            raise CountMismatch(f"winding {w:.4f} is not within {tol} of an integer")
        counts[i] = int(round(w))
    return counts
