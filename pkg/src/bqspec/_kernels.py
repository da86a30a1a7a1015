"""Fixed-step RK8 integration kernels (numba).

All kernels integrate linear systems whose coefficients are known analytically
at every stage abscissa, so the coefficient tables are precomputed once per
(pair, step count) and reused for every lambda in a batch.  Tables are indexed
[table, step-in-unit, stage]; integrating over several unit periods just wraps
the step index, which is exact for 1-periodic coefficients.

Kernels are dtype-generic: outputs are allocated by the caller (float64 for
real lambda, complex128 on contours) and numba specializes per signature.

ok codes: 1 = fine, 0 = state overflow / non-finite, 2 = division guard hit
(Floquet factor too close to zero in the coupled kernel).
"""

import numpy as np
from numba import njit

from ._tableau import A, B, C, N_STAGES  # noqa: F401  (C used by table builders)

_OVF = 1e300


@njit(cache=True)
def mono3_kernel(lam, tabsel, P, DP, Q, steps, n_units, h, M1, M2, ok):
    """Monodromy of y''' + 2 p y' + (p' + q) y = lam y, batched over lam.

    Integrates the full 3x3 fundamental system column by column and stores
    the transposed fundamental matrix at x = 1 (and x = 2 when n_units == 2),
    i.e. M[j, k] = (d/dx)^k phi_{j+1}(x) -- row j is solution j.
    """
    n = lam.shape[0]
    a_tab = A
    b_tab = B
    for i in range(n):
        t = tabsel[i]
        lam_i = lam[i]
        # fundamental state, columns are the three normalized solutions
        Y = np.zeros((3, 3), dtype=M1.dtype)
        Y[0, 0] = 1.0
        Y[1, 1] = 1.0
        Y[2, 2] = 1.0
        K = np.empty((N_STAGES, 3, 3), dtype=M1.dtype)
        G = np.empty((3, 3), dtype=M1.dtype)
        good = True
        total = steps * n_units
        for m in range(total):
            row = m % steps
            for s in range(N_STAGES):
                for r in range(3):
                    for c in range(3):
                        G[r, c] = Y[r, c]
                for j in range(s):
                    aij = a_tab[s, j]
                    if aij != 0.0:
                        w = h * aij
                        for r in range(3):
                            for c in range(3):
                                G[r, c] += w * K[j, r, c]
                a0 = lam_i - DP[t, row, s] - Q[t, row, s]
                a1 = -2.0 * P[t, row, s]
                for c in range(3):
                    K[s, 0, c] = G[1, c]
                    K[s, 1, c] = G[2, c]
                    K[s, 2, c] = a0 * G[0, c] + a1 * G[1, c]
            for s in range(N_STAGES):
                bs = h * b_tab[s]
                if bs != 0.0:
                    for r in range(3):
                        for c in range(3):
                            Y[r, c] += bs * K[s, r, c]
            mag = abs(Y[0, 0]) + abs(Y[1, 1]) + abs(Y[2, 2])
            if not (mag < _OVF):
                good = False
                break
            if m == steps - 1:
                for r in range(3):
                    for c in range(3):
                        M1[i, r, c] = Y[c, r]
        if good and n_units == 2:
            for r in range(3):
                for c in range(3):
                    M2[i, r, c] = Y[c, r]
        ok[i] = 1 if good else 0


@njit(cache=True)
def traj3_kernel(lam, tabsel, P, DP, Q, steps, n_units, h, y0, traj, ok):
    """Single-solution trajectory of the third-order equation.

    traj[i, m, :] holds (y, y', y'') at x = m*h; m = 0..steps*n_units.
    """
    n = lam.shape[0]
    a_tab = A
    b_tab = B
    for i in range(n):
        t = tabsel[i]
        lam_i = lam[i]
        y = np.empty(3, dtype=traj.dtype)
        for r in range(3):
            y[r] = y0[i, r]
            traj[i, 0, r] = y[r]
        K = np.empty((N_STAGES, 3), dtype=traj.dtype)
        G = np.empty(3, dtype=traj.dtype)
        good = True
        total = steps * n_units
        for m in range(total):
            row = m % steps
            for s in range(N_STAGES):
                for r in range(3):
                    G[r] = y[r]
                for j in range(s):
                    aij = a_tab[s, j]
                    if aij != 0.0:
                        w = h * aij
                        for r in range(3):
                            G[r] += w * K[j, r]
                a0 = lam_i - DP[t, row, s] - Q[t, row, s]
                a1 = -2.0 * P[t, row, s]
                K[s, 0] = G[1]
                K[s, 1] = G[2]
                K[s, 2] = a0 * G[0] + a1 * G[1]
            for s in range(N_STAGES):
                bs = h * b_tab[s]
                if bs != 0.0:
                    for r in range(3):
                        y[r] += bs * K[s, r]
            mag = abs(y[0]) + abs(y[1]) + abs(y[2])
            if not (mag < _OVF):
                good = False
                break
            for r in range(3):
                traj[i, m + 1, r] = y[r]
        ok[i] = 1 if good else 0


@njit(cache=True)
def hill2_kernel(E, tabsel, V, steps, h, W, ok):
    """Fundamental 2x2 system of -u'' + V u = E u over one period.

    W[i] = [[theta(1), phi(1)], [theta'(1), phi'(1)]].
    """
    n = E.shape[0]
    a_tab = A
    b_tab = B
    for i in range(n):
        t = tabsel[i]
        E_i = E[i]
        Y = np.zeros((2, 2), dtype=W.dtype)
        Y[0, 0] = 1.0
        Y[1, 1] = 1.0
        K = np.empty((N_STAGES, 2, 2), dtype=W.dtype)
        G = np.empty((2, 2), dtype=W.dtype)
        good = True
        for m in range(steps):
            for s in range(N_STAGES):
                for r in range(2):
                    for c in range(2):
                        G[r, c] = Y[r, c]
                for j in range(s):
                    aij = a_tab[s, j]
                    if aij != 0.0:
                        w = h * aij
                        for r in range(2):
                            for c in range(2):
                                G[r, c] += w * K[j, r, c]
                a = V[t, m, s] - E_i
                for c in range(2):
                    K[s, 0, c] = G[1, c]
                    K[s, 1, c] = a * G[0, c]
            for s in range(N_STAGES):
                bs = h * b_tab[s]
                if bs != 0.0:
                    for r in range(2):
                        for c in range(2):
                            Y[r, c] += bs * K[s, r, c]
            mag = abs(Y[0, 0]) + abs(Y[1, 1])
            if not (mag < _OVF):
                good = False
                break
        if good:
            for r in range(2):
                for c in range(2):
                    W[i, r, c] = Y[r, c]
        ok[i] = 1 if good else 0


@njit(cache=True)
def dirichlet_shoot_kernel(lam, tabsel, P, DP, Q, steps, h, G, ok):
    """Renormalized shooting function for the 3-point problem, real lam.

    The determinant F(lam) = phi_2(1) phi_3(2) - phi_3(1) phi_2(2) cancels
    catastrophically on the positive axis (two O(e^{3z}) products with an
    O(e^{1.5z}) difference).  Here the two y(0)=0 solutions are integrated
    with Gram-Schmidt renormalization every step, the y(1)=0 direction is
    formed from O(1) quantities at x = 1, and that single solution is carried
    to x = 2 under positive rescaling.  The result G has exactly the zeros
    and sign changes of F (all scale factors are positive and continuous),
    at full relative precision.  ok = 2 flags the degenerate case where every
    y(0)=0 solution vanishes at x = 1.
    """
    n = lam.shape[0]
    a_tab = A
    b_tab = B
    for i in range(n):
        t = tabsel[i]
        lam_i = lam[i]
        Y = np.zeros((3, 2))  # columns: the two y(0) = 0 solutions
        Y[1, 0] = 1.0
        Y[2, 1] = 1.0
        K = np.empty((N_STAGES, 3, 2))
        Gst = np.empty((3, 2))
        good = 1
        for m in range(steps):
            for s in range(N_STAGES):
                for r in range(3):
                    for c in range(2):
                        Gst[r, c] = Y[r, c]
                for j in range(s):
                    aij = a_tab[s, j]
                    if aij != 0.0:
                        w = h * aij
                        for r in range(3):
                            for c in range(2):
                                Gst[r, c] += w * K[j, r, c]
                a0 = lam_i - DP[t, m, s] - Q[t, m, s]
                a1 = -2.0 * P[t, m, s]
                for c in range(2):
                    K[s, 0, c] = Gst[1, c]
                    K[s, 1, c] = Gst[2, c]
                    K[s, 2, c] = a0 * Gst[0, c] + a1 * Gst[1, c]
            for s in range(N_STAGES):
                bs = h * b_tab[s]
                if bs != 0.0:
                    for r in range(3):
                        for c in range(2):
                            Y[r, c] += bs * K[s, r, c]
            # Gram-Schmidt; all factors positive so signs stay continuous
            na = np.sqrt(Y[0, 0] ** 2 + Y[1, 0] ** 2 + Y[2, 0] ** 2)
            if not (na > 0.0 and na < _OVF):
                good = 0
                break
            for r in range(3):
                Y[r, 0] /= na
            proj = Y[0, 0] * Y[0, 1] + Y[1, 0] * Y[1, 1] + Y[2, 0] * Y[2, 1]
            for r in range(3):
                Y[r, 1] -= proj * Y[r, 0]
            nb = np.sqrt(Y[0, 1] ** 2 + Y[1, 1] ** 2 + Y[2, 1] ** 2)
            if not (nb > 0.0 and nb < _OVF):
                good = 0
                break
            for r in range(3):
                Y[r, 1] /= nb
        if good != 1:
            G[i] = np.nan
            ok[i] = good
            continue
        # the y(1) = 0 combination of the orthonormal pair
        wv = np.empty(3)
        for r in range(3):
            wv[r] = -Y[0, 1] * Y[r, 0] + Y[0, 0] * Y[r, 1]
        nw = np.sqrt(wv[0] ** 2 + wv[1] ** 2 + wv[2] ** 2)
        if nw < 1e-14:
            G[i] = np.nan
            ok[i] = 2
            continue
        for r in range(3):
            wv[r] /= nw
        Kv = np.empty((N_STAGES, 3))
        Gv = np.empty(3)
        for m in range(steps):
            for s in range(N_STAGES):
                for r in range(3):
                    Gv[r] = wv[r]
                for j in range(s):
                    aij = a_tab[s, j]
                    if aij != 0.0:
                        w = h * aij
                        for r in range(3):
                            Gv[r] += w * Kv[j, r]
                a0 = lam_i - DP[t, m, s] - Q[t, m, s]
                a1 = -2.0 * P[t, m, s]
                Kv[s, 0] = Gv[1]
                Kv[s, 1] = Gv[2]
                Kv[s, 2] = a0 * Gv[0] + a1 * Gv[1]
            for s in range(N_STAGES):
                bs = h * b_tab[s]
                if bs != 0.0:
                    for r in range(3):
                        wv[r] += bs * Kv[s, r]
            nv = np.sqrt(wv[0] ** 2 + wv[1] ** 2 + wv[2] ** 2)
            if not (nv > 0.0 and nv < _OVF):
                good = 0
                break
            for r in range(3):
                wv[r] /= nv
        if good != 1:
            G[i] = np.nan
            ok[i] = 0
            continue
        G[i] = wv[0]
        ok[i] = 1


@njit(cache=True)
def coupled_hill_kernel(lam, tabsel, P, DP, Q, steps, h, f0, W, f1, fmin, ok):
    """Third-order Floquet factor and its induced Hill system, integrated together.

    State: (f, f', f'') solving the third-order equation at lam, plus the
    fundamental pair (theta, phi) of  -u'' + (V - E) u = 0  where
    V - E = -2 p - 1.5 f''/f + 0.75 (f'/f)^2  is evaluated from the current
    f-state at every stage, keeping the full RK order.  Real lambda only.

    fmin tracks the minimum of f over step ends (positivity diagnostic);
    ok = 2 flags a division guard hit (f too close to zero).
    """
    n = lam.shape[0]
    a_tab = A
    b_tab = B
    for i in range(n):
        t = tabsel[i]
        lam_i = lam[i]
        S = np.empty(7, dtype=np.float64)
        for r in range(3):
            S[r] = f0[i, r]
        S[3] = 1.0  # theta(0)
        S[4] = 0.0
        S[5] = 0.0  # phi(0)
        S[6] = 1.0
        K = np.empty((N_STAGES, 7), dtype=np.float64)
        G = np.empty(7, dtype=np.float64)
        good = 1
        fm = S[0]
        for m in range(steps):
            for s in range(N_STAGES):
                for r in range(7):
                    G[r] = S[r]
                for j in range(s):
                    aij = a_tab[s, j]
                    if aij != 0.0:
                        w = h * aij
                        for r in range(7):
                            G[r] += w * K[j, r]
                if abs(G[0]) < 1e-12:
                    good = 2
                    break
                a0 = lam_i - DP[t, m, s] - Q[t, m, s]
                a1 = -2.0 * P[t, m, s]
                ratio1 = G[1] / G[0]
                ratio2 = G[2] / G[0]
                w_hill = a1 - 1.5 * ratio2 + 0.75 * ratio1 * ratio1
                K[s, 0] = G[1]
                K[s, 1] = G[2]
                K[s, 2] = a0 * G[0] + a1 * G[1]
                K[s, 3] = G[4]
                K[s, 4] = w_hill * G[3]
                K[s, 5] = G[6]
                K[s, 6] = w_hill * G[5]
            if good != 1:
                break
            for s in range(N_STAGES):
                bs = h * b_tab[s]
                if bs != 0.0:
                    for r in range(7):
                        S[r] += bs * K[s, r]
            mag = abs(S[0]) + abs(S[3]) + abs(S[5])
            if not (mag < _OVF):
                good = 0
                break
            if S[0] < fm:
                fm = S[0]
        if good == 1:
            for r in range(3):
                f1[i, r] = S[r]
            W[i, 0, 0] = S[3]
            W[i, 0, 1] = S[5]
            W[i, 1, 0] = S[4]
            W[i, 1, 1] = S[6]
        fmin[i] = fm
        ok[i] = good
