"""Boussinesq evolution of the coefficient pair and isospectrality checks.

The system on the circle,

    p_t = q_x,      q_t = -(1/3) (p_xxx + 4 (p^2)_x),

is the compatibility flow of the third-order operator's Lax pair: the branch
points r_n^+- of the Floquet surface are constants of motion.  Both right
sides are full x-derivatives, so zero means are preserved exactly; the
quadratic term is evaluated pointwise on a double-size grid (2M points for
an M-mode state), which dealiases the product exactly rather than by the
2/3 truncation rule.

Time stepping is classical RK4 on the Fourier coefficients.  The linear
dispersion is omega_k = (2 pi k)^2 / sqrt(3); RK4 on the imaginary axis is
stable up to |omega dt| = 2 sqrt(2), which for the top mode k = M/2 means
dt <= (2 sqrt 2 sqrt 3 / pi^2) / M^2 ~ 0.4964 / M^2.  The guard uses that
exact constant; feeding the classical-looking 0.5/M^2 would let the top
mode grow from roundoff by ~5% per step.

Conserved diagnostics: H = int( q^2/2 + p_x^2/6 - 4 p^3/9 ) dx and
P = int( p q ) dx; both follow from the equations by parts and are recorded
per snapshot (the spectrum itself is the deep invariant; these two are
cheap independent cross-checks).
"""

from dataclasses import dataclass

import numpy as np

from .errors import BlowUp, DomainError
from .floquet_surface import SurfaceWorkspace
from .ode_engine import DEFAULT_STEPS
from .periodic_fn import CoefficientPair, TrigSeries, check_ball

RK4_STABILITY_C = 2.0 * np.sqrt(2.0) * np.sqrt(3.0) / np.pi**2  # ~0.49636
BLOWUP_SUP = 1e3
DEFAULT_MODES = 64


@dataclass
class FlowState:
    """One snapshot of the evolution."""

    t: float
    p: TrigSeries
    q: TrigSeries
    modes: int

    def pair(self):
        return CoefficientPair(self.p, self.q)


def _to_spec(series, M):
    """Complex harmonic vector c[0..M/2], f = 2 Re sum c_k e^{2 pi i k x}."""
    half = M // 2
    a, b = series.cos_coeffs, series.sin_coeffs
    if max(a.size, b.size) > half:
        raise DomainError(
            f"state carries harmonics above M/2 = {half}; raise modes")
    c = np.zeros(half + 1, dtype=complex)
    c[1:a.size + 1] += 0.5 * a
    c[1:b.size + 1] -= 0.5j * b
    return c


def _to_series(c):
    a = 2.0 * c[1:].real
    b = -2.0 * c[1:].imag
    return TrigSeries(a, b)


def _grid_values(c, G):
    """Sample the series on G uniform points (G >= 2*(len(c)-1))."""
    pad = np.zeros(G // 2 + 1, dtype=complex)
    pad[:c.size] = c
    return np.fft.irfft(pad * G, n=G)


def _rhs_spec(cp, cq, ik, G):
    """Time derivative in coefficient space; exact dealiasing via the 2M grid."""
    v = _grid_values(cp, G)
    sq = np.fft.rfft(v * v)[:cp.size] / G
    dp = ik * cq
    dq = -(ik**3 * cp + 4.0 * ik * sq) / 3.0
    return dp, dq


def rhs(state):
    """(p_t, q_t) of one state, as TrigSeries."""
    M = state.modes
    cp, cq = _to_spec(state.p, M), _to_spec(state.q, M)
    ik = 2j * np.pi * np.arange(M // 2 + 1)
    dp, dq = _rhs_spec(cp, cq, ik, 2 * M)
    return _to_series(dp), _to_series(dq)


def flow_state(u, modes=DEFAULT_MODES, t=0.0):
    """Wrap a coefficient pair as an evolution state."""
    M = int(modes)
    if M < 4 or M % 2:
        raise DomainError("modes must be an even integer >= 4")
    # validates the harmonic budget right away
    _to_spec(u.p, M), _to_spec(u.q, M)
    return FlowState(float(t), u.p, u.q, M)


def evolve(state0, dt, t_end, snapshot_times=None):
    """RK4 evolution; returns FlowState snapshots at the requested times.

    Snapshot times snap to the step grid (they must sit within dt/2 of a
    multiple of dt).  dt may be negative for backward evolution.
    """
    M = state0.modes
    dt = float(dt)
    if dt == 0.0:
        raise DomainError("dt must be nonzero")
    if abs(dt) > RK4_STABILITY_C / M**2 * (1.0 + 1e-12):
        raise DomainError(
            f"dt = {dt:g} violates the RK4 stability bound "
            f"{RK4_STABILITY_C:.4f}/M^2 = {RK4_STABILITY_C / M**2:.3e}")
    n_steps = int(round((float(t_end) - state0.t) / dt))
    if n_steps < 0 or abs(state0.t + n_steps * dt - float(t_end)) > abs(dt) / 2:
        raise DomainError("t_end is not reachable from t0 with this dt")
    if snapshot_times is None:
        snapshot_times = [float(t_end)]
    snap_steps = {}
    for ts in snapshot_times:
        k = int(round((float(ts) - state0.t) / dt))
        if k < 0 or k > n_steps or abs(state0.t + k * dt - float(ts)) > abs(dt) / 2:
            raise DomainError(f"snapshot time {ts} is off the step grid")
        snap_steps.setdefault(k, float(ts))

    cp, cq = _to_spec(state0.p, M), _to_spec(state0.q, M)
    ik = 2j * np.pi * np.arange(M // 2 + 1)
    G = 2 * M
    out = []

    def emit(k):
        if k in snap_steps:
            out.append(FlowState(state0.t + k * dt, _to_series(cp),
                                 _to_series(cq), M))

    emit(0)
    for m in range(1, n_steps + 1):
        k1p, k1q = _rhs_spec(cp, cq, ik, G)
        k2p, k2q = _rhs_spec(cp + 0.5 * dt * k1p, cq + 0.5 * dt * k1q, ik, G)
        k3p, k3q = _rhs_spec(cp + 0.5 * dt * k2p, cq + 0.5 * dt * k2q, ik, G)
        k4p, k4q = _rhs_spec(cp + dt * k3p, cq + dt * k3q, ik, G)
        cp = cp + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        cq = cq + dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        sup = np.max(np.abs(_grid_values(cp, G)))
        if not np.isfinite(sup) or sup > BLOWUP_SUP:
            raise BlowUp(f"sup |p| = {sup:.3e} at t = {state0.t + m * dt:.6g}",
                         t=state0.t + m * dt)
        emit(m)
    return out


def energy(state):
    """H = int( q^2/2 + p_x^2/6 - 4 p^3/9 ) dx, conserved under the flow."""
    M = state.modes
    cp, cq = _to_spec(state.p, M), _to_spec(state.q, M)
    k = np.arange(M // 2 + 1)
    quad = 2.0 * np.sum(0.5 * np.abs(cq) ** 2
                        + (2.0 * np.pi * k) ** 2 * np.abs(cp) ** 2 / 6.0)
    cubic = np.mean(_grid_values(cp, 2 * M) ** 3)
    return float(quad - 4.0 * cubic / 9.0)


def momentum(state):
    """P = int p q dx, the second conserved diagnostic."""
    cp, cq = _to_spec(state.p, state.modes), _to_spec(state.q, state.modes)
    return float(2.0 * np.sum((cp * np.conj(cq)).real))


def isospectral_check(state0, times, n_list, dt=1e-4, steps=DEFAULT_STEPS):
    """Max relative drift of r_n^+- along the flow, per index in n_list.

    All snapshots' branch points are located in one lockstep batch; drift is
    |r(t) - r(0)| / (1 + |r(0)|), maximized over snapshots and the +-/edge.
    """
    # the reference snapshot is always the initial state itself
    times = sorted({float(t) for t in times} | {float(state0.t)})
    snaps = evolve(state0, dt, times[-1], snapshot_times=times)
    for s in snaps:
        check_ball(s.pair())
    pairs, star = [], []
    for j, s in enumerate(snaps):
        u = s.pair()
        pairs += [u, u.star()]
        star += [2 * j + 1, 2 * j]
    ws = SurfaceWorkspace(pairs, star, steps)
    ns = [int(n) for n in n_list]
    tabs_all = [2 * j for j in range(len(snaps)) for _ in ns]
    ns_all = ns * len(snaps)
    bps = ws.locate_pairs(tabs_all, ns_all)
    drift = {}
    k = len(ns)
    for i, n in enumerate(ns):
        r0m, r0p = bps[i].lam_minus, bps[i].lam_plus
        worst = 0.0
        for j in range(1, len(snaps)):
            b = bps[j * k + i]
            worst = max(worst,
                        abs(b.lam_minus - r0m) / (1.0 + abs(r0m)),
                        abs(b.lam_plus - r0p) / (1.0 + abs(r0p)))
        drift[n] = worst
    return drift
