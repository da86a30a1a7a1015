"""Command-line front end: spectra, identity checks, inversion, flow runs.

Four subcommands over one config vocabulary:

    bqspec spectrum coeffs.json --out spec.json    forward map + rho profile
    bqspec verify   coeffs.json                    identity suite, pass/fail
    bqspec invert   spec.json   --out rec.json     Newton reconstruction
    bqspec flow     coeffs.json --out traj.csv     Boussinesq run + drift

Settings come from an optional JSON config file (--config) with flags taking
precedence.  Everything downstream is deterministic, so identical inputs and
settings reproduce outputs bitwise.  Exit codes: 0 ok, 2 bad input or
out-of-domain parameters, 3 count mismatch, 4 identity failure, 5 Newton
non-convergence, 6 flow blow-up.  The first stderr line of any failure is
machine-parsable: "ERROR <code> <module>: <message>".

Numeric CSV output carries 17 significant digits in scientific notation so a
round trip through text loses nothing.
"""

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .boussinesq_flow import evolve, flow_state, isospectral_check
from .errors import (BlowUp, CountMismatch, DomainError, NoConvergence,
                     SpectralError)
from .floquet_surface import (SurfaceWorkspace, locate_branch_points,
                              multipliers, real_trace, select_tau)
from .hill_side import hill_spectra
from .ode_engine import DEFAULT_STEPS, ThirdOrderPropagator
from .periodic_fn import CoefficientPair, load_coefficients
from .spectral_map import INVERT_STEPS, SpectralData, forward_map, invert_map
from .three_point import locate_mu

_MODULE_OF = {
    "spectrum": "spectral_map",
    "verify": "cli",
    "invert": "spectral_map",
    "flow": "boussinesq_flow",
}


def _fmt(x):
    """17 significant digits, scientific -- the documented CSV number format."""
    return f"{float(x):.16e}"


def _first_line_error(code, module, message):
    text = " ".join(str(message).split()) or "unknown error"
    print(f"ERROR {code} {module}: {text}", file=sys.stderr)
    return code


# -- configuration -----------------------------------------------------------

@dataclass
class RunConfig:
    """Everything a run needs; config-file keys match the field names."""

    command: str
    input_path: str
    out_path: str = None
    n_max: int = 3
    ode_steps: int = None        # None -> per-command default
    root_tol: float = 1e-12     # closed-gap classification tolerance
    newton_tol: float = 1e-8    # inversion stopping tolerance
    verify_tol: float = 1e-6    # scale for the identity suite
    max_iter: int = 30
    threads: int = 1
    t_end: float = 0.1
    dt: float = 1e-4
    modes: int = 64
    snapshots: int = 11

    def validate(self):
        if self.n_max < 1:
            raise DomainError("n_max must be >= 1")
        for name in ("root_tol", "newton_tol", "verify_tol", "t_end", "dt"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.ode_steps is not None and self.ode_steps < 16:
            raise DomainError("ode_steps must be at least 16")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")
        if self.threads < 1:
            raise DomainError("threads must be >= 1")
        if self.snapshots < 2:
            raise DomainError("snapshots must be >= 2")
        return self


_CONFIG_KEYS = {f.name for f in fields(RunConfig)} - {"command"}

#: which config field the generic --tol flag lands on, per subcommand
_TOL_FIELD = {"spectrum": "root_tol", "invert": "newton_tol",
              "verify": "verify_tol", "flow": None}

_DEFAULT_OUT = {"spectrum": "spectrum.json", "invert": "recovered.json",
                "flow": "flow.csv"}


class _Parser(argparse.ArgumentParser):
    # argparse's own failures must still honor the first-line error contract
    def error(self, message):
        _first_line_error(2, "cli", message)
        raise SystemExit(2)


def _make_parser():
    ap = _Parser(prog="bqspec",
                 description="third-order periodic spectra and their inverses")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, blurb in (("spectrum", "forward spectral map of a coefficient pair"),
                        ("verify", "run the identity suite on a coefficient pair"),
                        ("invert", "reconstruct coefficients from spectral data"),
                        ("flow", "integrate the Boussinesq flow, check drift")):
        p = sub.add_parser(name, help=blurb)
        p.add_argument("input", help="input JSON (coefficients, or spectral "
                                     "data for invert)")
        p.add_argument("--config", help="JSON file with RunConfig fields")
        p.add_argument("--out", help=f"output path (default: "
                                     f"{_DEFAULT_OUT.get(name, 'stdout')})")
        p.add_argument("--n-max", type=int, dest="n_max")
        p.add_argument("--ode-steps", type=int, dest="ode_steps")
        p.add_argument("--tol", type=float,
                       help="main tolerance of the subcommand (closed-gap "
                            "classification / Newton stop / identity scale)")
        p.add_argument("--max-iter", type=int, dest="max_iter")
        p.add_argument("--threads", type=int)
        if name == "flow":
            p.add_argument("--t-end", type=float, dest="t_end")
            p.add_argument("--dt", type=float)
            p.add_argument("--modes", type=int)
    return ap


def _build_config(args):
    settings = {}
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict):
            raise DomainError("config file must hold a JSON object")
        unknown = set(doc) - _CONFIG_KEYS
        if unknown:
            raise DomainError(f"unknown config field(s) {sorted(unknown)}")
        settings.update(doc)
    for name in ("out_path", "n_max", "ode_steps", "max_iter", "threads",
                 "t_end", "dt", "modes"):
        v = getattr(args, name if name != "out_path" else "out", None)
        if v is not None:
            settings[name] = v
    if getattr(args, "tol", None) is not None:
        field = _TOL_FIELD[args.command]
        if field:
            settings[field] = args.tol
    settings.setdefault("out_path", _DEFAULT_OUT.get(args.command))
    return RunConfig(command=args.command, input_path=args.input,
                     **settings).validate()


def _load_u(path):
    """Coefficient JSON, bare {"p","q"} or wrapped under "coefficients"."""
    with open(path) as fh:
        doc = json.load(fh)
    if isinstance(doc, dict) and "coefficients" in doc:
        doc = doc["coefficients"]
    try:
        return load_coefficients(doc)
    except ValueError as e:
        raise DomainError(str(e)) from None


def _aux_path(out_path, suffix):
    stem = out_path[:-5] if out_path.endswith(".json") else out_path
    stem = stem[:-4] if stem.endswith(".csv") else stem
    return f"{stem}.{suffix}"


# -- spectrum ----------------------------------------------------------------

def cmd_spectrum(cfg):
    u = _load_u(cfg.input_path)
    steps = cfg.ode_steps or DEFAULT_STEPS
    sd = forward_map(u, cfg.n_max, steps=steps, closed_rtol=cfg.root_tol)
    bp0 = locate_branch_points(u, 0, steps=steps)

    # rho along every real trace, one batched sweep, for external plotting
    csv_path = _aux_path(cfg.out_path, "rho.csv")
    ws = SurfaceWorkspace([u, u.star()], [1, 0], steps)
    npts = 161
    ns = [n for n in range(-cfg.n_max, cfg.n_max + 1)]
    lams = np.concatenate([np.linspace(*real_trace(n), npts) for n in ns])
    rho, noise = ws.rho_real(lams, np.zeros(lams.size, dtype=np.int64))
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "lambda", "rho", "noise"])
        for i, n in enumerate(ns):
            for j in range(npts):
                k = i * npts + j
                w.writerow([n, _fmt(lams[k]), _fmt(rho[k]), _fmt(noise[k])])

    doc = {
        "n_max": cfg.n_max,
        "ball_norm": u.ball_norm(),
        "spectral_data": sd.to_dict(),
        "diagnostics": {"r0_minus": bp0.lam_minus, "r0_plus": bp0.lam_plus,
                        "r0_closed": bp0.closed},
        "rho_csv": csv_path,
    }
    with open(cfg.out_path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(f"spectrum: {2 * cfg.n_max} data rows -> {cfg.out_path}; "
          f"rho profile ({len(ns) * npts} points) -> {csv_path}")
    return 0


# -- verify ------------------------------------------------------------------

def _rows_unimodular(u, cfg, steps):
    prop = ThirdOrderPropagator(u, steps)
    th = np.linspace(0.0, 2 * np.pi, 41)[:-1]
    lams = np.concatenate([500.0 * np.exp(1j * th), 250.0 * np.exp(1j * th),
                           np.linspace(-500.0, 500.0, 20) + 0j])
    M1, _, ok = prop.monodromy_batch(lams)
    if not np.all(ok == 1):
        raise DomainError("monodromy integration failed on the check grid")
    det_dev = float(np.max(np.abs(np.linalg.det(M1) - 1.0)))
    tau_dev = 0.0
    for lam in (-100.0, 7.0, 320.0):
        t = multipliers(u, lam, steps=steps)
        tau_dev = max(tau_dev, abs(np.prod(t) - 1.0))
    ws = SurfaceWorkspace([u, u.star()], [1, 0], steps)
    z = ws.rho_complex(np.array([40.0 + 9.0j, 40.0 - 9.0j]), [0, 0])
    conj_dev = float(abs(z[1] - np.conj(z[0])) / (1.0 + abs(z[0])))
    return [
        ("det M = 1 on a 100-point |lambda| <= 500 grid", det_dev, 1e-9),
        ("multiplier product tau1 tau2 tau3 = 1", tau_dev, 1e-9),
        ("discriminant conjugation rho(conj) = conj rho", conj_dev, 1e-10),
    ]


def _rows_branch_symmetry(u, cfg, steps):
    tol = cfg.verify_tol
    variants = [u, u.star(), u.reflect(), u.star_reflect()]
    ws = SurfaceWorkspace(variants, [1, 0, 3, 2], steps)
    ns = [n for n in range(1, cfg.n_max + 1)]
    ns += [-n for n in ns]
    k = len(ns)
    tabs = [t for t in range(4) for _ in ns]
    bps = ws.locate_pairs(tabs, ns * 4, closed_rtol=1e-12)
    r = {(t, n): (bps[t * k + i].lam_minus, bps[t * k + i].lam_plus)
         for t in range(4) for i, n in enumerate(ns)}

    def dev(a, b):  # scaled deviation of two (r-, r+) tuples
        s = 1.0 + max(abs(x) for x in a)
        return max(abs(a[0] - b[0]), abs(a[1] - b[1])) / s

    flip = lambda t: (-t[1], -t[0])  # lam -> -lam swaps the pair order
    d_refl = max(dev(r[0, n], r[2, n]) for n in ns)
    d_star = max(dev(r[0, n], flip(r[1, -n])) for n in ns)
    d_sr = max(dev(r[0, n], flip(r[3, -n])) for n in ns)
    d_star_refl = max(dev(r[1, n], r[3, n]) for n in ns)

    mu_tabs = [0] * k + [3] * k
    mus = ws.locate_mu(mu_tabs, ns * 2)
    d_mu = max(abs(mus[i] + mus[k + (i + cfg.n_max) % k])  # pair n with -n
               / (1.0 + abs(mus[i]))
               for i in range(k))
    slack = max((max(r[0, n][0] - mus[i], mus[i] - r[0, n][1])
                 - bps[i].edge_sigma)
                / (1.0 + abs(mus[i])) for i, n in enumerate(ns))
    return [
        ("branch points under reflection  r(u) = r(u-)", d_refl, tol),
        ("branch points under star  r_n(u) = -r_{-n}(u*) swapped", d_star, tol),
        ("branch points under star-reflection", d_sr, tol),
        ("branch points of u* under reflection", d_star_refl, tol),
        ("3-point eigenvalue symmetry  mu_{-n}(u) = -mu_n(u*-)", d_mu, tol),
        ("3-point containment  r- <= mu <= r+ (scaled slack)", slack, 1e-8),
    ]


def _rows_counts(u, cfg, steps):
    ws = SurfaceWorkspace([u, u.star()], [1, 0], steps)
    ns = list(range(0, cfg.n_max + 1)) + [-n for n in range(1, cfg.n_max + 1)]
    crho = ws.count_zeros([0] * len(ns), ns, kind="rho")
    d_rho = float(np.max(np.abs(np.asarray(crho) - 2)))
    ns_f = [n for n in ns if n != 0]
    cf = ws.count_zeros([0] * len(ns_f), ns_f, kind="dirichlet")
    d_f = float(np.max(np.abs(np.asarray(cf) - 1)))
    return [
        ("contour count: 2 discriminant zeros per domain", d_rho, 0.5),
        ("contour count: 1 three-point eigenvalue per domain", d_f, 0.5),
    ]


def _rows_hill(u, cfg, steps):
    tol = cfg.verify_tol
    ns = list(range(1, min(cfg.n_max, 4) + 1))
    hs = hill_spectra(u, ns, steps=steps)
    ustar = u.star()
    d_e = d_m = d_phi = d_branch = 0.0
    for h in hs:
        bp = locate_branch_points(u, h.n, steps=steps, verify_count=False)
        em = 0.75 * abs(bp.lam_minus) ** (2.0 / 3.0)
        ep = 0.75 * abs(bp.lam_plus) ** (2.0 / 3.0)
        d_e = max(d_e, abs(em - h.E_minus) / abs(h.E_minus),
                  abs(ep - h.E_plus) / abs(h.E_plus))
        eig = locate_mu(ustar, -h.n, steps=steps, verify_count=False)
        d_m = max(d_m, abs(0.75 * (-eig.mu) ** (2.0 / 3.0) - h.gm) / abs(h.gm))
        tau = select_tau(u, -eig.mu, steps=steps)
        s = tau ** -0.5
        d_branch = max(d_branch, abs(np.imag(s)) / abs(s),
                       1.0 if np.real(s) <= 0 else 0.0)
        d_phi = max(d_phi, abs(eig.y1_prime * np.real(s) - h.phi1_prime)
                    / abs(h.phi1_prime))
    return [
        ("Hill pair E vs branch-point energies (3/4) r^{2/3}", d_e, tol),
        ("Hill Dirichlet energy vs 3-point eigenvalue image", d_m, tol),
        ("tau^{-1/2} real positive on the Dirichlet points", d_branch, tol),
        ("phi'(1, m) product identity across the two pipelines", d_phi, tol),
    ]


_VERIFY_GROUPS = (_rows_unimodular, _rows_branch_symmetry, _rows_counts,
                  _rows_hill)


def cmd_verify(cfg):
    u = _load_u(cfg.input_path)
    if u.ball_norm() >= 1.0:
        print(f"note: ball norm {u.ball_norm():.3g} >= 1; identities may "
              "fail out of regime")
    steps = cfg.ode_steps or DEFAULT_STEPS
    # groups are pure and independent; the pool fans them out, the table
    # keeps its fixed order regardless of completion order
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        futures = [pool.submit(g, u, cfg, steps) for g in _VERIFY_GROUPS]
        rows = [row for f in futures for row in f.result()]
    failed = None
    print(f"{'identity':<56} {'status':<7} {'max dev':>10} {'tol':>9}")
    for label, dev, tol in rows:
        ok = dev <= tol
        if not ok and failed is None:
            failed = (label, dev, tol)
        print(f"{label:<56} {'PASS' if ok else 'FAIL':<7} "
              f"{dev:>10.3e} {tol:>9.1e}")
    if failed:
        label, dev, tol = failed
        return _first_line_error(
            4, "cli", f"identity '{label}' failed (dev {dev:.3e}, tol {tol:.1e})")
    print(f"all {len(rows)} identities pass")
    return 0


# -- invert ------------------------------------------------------------------

def cmd_invert(cfg):
    with open(cfg.input_path) as fh:
        doc = json.load(fh)
    if isinstance(doc, dict) and "spectral_data" in doc:
        doc = doc["spectral_data"]
    try:
        target = SpectralData.from_dict(doc)
    except (KeyError, TypeError, ValueError) as e:
        raise DomainError(f"bad spectral data document: {e}") from None
    steps = cfg.ode_steps or INVERT_STEPS
    hist_path = _aux_path(cfg.out_path, "history.json")

    def _write(u, converged, history, iterations, condition, residual):
        with open(cfg.out_path, "w") as fh:
            json.dump(u.to_dict(), fh, indent=2)
            fh.write("\n")
        with open(hist_path, "w") as fh:
            json.dump({"converged": converged, "iterations": iterations,
                       "residuals": list(map(float, history)),
                       "condition": condition, "final_residual": residual},
                      fh, indent=2)
            fh.write("\n")

    try:
        u, info = invert_map(target, tol=cfg.newton_tol, max_iter=cfg.max_iter,
                             steps=steps, full_output=True)
    except NoConvergence as e:
        best = e.best if e.best is not None else CoefficientPair()
        _write(best, False, e.history, len(e.history) - 1, e.condition,
               e.history[-1] if e.history else None)
        _first_line_error(5, "spectral_map", e)
        print(f"residual history ({len(e.history)} entries) -> {hist_path}",
              file=sys.stderr)
        return 5
    _write(u, True, info["history"], info["iterations"], info["condition"],
           info["residual"])
    print(f"invert: converged in {info['iterations']} iterations, residual "
          f"{info['residual']:.3e} -> {cfg.out_path} (history: {hist_path})")
    return 0


# -- flow --------------------------------------------------------------------

def cmd_flow(cfg):
    u = _load_u(cfg.input_path)
    state0 = flow_state(u, modes=cfg.modes)
    times = np.linspace(0.0, cfg.t_end, cfg.snapshots)
    snaps = evolve(state0, cfg.dt, cfg.t_end, snapshot_times=times)

    K = cfg.modes // 2
    header = (["t"]
              + [f"p_cos_{k}" for k in range(1, K + 1)]
              + [f"p_sin_{k}" for k in range(1, K + 1)]
              + [f"q_cos_{k}" for k in range(1, K + 1)]
              + [f"q_sin_{k}" for k in range(1, K + 1)])
    with open(cfg.out_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for s in snaps:
            pair = s.pair()
            row = [_fmt(s.t)]
            for series in (pair.p, pair.q):
                a = np.zeros(K)
                b = np.zeros(K)
                a[:series.order] = series.cos_coeffs
                b[:series.order] = series.sin_coeffs
                row += [_fmt(x) for x in a] + [_fmt(x) for x in b]
            w.writerow(row)

    ns = list(range(1, min(cfg.n_max, 2) + 1))
    ns += [-n for n in ns]
    drift = isospectral_check(state0, [cfg.t_end], ns, dt=cfg.dt,
                              steps=cfg.ode_steps or DEFAULT_STEPS)
    drift_path = _aux_path(cfg.out_path, "drift.json")
    with open(drift_path, "w") as fh:
        json.dump({"t_end": cfg.t_end, "dt": cfg.dt, "modes": cfg.modes,
                   "drift": {str(n): drift[n] for n in sorted(drift)}},
                  fh, indent=2)
        fh.write("\n")
    worst = max(drift.values())
    print(f"flow: {round(cfg.t_end / cfg.dt)} steps to t={cfg.t_end:g}, "
          f"{len(snaps)} snapshots -> {cfg.out_path}; max drift {worst:.3e} "
          f"-> {drift_path}")
    return 0


# -- entry point ---------------------------------------------------------------

_DISPATCH = {"spectrum": cmd_spectrum, "verify": cmd_verify,
             "invert": cmd_invert, "flow": cmd_flow}


def main(argv=None):
    try:
        args = _make_parser().parse_args(argv)
    except SystemExit as e:
        return e.code
    module = _MODULE_OF[args.command]
    try:
        cfg = _build_config(args)
    except json.JSONDecodeError as e:
        return _first_line_error(2, "cli", f"malformed JSON in config: {e.msg} "
                                 f"at line {e.lineno} column {e.colno} "
                                 f"(char {e.pos})")
    except (DomainError, ValueError, TypeError, OSError) as e:
        return _first_line_error(2, "cli", e)
    try:
        return _DISPATCH[cfg.command](cfg)
    except json.JSONDecodeError as e:
        return _first_line_error(2, module, f"malformed JSON in "
                                 f"{cfg.input_path}: {e.msg} at line "
                                 f"{e.lineno} column {e.colno} (char {e.pos})")
    except CountMismatch as e:
        return _first_line_error(3, module, e)
    except BlowUp as e:
        t = f" (t = {e.t:g})" if e.t is not None else ""
        return _first_line_error(6, module, f"{e}{t}")
    except (DomainError, ValueError, OSError) as e:
        return _first_line_error(2, module, e)
    except SpectralError as e:
        # remaining deliberate failures are regime/validation problems
        return _first_line_error(2, module, e)


if __name__ == "__main__":
    sys.exit(main())
