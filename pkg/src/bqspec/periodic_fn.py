"""Real 1-periodic functions with zero mean, stored as finite trig series.

The operator coefficients live here: a pair u = (p, q) of zero-mean
1-periodic functions.  Everything downstream (monodromy, spectra, the
Boussinesq flow) consumes this representation.  Coefficients follow the
convention

    f(x) = sum_k  a_k cos(2 pi k x) + b_k sin(2 pi k x),   k = 1..order,

so there is no constant term by construction; input that tries to smuggle
one in is rejected.
"""

import json
import warnings

import numpy as np

from .errors import BallNormWarning

# radius of the perturbative ball the theory is quantitative on; operations
# warn (never fail) when a coefficient pair leaves it
BALL_RADIUS = 0.1


class TrigSeries:
    """Finite trig series with zero mean.

    cos_coeffs[k-1], sin_coeffs[k-1] hold the coefficients of harmonic k.
    Instances are treated as immutable; all operations return new objects.
    """

    def __init__(self, cos_coeffs=(), sin_coeffs=()):
        a = np.atleast_1d(np.asarray(cos_coeffs, dtype=float))
        b = np.atleast_1d(np.asarray(sin_coeffs, dtype=float))
        n = max(a.size, b.size)
        self.cos_coeffs = np.zeros(n)
        self.sin_coeffs = np.zeros(n)
        self.cos_coeffs[: a.size] = a
        self.sin_coeffs[: b.size] = b

    @property
    def order(self):
        return self.cos_coeffs.size

    def __call__(self, x):
        """Evaluate at x (scalar or array); vectorized over x."""
        x = np.asarray(x, dtype=float)
        if self.order == 0:
            return np.zeros_like(x)
        k = np.arange(1, self.order + 1)
        phase = 2.0 * np.pi * np.multiply.outer(x, k)
        return np.cos(phase) @ self.cos_coeffs + np.sin(phase) @ self.sin_coeffs

    def derivative(self):
        """Termwise derivative; maps (a_k, b_k) -> (2 pi k b_k, -2 pi k a_k)."""
        k = 2.0 * np.pi * np.arange(1, self.order + 1)
        return TrigSeries(k * self.sin_coeffs, -k * self.cos_coeffs)

    def reflect(self):
        """x -> f(1 - x), i.e. (a_k, b_k) -> (a_k, -b_k).  Exact sign flip."""
        return TrigSeries(self.cos_coeffs, -self.sin_coeffs)

    def __neg__(self):
        return TrigSeries(-self.cos_coeffs, -self.sin_coeffs)

    def __add__(self, other):
        n = max(self.order, other.order)
        a = np.zeros(n)
        b = np.zeros(n)
        a[: self.order] = self.cos_coeffs
        b[: self.order] = self.sin_coeffs
        a[: other.order] += other.cos_coeffs
        b[: other.order] += other.sin_coeffs
        return TrigSeries(a, b)

    def __mul__(self, c):
        return TrigSeries(c * self.cos_coeffs, c * self.sin_coeffs)

    __rmul__ = __mul__

    def l2_norm_sq(self):
        """Integral of f^2 over one period (Parseval)."""
        return 0.5 * float(np.sum(self.cos_coeffs**2 + self.sin_coeffs**2))

    def to_dict(self):
        return {"cos": list(self.cos_coeffs), "sin": list(self.sin_coeffs)}

    @classmethod
    def from_dict(cls, d):
        if d is None:
            return cls()
        bad = set(d) - {"cos", "sin"}
        if bad:
            raise ValueError(
                f"unsupported coefficient field(s) {sorted(bad)}; zero mean is "
                "mandatory and only 'cos'/'sin' arrays are accepted"
            )
        return cls(d.get("cos", ()), d.get("sin", ()))

    def __repr__(self):
        return f"TrigSeries(cos={list(self.cos_coeffs)}, sin={list(self.sin_coeffs)})"


class CoefficientPair:
    """Operator coefficients u = (p, q), each a zero-mean TrigSeries."""

    def __init__(self, p=None, q=None):
        self.p = p if p is not None else TrigSeries()
        self.q = q if q is not None else TrigSeries()

    def star(self):
        """u* = (p, -q)."""
        return CoefficientPair(self.p, -self.q)

    def reflect(self):
        """u^-(x) = u(1-x), applied to both components."""
        return CoefficientPair(self.p.reflect(), self.q.reflect())

    def star_reflect(self):
        """u*^- : reflection of the starred pair (order does not matter)."""
        return CoefficientPair(self.p.reflect(), -self.q.reflect())

    def ball_norm(self):
        """(|p'|_{L2}^2 + |q|_{L2}^2)^{1/2}, the smallness measure of the theory."""
        return float(np.sqrt(self.p.derivative().l2_norm_sq() + self.q.l2_norm_sq()))

    def is_zero(self):
        return (
            not np.any(self.p.cos_coeffs)
            and not np.any(self.p.sin_coeffs)
            and not np.any(self.q.cos_coeffs)
            and not np.any(self.q.sin_coeffs)
        )

    def to_dict(self):
        return {"p": self.p.to_dict(), "q": self.q.to_dict()}

    @classmethod
    def from_dict(cls, d):
        bad = set(d) - {"p", "q"}
        if bad:
            raise ValueError(f"unsupported top-level field(s) {sorted(bad)} in coefficients")
        return cls(TrigSeries.from_dict(d.get("p")), TrigSeries.from_dict(d.get("q")))

    def __repr__(self):
        return f"CoefficientPair(p={self.p!r}, q={self.q!r})"


def apply_symmetry(u, which):
    """Apply one of the involutions 'star', 'reflect', 'star_reflect' to u."""
    try:
        return {
            "star": u.star,
            "reflect": u.reflect,
            "star_reflect": u.star_reflect,
        }[which]()
    except KeyError:
        raise ValueError(f"unknown symmetry {which!r}") from None


def ball_norm(u):
    return u.ball_norm()


def check_ball(u, radius=BALL_RADIUS):
    """Warn (don't fail) when u leaves the perturbative ball."""
    r = u.ball_norm()
    if r > radius:
        warnings.warn(
            f"ball norm {r:.4g} exceeds {radius}; theory is only quantitative "
            "inside the ball",
            BallNormWarning,
            stacklevel=2,
        )
    return r


def load_coefficients(source):
    """Read a CoefficientPair from a JSON file path, file object, or dict."""
    if isinstance(source, dict):
        return CoefficientPair.from_dict(source)
    if hasattr(source, "read"):
        return CoefficientPair.from_dict(json.load(source))
    with open(source) as fh:
        return CoefficientPair.from_dict(json.load(fh))


def dump_coefficients(u, path):
    with open(path, "w") as fh:
        json.dump(u.to_dict(), fh, indent=2)
        fh.write("\n")
