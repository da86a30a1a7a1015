"""Exception types shared across the package.

Everything raised on purpose derives from SpectralError so callers (and the
CLI) can tell deliberate failures from genuine bugs.
"""


class SpectralError(Exception):
    """Base class for all deliberate failures."""


class NonFinite(SpectralError):
    """Integration or evaluation produced inf/nan (state overflow)."""


class DomainError(SpectralError):
    """Input lies outside the domain an operation is defined on."""


class AmbiguousSelection(SpectralError):
    """Two Floquet multipliers are too close to pick one reliably."""


class CountMismatch(SpectralError):
    """A zero/eigenvalue count disagrees with what the theory demands."""


class RealnessViolation(SpectralError):
    """A quantity that must be real on the search interval came out complex."""


class NormalizationFailure(SpectralError):
    """An eigenfunction or Floquet vector cannot be normalized as required."""


class PositivityFailure(SpectralError):
    """The Floquet solution lost positivity where it must stay positive."""


class NonRealData(SpectralError):
    """Spectral data expected to be real carries a non-real part."""


class JacobianSingular(SpectralError):
    """Newton Jacobian numerically singular (condition number too large)."""


class BlowUp(SpectralError):
    """Time integration of the flow exceeded the amplitude guard."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class NoConvergence(SpectralError):
    """Newton iteration hit its budget without meeting the tolerance.

    Carries diagnostics: best iterate found, residual-norm history and the
    last Jacobian condition number.
    """

    def __init__(self, message, best=None, history=None, condition=None):
        super().__init__(message)
        self.best = best
        self.history = list(history) if history is not None else []
        self.condition = condition


class BallNormWarning(UserWarning):
    """Coefficients leave the perturbative ball the theory is stated on."""
