"""Exception hierarchy shared by all modules.

Every failure raised by the library derives from ``NumericalError`` or
``ValidationError`` so the command line can map them onto exit codes.
"""

from __future__ import annotations


class NNLSError(Exception):
    """Base class for library failures."""


class ValidationError(NNLSError, ValueError):
    """Inputs violate a precondition before any numerics run."""


class NumericalError(NNLSError, ArithmeticError):
    """A computation could not produce a trustworthy result."""


class NonDecayedPotential(ValidationError):
    pass


class NonDecayingInput(ValidationError):
    pass


class DegenerateAmplitudes(ValidationError):
    pass


class SingularAssembly(ValidationError):
    pass


class CountMismatch(NumericalError):
    pass


class OverflowGuard(NumericalError):
    pass


class SpectralSingularity(NumericalError):
    pass


class BoundaryZero(NumericalError):
    pass


class NewtonDivergence(NumericalError):
    pass


class RatioInconsistent(NumericalError):
    pass


class ZeroNotSimple(NumericalError):
    pass


class StencilHitsPole(NumericalError):
    pass


class IllConditioned(NumericalError):
    pass


class NoContraction(NumericalError):
    pass


class DiscriminantVanishes(NumericalError):
    pass


class BlowupGuard(NumericalError):
    """Raised only when the caller asks the integrator to fail hard."""

    def __init__(self, message: str, aborted_at: float):
        super().__init__(message)
        self.aborted_at = aborted_at
