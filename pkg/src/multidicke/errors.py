"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: validation errors exit 1, numerical
errors exit 2, resource-cap errors exit 3.
"""


class MultidickeError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(MultidickeError, ValueError):
    """Invalid user input or arguments violating an operation contract."""


class NumericalError(MultidickeError, ArithmeticError):
    """A computation could not reach the requested accuracy."""


class PrecisionExhausted(NumericalError):
    """Requested accuracy unattainable at the configured precision_bits."""


class DivergentIntegral(NumericalError):
    """Integral to infinity of a non-decaying term."""


class IntegratorError(NumericalError):
    """The ODE integrator failed to meet its tolerance."""


class HorizonError(NumericalError):
    """Long-time limit not stationary at the integration horizon."""


class CutoffError(NumericalError):
    """Fock-space truncation inadequate (tail population too large)."""


class ResourceCapError(MultidickeError):
    """A configurable resource cap (lattice size, dimension) was exceeded."""
