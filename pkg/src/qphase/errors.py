"""Exception hierarchy shared by the library and the CLI."""


class QPhaseError(Exception):
    """Base class for all errors raised by qphase."""


class ParameterError(QPhaseError, ValueError):
    """An argument is outside its admissible range."""


class DomainError(QPhaseError, ValueError):
    """A grid or integration window does not cover the required support."""


class ContractError(QPhaseError):
    """Inputs are individually valid but violate a joint precondition."""


class AccuracyError(QPhaseError):
    """The requested quantity cannot be computed to the stated accuracy."""


class UnsupportedDepthError(AccuracyError):
    """Finite-difference depth beyond what the routine supports."""


class StabilityError(QPhaseError):
    """Time step too large for the propagator's accuracy bound."""


class AliasingError(QPhaseError):
    """Spectral content reaches the edge of the momentum grid."""
