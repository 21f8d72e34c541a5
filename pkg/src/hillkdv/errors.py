"""Exception types shared across the package."""


class HillKdvError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(HillKdvError):
    """Malformed configuration, input file or parameter combination."""


class SpectralError(HillKdvError):
    """A spectral computation violated a structural guarantee.

    Raised when something that is true in exact arithmetic (interlacing of
    band edges, positivity of the ground state, unit Wronskian, ...) fails
    beyond the numerical tolerance.  This always signals a pipeline bug or
    an unusable discretisation, never a property of the input potential.
    """


class QuadratureError(HillKdvError):
    """Gap quadrature failed to converge within the node budget."""


class FlowError(HillKdvError):
    """Time integration aborted (blow-up detection).

    Attributes:
        time: last trusted time.
        last_state: spectrum of the last trusted state (complex ndarray).
    """

    def __init__(self, message, time=None, last_state=None):
        super().__init__(message)
        self.time = time
        self.last_state = last_state
