"""Exception types raised by ptsim."""


class PTSimError(Exception):
    """Base class for all ptsim errors."""


class ExceptionalPointError(PTSimError, ValueError):
    """Raised when an operation is undefined at (or too close to) an EP."""


class BranchTrackingError(PTSimError):
    """Raised when branch assignment along a path is ambiguous."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class FrequencyMismatchError(PTSimError, ValueError):
    """Drive frequencies leave a residual oscillation in the rotating frame."""

    def __init__(self, residual):
        super().__init__(
            f"omega_1 + omega_2 - omega_3 - omega_4 = {residual!r} != 0; "
            "rotating-frame Hamiltonian is time dependent"
        )
        self.residual = residual


class IntegrationError(PTSimError, RuntimeError):
    """Time integration failed or drifted out of tolerance."""


class ReadoutError(PTSimError, ValueError):
    """A simulated readout carries no usable phase information."""


class LowSignalError(ReadoutError):
    pass


class AmbiguousBranchError(ReadoutError):
    pass


class EPDegenerateError(AmbiguousBranchError):
    """Both eigenstate hypotheses coincide near an exceptional point."""


class ProtocolError(PTSimError):
    """Wraps an error raised inside one stage of the detection protocol."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


class ConfigError(PTSimError, ValueError):
    """Invalid run configuration."""
