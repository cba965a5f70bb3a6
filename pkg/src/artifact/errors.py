"""Exception types raised across the package."""


class IdentificationError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(IdentificationError, ValueError):
    """An array argument has the wrong length or shape."""


class InvalidArgumentError(IdentificationError, ValueError):
    """A scalar argument is out of its legal range or not finite."""


class DomainError(IdentificationError, ValueError):
    """A state lies outside the system's state domain, or the domain is empty."""


class IntegrationDivergedError(IdentificationError, RuntimeError):
    """The integrator produced a non-finite state."""

    def __init__(self, message, last_finite_time):
        super().__init__(f"{message} (last finite time t={last_finite_time!r})")
        self.last_finite_time = last_finite_time


class ProtocolViolationError(IdentificationError, ValueError):
    """Records that should share an initial condition do not."""


class InsufficientDataError(IdentificationError, ValueError):
    pass


class InfeasibleDesignError(IdentificationError, ValueError):
    pass


class DegenerateDesignError(IdentificationError, ValueError):
    """The input differences do not excite every input direction."""


class ExperimentError(IdentificationError, RuntimeError):
    """Wraps an upstream failure with the (anchor, input) indices of the experiment."""

    def __init__(self, message, anchor_index=None, input_index=None):
        where = ""
        if anchor_index is not None:
            where = f" [anchor {anchor_index}, input {input_index}]"
        super().__init__(message + where)
        self.anchor_index = anchor_index
        self.input_index = input_index


class ConfigError(IdentificationError, ValueError):
    """Unknown scenario, bad override key, or bad override value."""
