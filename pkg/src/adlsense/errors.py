"""Exception types shared across the package."""


class AdlSenseError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(AdlSenseError):
    """A window or report document could not be parsed.

    Carries the 1-based line number when the failure is tied to a line.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(AdlSenseError):
    """Parsed data violates a documented invariant (timestamps, ranges)."""


class ConfigError(AdlSenseError):
    """A configuration value is out of its documented domain."""


class DataError(AdlSenseError):
    """Inputs are structurally valid but outside an operation's domain."""


class SensorUnavailableError(AdlSenseError):
    """A required sensor stream is absent from a window."""

    def __init__(self, sensor, stage=None):
        self.sensor = sensor
        self.stage = stage
        msg = f"required sensor '{sensor}' is not available"
        if stage is not None:
            msg += f" (stage: {stage})"
        super().__init__(msg)


class UnsupportedDeviceError(AdlSenseError):
    """Device sensor set cannot run any recognition (no accelerometer)."""


class DivergenceError(AdlSenseError):
    """Training produced a non-finite loss."""

    def __init__(self, iteration, message="training diverged (non-finite loss)"):
        super().__init__(f"{message} at iteration {iteration}")
        self.iteration = iteration


class ModelLoadError(AdlSenseError):
    """A model document is truncated, corrupt, or shape-inconsistent."""
