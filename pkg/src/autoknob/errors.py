"""Exception types shared across the package."""


class KnobError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(KnobError):
    """A knob, goal, or file entry that the caller relies on is missing or invalid."""


class FileFormatError(ConfigurationError):
    """A text file failed to parse. Carries the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SynthesisError(KnobError):
    """Controller synthesis cannot produce usable parameters."""


class InsufficientDataError(SynthesisError):
    """Profiling data is too thin to fit a model (fewer than two usable groups)."""


class DegenerateGainError(SynthesisError):
    """The fitted gain is numerically zero; the knob does not move the metric."""
