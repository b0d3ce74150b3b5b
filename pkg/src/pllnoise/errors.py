"""Exception types raised across the toolkit."""


class PllNoiseError(Exception):
    """Base class for all toolkit errors."""


class DomainError(PllNoiseError, ValueError):
    """An argument lies outside the domain of the operation."""


class IncompleteParamsError(DomainError):
    """A parameter needed for evaluation is absent (partial fit)."""


class ParseError(PllNoiseError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingMetadataError(ParseError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"missing required metadata key '{key}'")


class TraceValidationError(PllNoiseError, ValueError):
    """A PSD trace violates one of its invariants."""


class InsufficientPointsError(DomainError):
    pass


class SectionPatternError(PllNoiseError, ValueError):
    """Segment slope classes cannot be mapped onto the four-section shape."""

    def __init__(self, message: str, runs: tuple[str, ...] = ()):
        self.runs = tuple(runs)
        if runs:
            message = f"{message} (run sequence: {' -> '.join(runs)})"
        super().__init__(message)


class MixedCarrierError(PllNoiseError, ValueError):
    """Parameter sets to be aggregated do not share one carrier frequency."""


class FormatError(PllNoiseError, ValueError):
    """A serialized artifact does not match its schema."""


class ParameterWarning(UserWarning):
    """Parameters are evaluable but outside the four-section interpretation."""


class SlopeDeviationWarning(UserWarning):
    """A steep section deviates from the ideal -30 dB/decade roll-off."""
