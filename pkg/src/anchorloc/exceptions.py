"""Exception hierarchy shared across the package."""


class AnchorLocError(Exception):
    """Base class for all package errors."""


class DomainError(AnchorLocError, ValueError):
    """Input lies outside the mathematical domain of an operation."""


class ConfigurationError(AnchorLocError, ValueError):
    """A configuration object violates its invariants."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DetectionError(AnchorLocError):
    """Base class for single-shot spectral detection failures."""


class NoDetection(DetectionError):
    pass


class AmbiguousDetection(DetectionError):
    pass


class PairingError(AnchorLocError):
    pass


class CalibrationFailed(AnchorLocError):
    pass


class ExtrapolationError(AnchorLocError, ValueError):
    pass


class SchemaError(AnchorLocError, ValueError):
    """A serialized file has the wrong type or schema version."""
