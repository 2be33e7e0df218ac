"""Exception hierarchy. The CLI maps these onto exit statuses."""


class ZoomFoolError(Exception):
    """Base class for everything this package raises on purpose."""


class ConfigError(ZoomFoolError):
    """Invalid configuration or arguments (CLI exit 2)."""


class OracleError(ZoomFoolError):
    """Classifier backend failure (CLI exit 3)."""


class ModelLoadError(OracleError):
    """Model file missing, unparsable, or runtime unavailable."""


class TransportError(OracleError):
    """HTTP failure or non-conforming response body."""


class CapabilityMissingError(OracleError):
    """Backend does not declare the capability the call needs."""


class CleanMisclassificationError(ZoomFoolError):
    """The clean sample is already misclassified, so there is nothing to attack."""

    def __init__(self, expected: int, got: int):
        super().__init__(
            f"clean sample predicted as class {got}, expected ground truth {expected}"
        )
        self.expected = expected
        self.got = got


class SweepAbortedError(OracleError):
    """Oracle failed mid-sweep; carries the partial trace."""

    def __init__(self, message: str, trace):
        super().__init__(message)
        self.trace = trace
