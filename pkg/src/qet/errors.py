"""Exception hierarchy. Every error raised by qet derives from QETError."""


class QETError(Exception):
    pass


class InvalidParams(QETError, ValueError):
    pass


class InvalidDims(InvalidParams):
    pass


class InvalidProfile(InvalidParams):
    pass


class DomainViolation(InvalidParams):
    """Arguments fall outside the validity domain of a closed-form result."""


class NotHermitian(QETError, ValueError):
    pass


class ConvergenceFailure(QETError, RuntimeError):
    pass


class NonFiniteInput(QETError, ValueError):
    pass


class BlockOutOfRange(QETError, IndexError):
    pass


class IndexOutOfRange(QETError, IndexError):
    pass


class ShapeMismatch(QETError, ValueError):
    pass


class ResonantSpectrum(QETError, ValueError):
    """The Hamiltonian is degenerate or has resonant gaps."""


class ExpansionTooLarge(QETError, MemoryError):
    pass


class HypothesisViolated(QETError):
    """A theorem's dimension hypothesis fails and no override was given."""

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


class ConfigError(QETError, ValueError):
    """Invalid experiment configuration; ``errors`` is a list of (field, message)."""

    def __init__(self, errors):
        self.errors = list(errors)
        msg = "; ".join(f"{field}: {message}" for field, message in self.errors)
        super().__init__(msg or "invalid configuration")
