"""Exception types shared across the package."""


class QuasineutralError(Exception):
    """Base class for all package-specific errors."""


class GridMismatch(QuasineutralError):
    """Fields from different grids were combined."""


class NonZeroMean(QuasineutralError):
    """An operation requiring a zero-mean field received one with mass."""


class NotPositive(QuasineutralError):
    """A density lost pointwise positivity."""


class EllipticityLost(QuasineutralError):
    """The linearized Monge-Ampere operator dropped below the ellipticity floor."""


class NoConvergence(QuasineutralError):
    """An iteration hit its cap before reaching the requested tolerance."""


class StepRejected(QuasineutralError):
    """A time step produced an inadmissible state and must be retried smaller."""


class DegenerateFit(QuasineutralError):
    """All errors sit below the noise floor; a rate slope would be meaningless."""


class UnknownKind(QuasineutralError):
    """An unrecognized base-flow kind was requested."""


class ParseError(QuasineutralError):
    """Config text that cannot be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ValidationError(QuasineutralError):
    """A parsed config value violates an invariant; carries the field name."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
