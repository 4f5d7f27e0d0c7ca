"""Exception hierarchy shared by all modules."""


class SqfreeError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(SqfreeError, ValueError):
    pass


class PrecisionExceeded(SqfreeError, IndexError):
    """A coefficient beyond the known precision was requested."""


class NeedsMorePrimes(SqfreeError):
    pass


class MalformedFile(SqfreeError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class InconsistentData(SqfreeError):
    def __init__(self, message, violations=()):
        self.violations = list(violations)
        super().__init__(message)


class QuadratureFailure(SqfreeError):
    pass


class EstimationFailure(SqfreeError):
    pass


class BasisIncomplete(SqfreeError):
    """Raised when a decomposition system is rank deficient."""


class DecompositionFailure(SqfreeError):
    pass


class InternalInconsistency(SqfreeError):
    pass
