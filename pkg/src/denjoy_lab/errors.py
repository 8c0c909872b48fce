"""Exception hierarchy.

Precondition-style failures derive from ``ValueError`` so callers can treat
them as bad input; invariant violations derive from ``RuntimeError``.  The CLI
maps the first family to exit code 2 and the second to exit code 3.
"""


class DenjoyLabError(Exception):
    pass


class DomainError(DenjoyLabError, ValueError):
    """An argument lies outside the domain of an operation."""


class PreconditionError(DenjoyLabError, ValueError):
    """A documented precondition of an operation does not hold."""


class RegimeError(PreconditionError):
    """The Hölder exponents are on the wrong side of sum(taus) = 1."""


class CapacityError(PreconditionError):
    pass


class ConfigError(PreconditionError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InternalError(DenjoyLabError, RuntimeError):
    """Something that the theory rules out happened anyway."""


class InvariantViolation(InternalError):
    pass


class ChainNotFound(InternalError):
    pass


class IntegrityError(InternalError):
    """A map handed to an estimator is not a monotone degree-one lift."""
