"""Exception hierarchy.

Each class maps to one CLI exit code (see ``cli.EXIT_CODES``).
"""


class GoodShadowsError(Exception):
    """Base class for all package errors."""


class DomainError(GoodShadowsError, ValueError):
    """Input outside the domain of an operation (chart, radius, norm...)."""


class PreconditionError(GoodShadowsError):
    """A documented precondition of an operation does not hold.

    ``witness`` carries the offending sample when one is known.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class GeneralPositionError(PreconditionError):
    """Hyperplane normals are linearly dependent."""


class NoSupportError(PreconditionError):
    """The query point lies strictly inside the convex hull."""


class CapabilityError(GoodShadowsError):
    """The object lacks the data an operation needs (Hessian, chart...)."""


class NumericalPrecisionError(GoodShadowsError):
    """Round-off dominates the requested computation."""


class InconsistencyError(GoodShadowsError):
    """An outcome the theory rules out; signals integrator failure."""


class ConfigError(GoodShadowsError):
    """Scenario / run-config resolution failure."""

    def __init__(self, message, key=None, line=None):
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.key = key
        self.line = line


class GenerationError(GoodShadowsError):
    """A scenario generator produced samples violating its contract."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness
