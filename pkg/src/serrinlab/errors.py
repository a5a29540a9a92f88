"""Exception hierarchy.

Validation errors map to CLI exit code 2, solver errors to exit code 3.
"""


class SerrinLabError(Exception):
    """Base class for all package errors."""


class ValidationError(SerrinLabError, ValueError):
    """Bad input: constants, geometry or configuration."""


class SolverError(SerrinLabError, RuntimeError):
    """Failure while meshing or solving."""


class NonPositiveC0(ValidationError):
    pass


class InvalidAngle(ValidationError):
    pass


class DegenerateDomain(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class MistaggedSample(ValidationError):
    pass


class NegativeDiscriminant(ValidationError):
    pass


class NonUnitDirection(ValidationError):
    pass


class SelfIntersection(ValidationError):
    pass


class LeavesDomain(ValidationError):
    pass


class DegenerateCorner(ValidationError):
    pass


class GaugeMismatch(ValidationError):
    pass


class OutsideDomain(ValidationError):
    pass


class InvertedElement(SolverError):
    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class MeshInvalid(SolverError):
    pass


class SingularSystem(SolverError):
    def __init__(self, message, condition_estimate=float("inf")):
        super().__init__(message)
        self.condition_estimate = condition_estimate
