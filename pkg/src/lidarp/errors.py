"""Exception hierarchy shared by the solver modules and the CLI.

The CLI maps these onto exit codes: ``InputError`` -> 1,
``NotApplicable`` / ``BudgetExceeded`` / ``LimitsExceeded`` -> 2.
"""


class LidarpError(Exception):
    """Base class for every error raised by this package."""


class InputError(LidarpError, ValueError):
    """Malformed or invalid input data."""

    code = "InputError"


class InstanceError(InputError):
    code = "InvalidInstance"


class MalformedInstance(InstanceError):
    code = "MalformedInstance"


class NonSymmetricDistances(InstanceError):
    code = "NonSymmetricDistances"


class ZeroDistance(InstanceError):
    code = "ZeroDistance"


class MonotoneViolation(InstanceError):
    code = "MonotoneViolation"


class BadWindow(InstanceError):
    code = "BadWindow"


class BadStopIndex(InstanceError):
    code = "BadStopIndex"


class BadAlpha(InstanceError):
    code = "BadAlpha"


class DuplicateRequestId(InstanceError):
    code = "DuplicateRequestId"


class MalformedSolution(InputError):
    code = "MalformedSolution"


class MalformedRoute(InputError):
    """A route breaks a structural invariant (alternation, monotone stops, ...)."""

    code = "MalformedRoute"


class DuplicateRequest(InputError):
    code = "DuplicateRequest"


class InvalidThreePartition(InputError):
    code = "InvalidThreePartition"


class BadCapacity(InputError):
    code = "BadCapacity"


class BadPartition(InputError):
    code = "BadPartition"


class NotApplicable(LidarpError):
    """The chosen algorithm does not cover this instance."""

    code = "NotApplicable"


class Windowed(NotApplicable):
    code = "Windowed"


class InfiniteHorizon(NotApplicable):
    code = "InfiniteHorizon"


class NotPolyCase(NotApplicable):
    code = "NotPolyCase"


class BudgetExceeded(LidarpError):
    """An enumeration cap was hit; exact solving was abandoned."""

    code = "BudgetExceeded"

    def __init__(self, message: str, cap: int | None = None):
        super().__init__(message)
        self.cap = cap


class LimitsExceeded(LidarpError):
    code = "LimitsExceeded"
