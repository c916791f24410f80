"""Exception hierarchy shared by every module."""


class GMSSCError(Exception):
    """Base class for all errors raised by this package."""


class InvalidRequestError(GMSSCError, ValueError):
    """A request is malformed or does not fit the item universe."""


class DimensionError(GMSSCError, ValueError):
    """Matrix or permutation sizes do not agree."""


class InfeasibleMatrixError(GMSSCError, ValueError):
    """A matrix violates the doubly stochastic constraints beyond tolerance."""


class InstanceFormatError(GMSSCError, ValueError):
    """An instance document could not be parsed.

    ``request_index`` is set when the problem is localised to one request.
    """

    def __init__(self, message, request_index=None):
        if request_index is not None:
            message = f"request {request_index}: {message}"
        super().__init__(message)
        self.request_index = request_index


class DeskScaleError(GMSSCError):
    """An exact enumeration would exceed the configured size cap."""

    def __init__(self, what, count, cap):
        super().__init__(f"{what}: {count} exceeds the desk-scale cap of {cap}")
        self.what = what
        self.count = count
        self.cap = cap


class WrongDemandError(GMSSCError, ValueError):
    """An operation restricted to demand-1 requests received another demand."""


class SolverError(GMSSCError, RuntimeError):
    """The LP backend failed on a problem that should always be solvable."""
