"""Exception hierarchy shared by all modules."""


class WCSmoothError(Exception):
    """Base class for library errors."""


class ParameterError(WCSmoothError, ValueError):
    """An argument violates a documented precondition."""


class CapabilityError(WCSmoothError):
    """The requested operation needs an oracle or structure the object lacks."""


class ConvergenceError(WCSmoothError):
    """An iterative routine stopped before meeting its tolerance.

    The last iterate is kept in ``last`` and any diagnostics in ``info``.
    """

    def __init__(self, message, last=None, info=None):
        super().__init__(message)
        self.last = last
        self.info = dict(info or {})


class SmoothnessBlowup(ConvergenceError):
    """Line search exceeded its doubling cap."""
