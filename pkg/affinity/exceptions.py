class AffinityError(Exception):
    """Base class for every error raised by this package."""


class InputError(AffinityError, ValueError):
    """The caller handed in something the operation cannot accept."""


class UnsupportedDimensionError(InputError):
    pass


class PreconditionError(InputError):
    """A verified geometric precondition (e.g. cone membership) does not hold."""


class NumericalError(AffinityError, ArithmeticError):
    """Overflow, a numerically singular product, or a root outside its bracket."""


class ResourceError(AffinityError, RuntimeError):
    """The requested word tree exceeds the configured leaf cap."""


class AffinityWarning(UserWarning):
    pass
