"""Exception hierarchy shared by all modules."""


class RPFBMError(Exception):
    """Base class for every error raised by this package."""


class ParamError(RPFBMError, ValueError):
    """A model parameter lies outside its admissible range."""


class RangeError(RPFBMError, ValueError):
    """An evaluation point lies outside the domain of an operation."""


class DimensionError(RPFBMError, ValueError):
    pass


class ShapeError(RPFBMError, ValueError):
    pass


class PoleError(RPFBMError, ArithmeticError):
    """A Moebius map sends a finite argument to infinity where a finite value is needed."""


class DegenerateError(RPFBMError, ValueError):
    """Points that must be mutually distinct coincide."""


class InvariantError(RPFBMError, ValueError):
    pass


class NotAffineError(RPFBMError, ValueError):
    pass


class NormalizationError(RPFBMError, ValueError):
    pass


class StabilizerError(RPFBMError, ValueError):
    pass


class NotNDError(RPFBMError, ValueError):
    pass


class NotPSDError(RPFBMError, ValueError):
    pass


class JitterExceededError(RPFBMError, ArithmeticError):
    pass


class ConvergenceError(RPFBMError, ArithmeticError):
    pass
