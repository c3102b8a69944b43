"""Exception types raised across the package."""


class VarqaError(Exception):
    """Base class for all package errors."""


class ParseError(VarqaError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ImaginaryResidue(VarqaError, ValueError):
    """A coefficient or matrix element that should be real has an imaginary part."""


class DimensionTooLarge(VarqaError, ValueError):
    pass


class NonUnitState(VarqaError, ValueError):
    pass


class ShapeError(VarqaError, ValueError):
    pass


class EmptyDistribution(VarqaError, ValueError):
    pass


class BudgetExceeded(VarqaError, ValueError):
    pass


class UnsupportedConversion(VarqaError, ValueError):
    pass
