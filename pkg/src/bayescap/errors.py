"""Exception types raised across the package."""


class ShapeError(ValueError):
    """Operand dimensions do not agree."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class InvalidSizeError(DomainError):
    """A count argument is zero or negative."""


class NumericalError(ArithmeticError):
    """A computation produced a non-finite value."""


class UnsupportedDimensionError(ValueError):
    """An oracle was asked for a dimension it cannot integrate."""


class DegenerateInputError(ValueError):
    """Input cannot be normalised (zero vector)."""


class FormatError(ValueError):
    """A file does not follow the expected binary or text layout."""


class ConsistencyError(ValueError):
    """Two related inputs disagree with each other."""
