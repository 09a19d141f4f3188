"""Exception hierarchy shared by every steffkit module."""


class SteffkitError(Exception):
    """Base class for all library errors."""


class PrecisionMismatch(SteffkitError, ValueError):
    """Operands were created under different precision contexts."""


class DimensionError(SteffkitError, ValueError):
    pass


class SingularOperator(SteffkitError, ArithmeticError):
    """A divided-difference (or weight) matrix is numerically singular."""


class CoincidentComponent(SteffkitError, ArithmeticError):
    """Two points share a component, so a divided difference is undefined."""

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"coincident component at index {index}")


class NonFinite(SteffkitError, ArithmeticError):
    """An iterate overflowed or stopped being a finite number."""


class InsufficientIterates(SteffkitError, ValueError):
    pass


class ZeroIncrement(SteffkitError, ValueError):
    pass


class ParseError(SteffkitError, ValueError):
    """Malformed expression source; ``line`` and ``column`` are 1-based."""

    def __init__(self, message, line=1, column=1):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class UnknownVariable(ParseError):
    pass


class ArityError(SteffkitError, ValueError):
    """Number of expressions does not match the declared dimension."""


class ConfigError(SteffkitError, ValueError):
    pass


class PrecisionExhausted(CoincidentComponent):
    """A residual sank to the working-precision floor, so a shifted point
    ``x + beta F(x)`` coincides with ``x``; more bits are needed."""

    def __init__(self, message=None):
        super().__init__(None, message or "residual reached the working-precision floor")
