class ContractViolation(ValueError):
    """An operation was called outside its documented preconditions."""


class ResourceLimitError(MemoryError):
    """A requested computation exceeds the configured size budget."""


class QuadratureError(ArithmeticError):
    """A contour integral failed to converge or diverges along a ray."""


class BracketError(ArithmeticError):
    """A sign change could not be bracketed; ``trace`` holds the scan."""

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)
