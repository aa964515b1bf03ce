"""Exception types.  The CLI maps these to exit codes 1 and 2."""


class ValidationError(ValueError):
    """A configuration or geometry invariant is violated."""


class NumericalError(ArithmeticError):
    """A linear solve or objective evaluation failed numerically."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition
