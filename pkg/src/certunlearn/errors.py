"""Exception types shared across the package."""


class NumericalFailure(ArithmeticError):
    """A factorization or iteration failed; ``last_iterate`` holds the best effort."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class UnsupportedOracle(NotImplementedError):
    """The loss model has no closed-form minimizer."""


class ParseError(ValueError):
    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


class SchemaError(ValueError):
    pass
