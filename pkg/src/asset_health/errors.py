class DataError(ValueError):
    """Input data violates the schema or a dataset invariant."""


class NumericalError(ArithmeticError):
    """Training diverged or a numerical routine failed."""
