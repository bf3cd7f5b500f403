"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad input: wrong shapes, empty clusters, malformed files."""


class NumericalError(ArithmeticError):
    """A computation could not be carried out reliably (e.g. singular matrix)."""
