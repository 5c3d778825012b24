"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Shapes or sizes do not line up."""


class NumericError(ValueError):
    """Non-finite values showed up where finite ones are required."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class DataFormatError(ValueError):
    """Malformed data file; carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvariantError(ValueError):
    """A dataset invariant was violated (e.g. an example with no observed view)."""
