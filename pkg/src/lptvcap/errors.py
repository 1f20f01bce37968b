"""Exception types shared across the package."""


class LengthMismatchError(ValueError):
    """A sequence length is incompatible with the requested period."""


class DegeneracyError(ArithmeticError):
    """A covariance or whitening step met a (numerically) singular matrix."""


class ChannelFileError(ValueError):
    """A channel CSV file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(ValueError):
    """Invalid sweep configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
