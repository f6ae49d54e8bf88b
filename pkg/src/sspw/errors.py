"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Inconsistent shapes, out-of-range parameters or mismatched geometries."""


class InvalidDataError(ValueError):
    """Input data that cannot form a histogram (negative, all-zero, empty)."""


class NumericalError(RuntimeError):
    """A solver failed to terminate; ``diagnostics`` holds solver state."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class EmptyClusterError(ValueError):
    """A barycenter was requested for a cluster with no members."""


class ParseError(ValueError):
    """Malformed dataset or matrix file."""

    def __init__(self, message, line=None, field=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field is not None:
            loc.append(f"field {field!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.line = line
        self.field = field
