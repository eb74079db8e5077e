"""Exception hierarchy shared by all modules and mapped to CLI exit codes."""


class QusoError(Exception):
    """Base class for all package errors."""


class ConfigError(QusoError, ValueError):
    """Invalid input: malformed network, inconsistent layout, bad parameter."""


class NetworkFormatError(ConfigError):
    """A network document could not be parsed."""

    def __init__(self, message, source=None, line=None):
        self.source = source
        self.line = line
        where = ""
        if source is not None:
            where = f"{source}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class ResourceError(QusoError):
    """A requested computation exceeds a configured size guard."""


class ConvergenceError(QusoError):
    """An iterative numerical routine failed to converge.

    ``residual`` carries the last residual so callers can report it.
    """

    def __init__(self, message, residual=None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message)
