"""Exception hierarchy; the CLI maps each class to an exit code."""


class AhstError(Exception):
    """Base class for package errors."""


class ConfigError(AhstError, ValueError):
    """Invalid run configuration or state specification."""


class GeometryError(AhstError, ValueError):
    """Grid geometry is invalid or incompatible with a kernel table."""


class DegenerateDataError(AhstError, ValueError):
    """Input carries no usable signal (e.g. a black image)."""


class FormatError(AhstError, ValueError):
    """Malformed or truncated file."""


class FitError(AhstError, RuntimeError):
    """A model fit diverged or produced an unacceptable result."""
