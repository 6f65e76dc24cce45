"""Exception hierarchy shared by the library and the command line."""


class JrdError(Exception):
    """Base class for every error raised by :mod:`jrdiv`."""


class InputError(JrdError, ValueError):
    """Malformed or inconsistent input (shapes, labels, indices)."""


class ParseError(InputError):
    """A data file could not be read into a sample matrix."""


class ConfigurationError(JrdError, ValueError):
    """A valid input combined with an unsupported option set."""


class NumericalError(JrdError, ArithmeticError):
    """Eigensolver failure or a non-finite/degenerate intermediate quantity."""


class DegenerateBandwidthError(NumericalError):
    """A bandwidth heuristic produced zero (all points coincide)."""
